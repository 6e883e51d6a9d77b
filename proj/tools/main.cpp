// combo-kernel-lab: drug-combination ADR prediction pipeline.
//
// Subcommands wrap the library stages one to one: synth -> ingest ->
// dataset -> sds -> kernel -> cv -> report. Each takes a flat key = value
// config file; a few common settings can be overridden on the command line.
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ckl/pipeline.hpp"

namespace {

using namespace ckl;

void ensure_out_dir(const RunConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw IoFailure("cannot create output directory " + cfg.out_dir);
}

int cmd_synth(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    SynthResult synth = synth_generate(cfg.synth);
    write_events_csv(cfg.out_dir + "/events.csv", synth.events, synth.drugs);
    std::ofstream risky(cfg.out_dir + "/risky_drugs.txt");
    for (int d : synth.risky_drugs) risky << synth.drugs.id(d) << '\n';

    std::int64_t cases = 0;
    for (const EventRecord& ev : synth.events) cases += ev.adr ? 1 : 0;
    std::cout << "wrote " << synth.events.size() << " events (" << cases << " case, "
              << (synth.events.size() - cases) << " control) over " << synth.drugs.size()
              << " drugs to " << cfg.out_dir << "/events.csv\n";
    std::cout << "risky drugs: " << synth.risky_drugs.size() << " (listed in risky_drugs.txt)\n";
    return 0;
}

int cmd_ingest(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    EventLog log = read_events_csv(cfg.events_path);
    std::int64_t cases = 0;
    for (const EventRecord& ev : log.events) cases += ev.adr ? 1 : 0;

    std::ofstream f(cfg.out_dir + "/drugs.tsv");
    for (int i = 0; i < log.drugs.size(); ++i) f << i << '\t' << log.drugs.id(i) << '\n';

    std::cout << "events: " << log.events.size() << " (" << cases << " case, "
              << (log.events.size() - cases) << " control)\n";
    std::cout << "drugs: " << log.drugs.size() << " (index map in drugs.tsv)\n";
    return 0;
}

int cmd_dataset(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    EventLog log = read_events_csv(cfg.events_path);
    std::vector<ComboStats> stats = mine(log.events);
    Partitions parts = partition(stats);
    BuiltDataset built = build_dataset(parts, cfg.prune);
    write_dataset_tsv(cfg.out_dir + "/dataset.tsv", built.instances, log.drugs);

    std::cout << "distinct combinations: " << stats.size() << '\n';
    std::cout << "quadrants: M+ " << parts.m_plus.size() << ", M0 " << parts.m_zero.size()
              << ", N0 " << parts.n_zero.size() << ", N- " << parts.n_minus.size() << '\n';
    if (parts.excluded_or_one > 0)
        std::cout << "excluded (OR exactly 1): " << parts.excluded_or_one << '\n';
    if (parts.excluded_undefined_or > 0)
        std::cout << "excluded (OR undefined): " << parts.excluded_undefined_or << '\n';
    std::cout << "dataset instances: " << built.instances.size() << " -> dataset.tsv\n";
    for (const std::string& w : built.warnings) std::cout << "warning: " << w << '\n';
    return 0;
}

int cmd_sds(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    EventLog log = read_events_csv(cfg.events_path);
    SymmetricMatrix sds;
    if (cfg.kernel.sds_kind == SdsKind::SDS_2D) {
        auto fps = read_fingerprints(cfg.fingerprints_path);
        sds = sds_matrix_2d(log.drugs, fps);
    } else if (cfg.kernel.sds_kind == SdsKind::SDS_CM) {
        sds = sds_matrix_cm(log.events, log.drugs.size());
    } else {
        throw ConfigInvalid("sds subcommand needs sds = 2d or cm");
    }
    std::string path = cfg.out_dir + "/sds_" + to_string(cfg.kernel.sds_kind) + ".csv";
    write_matrix_csv(path, sds);
    std::cout << "wrote " << sds.size() << "x" << sds.size() << " sds matrix to " << path << '\n';
    return 0;
}

int cmd_kernel(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    EventLog log = read_events_csv(cfg.events_path);
    std::vector<LabeledInstance> dataset = build_dataset_from_config(cfg, log, nullptr);

    std::vector<DrugCombination> instances;
    for (const LabeledInstance& inst : dataset) instances.push_back(inst.combination);
    SymmetricMatrix gram = build_kernel_gram(cfg, log, instances);
    KernelMatrix repaired = psd_repair(gram, cfg.kernel.psd_tolerance);

    std::string name = to_string(cfg.kernel.family);
    if (cfg.kernel.sds_kind != SdsKind::NONE)
        name += std::string("_") + to_string(cfg.kernel.sds_kind);
    std::string path = cfg.out_dir + "/kernel_" + name + ".csv";
    write_matrix_csv(path, repaired.values);
    std::cout << "wrote " << repaired.values.size() << "x" << repaired.values.size()
              << " kernel to " << path << " (psd shift " << format_double(repaired.shift)
              << ")\n";
    return 0;
}

int cmd_cv(const RunConfig& cfg) {
    ensure_out_dir(cfg);
    PipelineResult result = run_cv_pipeline(cfg);
    write_cv_report(cfg.out_dir + "/cv_run.txt", result.report);
    emit_report(cfg.out_dir, result.report, result.dataset, result.drugs, result.dmyo,
                result.have_dmyo);

    const MetricsReport& m = result.report.mean;
    std::cout << "cv (" << result.report.kernel_name;
    if (result.report.sds_name != std::string("none")) std::cout << "+" << result.report.sds_name;
    std::cout << ", " << cfg.folds << " folds, seed " << cfg.seed << "):\n";
    std::cout << "  mean accuracy  " << format_double(m.accuracy) << '\n';
    std::cout << "  mean precision " << format_double(m.precision) << '\n';
    std::cout << "  mean recall    " << format_double(m.recall) << '\n';
    std::cout << "  mean f1        " << format_double(m.f1) << '\n';
    std::cout << "  mean auc       " << (m.auc ? format_double(*m.auc) : "NA") << '\n';
    for (const std::string& w : result.report.warnings) std::cout << "warning: " << w << '\n';
    std::cout << "reports in " << cfg.out_dir << '\n';
    return 0;
}

int cmd_report(const RunConfig& cfg) {
    EventLog log = read_events_csv(cfg.events_path);
    std::vector<LabeledInstance> dataset = build_dataset_from_config(cfg, log, nullptr);
    CvReport report = read_cv_report(cfg.out_dir + "/cv_run.txt");
    std::unordered_set<int> dmyo;
    bool have_dmyo = !cfg.dmyo_path.empty();
    if (have_dmyo) dmyo = read_dmyo(cfg.dmyo_path, log.drugs);
    emit_report(cfg.out_dir, report, dataset, log.drugs, dmyo, have_dmyo);
    std::cout << "re-emitted reports in " << cfg.out_dir << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"drug-combination ADR prediction with combination kernels"};
    app.require_subcommand(1);

    std::string config_path;
    std::string kernel_override, sds_override, psd_mode_override, out_override;
    std::int64_t seed_override = -1;
    int folds_override = -1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "flat key = value config file")->required();
        sub->add_option("--seed", seed_override, "override the run seed");
        sub->add_option("--kernel", kernel_override, "override kernel: gm|cd1|cd2|ds|pb");
        sub->add_option("--sds", sds_override, "override drug similarity: 2d|cm");
        sub->add_option("--psd-mode", psd_mode_override, "override psd mode: full|train-only");
        sub->add_option("--folds", folds_override, "override fold count");
        sub->add_option("--out", out_override, "override output directory");
    };

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic event log");
    CLI::App* ingest = app.add_subcommand("ingest", "parse an event log and report counts");
    CLI::App* dataset = app.add_subcommand("dataset", "mine, partition and prune a dataset");
    CLI::App* sds = app.add_subcommand("sds", "build a drug-drug similarity matrix");
    CLI::App* kernel = app.add_subcommand("kernel", "build a PSD-repaired combination kernel");
    CLI::App* cv = app.add_subcommand("cv", "run cross-validated training and reports");
    CLI::App* report = app.add_subcommand("report", "re-emit reports from a saved cv run");
    for (CLI::App* sub : {synth, ingest, dataset, sds, kernel, cv, report}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        ckl::RunConfig cfg = ckl::load_config(config_path);
        if (seed_override >= 0) {
            cfg.seed = static_cast<std::uint64_t>(seed_override);
            cfg.synth.seed = cfg.seed;
        }
        if (folds_override > 0) cfg.folds = folds_override;
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (!kernel_override.empty()) {
            if (kernel_override == "gm") cfg.kernel.family = ckl::KernelFamily::GM;
            else if (kernel_override == "cd1") cfg.kernel.family = ckl::KernelFamily::CD1;
            else if (kernel_override == "cd2") cfg.kernel.family = ckl::KernelFamily::CD2;
            else if (kernel_override == "ds") cfg.kernel.family = ckl::KernelFamily::DS;
            else if (kernel_override == "pb") cfg.kernel.family = ckl::KernelFamily::PB;
            else throw ckl::ConfigInvalid("unknown kernel family: " + kernel_override);
        }
        if (!sds_override.empty()) {
            if (sds_override == "2d") cfg.kernel.sds_kind = ckl::SdsKind::SDS_2D;
            else if (sds_override == "cm") cfg.kernel.sds_kind = ckl::SdsKind::SDS_CM;
            else if (sds_override == "none") cfg.kernel.sds_kind = ckl::SdsKind::NONE;
            else throw ckl::ConfigInvalid("unknown sds kind: " + sds_override);
        }
        if (!psd_mode_override.empty()) {
            if (psd_mode_override == "full") cfg.psd_mode = ckl::PsdMode::FULL_MATRIX;
            else if (psd_mode_override == "train-only") cfg.psd_mode = ckl::PsdMode::TRAIN_ONLY;
            else throw ckl::ConfigInvalid("psd_mode must be full or train-only");
        }
        // The sds subcommand builds a similarity matrix on its own, so it
        // keeps whatever sds kind the config names even for cd kernels.
        if (!sds->parsed()) cfg.finalize_kernel();

        if (synth->parsed()) return cmd_synth(cfg);
        if (ingest->parsed()) return cmd_ingest(cfg);
        if (dataset->parsed()) return cmd_dataset(cfg);
        if (sds->parsed()) return cmd_sds(cfg);
        if (kernel->parsed()) return cmd_kernel(cfg);
        if (cv->parsed()) return cmd_cv(cfg);
        if (report->parsed()) return cmd_report(cfg);
        return 1;
    } catch (const ckl::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const ckl::ComputeError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
