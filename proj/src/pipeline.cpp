#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "ckl/pipeline.hpp"
#include "ckl/rand.hpp"

namespace ckl {

namespace {

std::vector<std::vector<int>> make_folds(const std::vector<int>& labels, int folds,
                                         std::uint64_t seed) {
    const int n = static_cast<int>(labels.size());
    if (n < folds) throw ValidationError("fewer instances than folds");

    std::mt19937_64 rng(seed);
    for (int attempt = 0; attempt < 20; ++attempt) {
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        portable_shuffle(order, rng);

        std::vector<std::vector<int>> fold_sets(folds);
        for (int f = 0; f < folds; ++f) {
            int lo = static_cast<int>(static_cast<std::int64_t>(n) * f / folds);
            int hi = static_cast<int>(static_cast<std::int64_t>(n) * (f + 1) / folds);
            fold_sets[f].assign(order.begin() + lo, order.begin() + hi);
            std::sort(fold_sets[f].begin(), fold_sets[f].end());
        }

        bool ok = true;
        for (const auto& fs : fold_sets) {
            bool pos = false, neg = false;
            for (int idx : fs) (labels[idx] > 0 ? pos : neg) = true;
            if (!pos || !neg) {
                ok = false;
                break;
            }
        }
        if (ok) return fold_sets;
    }
    throw DegenerateFolds();
}

MetricsReport mean_metrics(const std::vector<MetricsReport>& per_fold) {
    MetricsReport m;
    const double k = static_cast<double>(per_fold.size());
    double auc_acc = 0.0;
    bool auc_all = true;
    for (const MetricsReport& r : per_fold) {
        m.accuracy += r.accuracy / k;
        m.precision += r.precision / k;
        m.recall += r.recall / k;
        m.f1 += r.f1 / k;
        m.tp += r.tp;
        m.fp += r.fp;
        m.tn += r.tn;
        m.fn += r.fn;
        m.precision_defined = m.precision_defined && r.precision_defined;
        m.recall_defined = m.recall_defined && r.recall_defined;
        m.f1_defined = m.f1_defined && r.f1_defined;
        if (r.auc)
            auc_acc += *r.auc / k;
        else
            auc_all = false;
    }
    if (auc_all && !per_fold.empty()) m.auc = auc_acc;
    return m;
}

TrainResult train_svm_block(const SymmetricMatrix& gram, const std::vector<int>& idx,
                            const std::vector<int>& labels, const TrainConfig& cfg) {
    return train(gram.submatrix(idx), labels, cfg);
}

// Mean AUC of an inner 4-fold cross validation on the training block only.
double inner_cv_auc(const SymmetricMatrix& train_gram, const std::vector<int>& labels,
                    const TrainConfig& svm_cfg, std::uint64_t seed) {
    const int inner_folds = 4;
    std::vector<std::vector<int>> folds = make_folds(labels, inner_folds, seed);
    double acc = 0.0;
    int used = 0;
    for (int f = 0; f < inner_folds; ++f) {
        std::vector<int> test = folds[f], train_idx;
        for (int g = 0; g < inner_folds; ++g)
            if (g != f) train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
        std::sort(train_idx.begin(), train_idx.end());

        std::vector<int> train_labels, test_labels;
        for (int i : train_idx) train_labels.push_back(labels[i]);
        for (int i : test) test_labels.push_back(labels[i]);

        TrainResult r = train_svm_block(train_gram, train_idx, train_labels, svm_cfg);
        std::vector<double> scores =
            decision_values(r.model, train_gram.rows(test, train_idx));
        MetricsReport m = classification_metrics(scores, test_labels);
        if (m.auc) {
            acc += *m.auc;
            ++used;
        }
    }
    return used > 0 ? acc / used : 0.0;
}

} // namespace

CvReport cv_run(const std::vector<LabeledInstance>& dataset, const SymmetricMatrix& raw_gram,
                const CvParams& params) {
    const int n = static_cast<int>(dataset.size());
    if (raw_gram.size() != n) throw ShapeMismatch();
    if (params.folds < 2) throw ConfigInvalid("folds must be at least 2");

    std::vector<int> labels(n);
    bool pos = false, neg = false;
    for (int i = 0; i < n; ++i) {
        labels[i] = dataset[i].label;
        (labels[i] > 0 ? pos : neg) = true;
    }
    if (!pos || !neg) throw SingleClassTrainingSet();

    CvReport report;
    report.folds = params.folds;
    report.seed = params.seed;
    report.psd_mode = params.psd_mode;
    report.svm_c = params.svm.C;
    report.predictions.resize(n);

    std::vector<std::vector<int>> fold_sets = make_folds(labels, params.folds, params.seed);

    SymmetricMatrix full_repaired;
    if (params.psd_mode == PsdMode::FULL_MATRIX) {
        KernelMatrix km = psd_repair(raw_gram, params.psd_tolerance);
        full_repaired = std::move(km.values);
        report.psd_shift = km.shift;
    }

    for (int f = 0; f < params.folds; ++f) {
        const std::vector<int>& test = fold_sets[f];
        std::vector<int> train_idx;
        for (int g = 0; g < params.folds; ++g)
            if (g != f) train_idx.insert(train_idx.end(), fold_sets[g].begin(), fold_sets[g].end());
        std::sort(train_idx.begin(), train_idx.end());

        std::vector<int> train_labels, test_labels;
        train_labels.reserve(train_idx.size());
        for (int i : train_idx) train_labels.push_back(labels[i]);
        for (int i : test) test_labels.push_back(labels[i]);

        SymmetricMatrix train_block;
        Matrix test_rows;
        if (params.psd_mode == PsdMode::FULL_MATRIX) {
            train_block = full_repaired.submatrix(train_idx);
            test_rows = full_repaired.rows(test, train_idx);
        } else {
            KernelMatrix km = psd_repair(raw_gram.submatrix(train_idx), params.psd_tolerance);
            train_block = std::move(km.values);
            report.fold_shifts.push_back(km.shift);
            test_rows = raw_gram.rows(test, train_idx);
        }

        TrainConfig svm_cfg = params.svm;
        if (!params.c_grid.empty()) {
            // Inner model selection sees training folds only.
            double best_auc = -1.0;
            double best_c = svm_cfg.C;
            for (double c : params.c_grid) {
                TrainConfig probe = svm_cfg;
                probe.C = c;
                std::uint64_t inner_seed = params.seed ^ (0x9e3779b97f4a7c15ULL * (f + 1));
                double auc = 0.0;
                try {
                    auc = inner_cv_auc(train_block, train_labels, probe, inner_seed);
                } catch (const ValidationError&) {
                    report.warnings.push_back("fold " + std::to_string(f + 1) +
                                              ": inner folds degenerate, keeping default C");
                    break;
                } catch (const DegenerateFolds&) {
                    report.warnings.push_back("fold " + std::to_string(f + 1) +
                                              ": inner folds degenerate, keeping default C");
                    break;
                }
                if (auc > best_auc + 1e-12 || (auc > best_auc - 1e-12 && c < best_c)) {
                    best_auc = auc;
                    best_c = c;
                }
            }
            svm_cfg.C = best_c;
        }

        TrainResult trained = train(train_block, train_labels, svm_cfg);
        if (!trained.converged)
            report.warnings.push_back("fold " + std::to_string(f + 1) +
                                      ": SMO stopped at max_passes with gap " +
                                      format_double(trained.kkt_violation));

        std::vector<double> scores = decision_values(trained.model, test_rows);
        for (std::size_t t = 0; t < test.size(); ++t)
            report.predictions[test[t]] = FoldPrediction{test[t], f, scores[t]};

        report.per_fold.push_back(classification_metrics(scores, test_labels));
    }

    report.mean = mean_metrics(report.per_fold);
    return report;
}

std::vector<LabeledInstance> build_dataset_from_config(const RunConfig& cfg, const EventLog& log,
                                                       std::vector<std::string>* warnings) {
    if (!cfg.dataset_path.empty()) return read_dataset_tsv(cfg.dataset_path, log.drugs);
    std::vector<ComboStats> stats = mine(log.events);
    Partitions parts = partition(stats);
    BuiltDataset built = build_dataset(parts, cfg.prune);
    if (warnings)
        warnings->insert(warnings->end(), built.warnings.begin(), built.warnings.end());
    return std::move(built.instances);
}

SymmetricMatrix build_kernel_gram(const RunConfig& cfg, const EventLog& log,
                                  const std::vector<DrugCombination>& instances) {
    cfg.kernel.validate();
    const SymmetricMatrix* sds_ptr = nullptr;
    SymmetricMatrix sds;
    if (cfg.kernel.sds_kind != SdsKind::NONE) {
        if (cfg.kernel.sds_kind == SdsKind::SDS_2D) {
            auto fps = read_fingerprints(cfg.fingerprints_path);
            sds = sds_matrix_2d(log.drugs, fps);
        } else {
            sds = sds_matrix_cm(log.events, log.drugs.size());
        }
        // GM costs need raw similarities in [0,1]; DS and PB build on a
        // PSD-repaired similarity.
        if (cfg.kernel.family == KernelFamily::DS || cfg.kernel.family == KernelFamily::PB)
            sds = psd_repair(sds, cfg.kernel.psd_tolerance).values;
        sds_ptr = &sds;
    }
    return similarity_matrix(instances, cfg.kernel, sds_ptr);
}

PipelineResult run_cv_pipeline(const RunConfig& cfg) {
    cfg.validate();
    PipelineResult result;

    EventLog log = read_events_csv(cfg.events_path);
    std::vector<std::string> warnings;
    result.dataset = build_dataset_from_config(cfg, log, &warnings);
    result.drugs = log.drugs;

    std::vector<DrugCombination> instances;
    instances.reserve(result.dataset.size());
    for (const LabeledInstance& inst : result.dataset) instances.push_back(inst.combination);

    SymmetricMatrix gram = build_kernel_gram(cfg, log, instances);

    CvParams params;
    params.folds = cfg.folds;
    params.seed = cfg.seed;
    params.psd_mode = cfg.psd_mode;
    params.psd_tolerance = cfg.kernel.psd_tolerance;
    params.svm = cfg.svm;
    params.c_grid = cfg.c_grid;

    result.report = cv_run(result.dataset, gram, params);
    result.report.kernel_name = to_string(cfg.kernel.family);
    result.report.sds_name = to_string(cfg.kernel.sds_kind);
    result.report.warnings.insert(result.report.warnings.begin(), warnings.begin(),
                                  warnings.end());

    if (!cfg.dmyo_path.empty()) {
        result.dmyo = read_dmyo(cfg.dmyo_path, log.drugs);
        result.have_dmyo = true;
    }
    return result;
}

namespace {

void write_metrics_lines(std::ostream& os, const std::string& prefix, const MetricsReport& m) {
    os << prefix << "_tp = " << m.tp << '\n';
    os << prefix << "_fp = " << m.fp << '\n';
    os << prefix << "_tn = " << m.tn << '\n';
    os << prefix << "_fn = " << m.fn << '\n';
    os << prefix << "_accuracy = " << format_double(m.accuracy) << '\n';
    os << prefix << "_precision = " << format_double(m.precision) << '\n';
    os << prefix << "_recall = " << format_double(m.recall) << '\n';
    os << prefix << "_f1 = " << format_double(m.f1) << '\n';
    os << prefix << "_auc = " << (m.auc ? format_double(*m.auc) : "NA") << '\n';
    os << prefix << "_defined = " << (m.precision_defined ? 1 : 0) << ','
       << (m.recall_defined ? 1 : 0) << ',' << (m.f1_defined ? 1 : 0) << '\n';
}

void write_report_header(std::ostream& os, const CvReport& r) {
    os << "kernel = " << r.kernel_name << '\n';
    os << "sds = " << r.sds_name << '\n';
    os << "folds = " << r.folds << '\n';
    os << "seed = " << r.seed << '\n';
    os << "svm_c = " << format_double(r.svm_c) << '\n';
    os << "psd_mode = " << to_string(r.psd_mode) << '\n';
    os << "psd_shift = " << format_double(r.psd_shift) << '\n';
    os << "fold_shifts = ";
    if (r.fold_shifts.empty()) {
        os << "NA";
    } else {
        for (std::size_t i = 0; i < r.fold_shifts.size(); ++i) {
            if (i) os << ',';
            os << format_double(r.fold_shifts[i]);
        }
    }
    os << '\n';
    os << "warnings = " << r.warnings.size() << '\n';
    for (std::size_t i = 0; i < r.warnings.size(); ++i)
        os << "warning_" << (i + 1) << " = " << r.warnings[i] << '\n';
    for (std::size_t f = 0; f < r.per_fold.size(); ++f)
        write_metrics_lines(os, "fold_" + std::to_string(f + 1), r.per_fold[f]);
    write_metrics_lines(os, "mean", r.mean);
}

} // namespace

void write_cv_report(const std::string& path, const CvReport& report) {
    std::ofstream f(path);
    if (!f) throw IoFailure("cannot open " + path + " for writing");
    f << "format = ckl-cv-report-1\n";
    write_report_header(f, report);
    f << "predictions = " << report.predictions.size() << '\n';
    for (const FoldPrediction& p : report.predictions)
        f << p.instance << '\t' << p.fold << '\t' << format_double(p.score) << '\n';
    if (!f) throw IoFailure("error writing " + path);
}

namespace {

std::string trim_ws(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

struct KeyValueReader {
    std::ifstream f;
    explicit KeyValueReader(const std::string& path) : f(path) {
        if (!f) throw IoFailure("cannot open " + path + " for reading");
    }
    // Reads `key = value`; throws when the key does not match.
    std::string expect(const std::string& key) {
        std::string line;
        if (!std::getline(f, line)) throw ValidationError("truncated cv report, expected " + key);
        std::size_t eq = line.find('=');
        if (eq == std::string::npos || trim_ws(line.substr(0, eq)) != key)
            throw ValidationError("malformed cv report line, expected " + key + ": " + line);
        return trim_ws(line.substr(eq + 1));
    }
};

MetricsReport read_metrics_lines(KeyValueReader& kv, const std::string& prefix) {
    MetricsReport m;
    m.tp = std::stoll(kv.expect(prefix + "_tp"));
    m.fp = std::stoll(kv.expect(prefix + "_fp"));
    m.tn = std::stoll(kv.expect(prefix + "_tn"));
    m.fn = std::stoll(kv.expect(prefix + "_fn"));
    m.accuracy = std::stod(kv.expect(prefix + "_accuracy"));
    m.precision = std::stod(kv.expect(prefix + "_precision"));
    m.recall = std::stod(kv.expect(prefix + "_recall"));
    m.f1 = std::stod(kv.expect(prefix + "_f1"));
    std::string auc = kv.expect(prefix + "_auc");
    if (auc != "NA") m.auc = std::stod(auc);
    std::string defined = kv.expect(prefix + "_defined");
    if (defined.size() == 5) {
        m.precision_defined = defined[0] == '1';
        m.recall_defined = defined[2] == '1';
        m.f1_defined = defined[4] == '1';
    }
    return m;
}

} // namespace

CvReport read_cv_report(const std::string& path) {
    KeyValueReader kv(path);
    if (kv.expect("format") != "ckl-cv-report-1")
        throw ValidationError(path + ": unknown cv report format");

    CvReport r;
    r.kernel_name = kv.expect("kernel");
    r.sds_name = kv.expect("sds");
    r.folds = static_cast<int>(std::stoll(kv.expect("folds")));
    r.seed = static_cast<std::uint64_t>(std::stoull(kv.expect("seed")));
    r.svm_c = std::stod(kv.expect("svm_c"));
    std::string mode = kv.expect("psd_mode");
    r.psd_mode = mode == "full" ? PsdMode::FULL_MATRIX : PsdMode::TRAIN_ONLY;
    r.psd_shift = std::stod(kv.expect("psd_shift"));
    std::string shifts = kv.expect("fold_shifts");
    if (shifts != "NA") {
        std::size_t start = 0;
        while (start <= shifts.size()) {
            std::size_t pos = shifts.find(',', start);
            std::string part =
                pos == std::string::npos ? shifts.substr(start) : shifts.substr(start, pos - start);
            r.fold_shifts.push_back(std::stod(part));
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
    }
    int n_warnings = static_cast<int>(std::stoll(kv.expect("warnings")));
    for (int i = 0; i < n_warnings; ++i)
        r.warnings.push_back(kv.expect("warning_" + std::to_string(i + 1)));
    for (int f = 0; f < r.folds; ++f)
        r.per_fold.push_back(read_metrics_lines(kv, "fold_" + std::to_string(f + 1)));
    r.mean = read_metrics_lines(kv, "mean");

    int n_pred = static_cast<int>(std::stoll(kv.expect("predictions")));
    r.predictions.reserve(n_pred);
    std::string line;
    for (int i = 0; i < n_pred; ++i) {
        if (!std::getline(kv.f, line)) throw ValidationError(path + ": truncated predictions");
        FoldPrediction p;
        if (std::sscanf(line.c_str(), "%d\t%d\t%lf", &p.instance, &p.fold, &p.score) != 3)
            throw ValidationError(path + ": malformed prediction line: " + line);
        r.predictions.push_back(p);
    }
    return r;
}

namespace {

struct Row {
    int instance;
    double score;
};

std::string drugs_string(const LabeledInstance& inst, const DrugRegistry& drugs) {
    std::string out;
    for (std::size_t i = 0; i < inst.combination.drugs.size(); ++i) {
        if (i) out += ';';
        out += drugs.id(inst.combination.drugs[i]);
    }
    return out;
}

double dmyo_pct(const LabeledInstance& inst, const std::unordered_set<int>& dmyo) {
    int hits = 0;
    for (int d : inst.combination.drugs)
        if (dmyo.count(d)) ++hits;
    return 100.0 * static_cast<double>(hits) / static_cast<double>(inst.combination.order());
}

void write_table(const std::string& path, const std::vector<Row>& rows,
                 const std::vector<LabeledInstance>& dataset, const DrugRegistry& drugs) {
    std::ofstream f(path);
    if (!f) throw IoFailure("cannot open " + path + " for writing");
    f << "rank\tprd\tfrq\tOR\tdrugs\n";
    int rank = 1;
    for (const Row& row : rows) {
        const LabeledInstance& inst = dataset[row.instance];
        f << rank++ << '\t' << format_double(row.score) << '\t' << inst.frequency << '\t'
          << (inst.odds_ratio ? format_double(*inst.odds_ratio) : "NA") << '\t'
          << drugs_string(inst, drugs) << '\n';
    }
    if (!f) throw IoFailure("error writing " + path);
}

void write_enrichment_line(std::ostream& os, const std::string& key,
                           const std::vector<LabeledInstance>& subset,
                           const std::unordered_set<int>& dmyo, bool have_dmyo) {
    os << key << " = ";
    if (!have_dmyo) {
        os << "NA\n";
        return;
    }
    std::optional<double> v = dmyo_enrichment(subset, dmyo);
    os << (v ? format_double(*v) : "NA") << '\n';
}

} // namespace

void emit_report(const std::string& out_dir, const CvReport& report,
                 const std::vector<LabeledInstance>& dataset, const DrugRegistry& drugs,
                 const std::unordered_set<int>& dmyo, bool have_dmyo) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoFailure("cannot create output directory " + out_dir);

    if (report.predictions.size() != dataset.size())
        throw ShapeMismatch();

    {
        std::ofstream f(out_dir + "/report.txt");
        if (!f) throw IoFailure("cannot open report.txt for writing");
        write_report_header(f, report);
        if (!f) throw IoFailure("error writing report.txt");
    }

    // Stable prd-descending order: ties keep dataset order.
    std::vector<Row> by_score;
    by_score.reserve(dataset.size());
    for (const FoldPrediction& p : report.predictions)
        by_score.push_back(Row{p.instance, p.score});
    std::stable_sort(by_score.begin(), by_score.end(),
                     [](const Row& a, const Row& b) { return a.score > b.score; });

    {
        std::ofstream f(out_dir + "/predictions.tsv");
        if (!f) throw IoFailure("cannot open predictions.tsv for writing");
        f << "rank\tprd\tfrq\tOR\tsource\tdrugs\tdmyo_pct\n";
        int rank = 1;
        for (const Row& row : by_score) {
            const LabeledInstance& inst = dataset[row.instance];
            f << rank++ << '\t' << format_double(row.score) << '\t' << inst.frequency << '\t'
              << (inst.odds_ratio ? format_double(*inst.odds_ratio) : "NA") << '\t'
              << to_string(inst.source) << '\t' << drugs_string(inst, drugs) << '\t'
              << (have_dmyo ? format_double(dmyo_pct(inst, dmyo)) : "NA") << '\n';
        }
        if (!f) throw IoFailure("error writing predictions.tsv");
    }

    const int top_k = 10;
    auto is_positive = [&](int i) { return dataset[i].label > 0; };
    auto predicted_positive = [&](double score) { return score >= 0.0; };

    std::vector<Row> correct_pos, mis_neg;
    std::vector<LabeledInstance> set_pos_all, set_pos_mis, set_neg_all, set_neg_mis;
    std::vector<Row> pos_mis_rows, neg_correct_rows;
    for (const Row& row : by_score) {
        const LabeledInstance& inst = dataset[row.instance];
        bool pred_pos = predicted_positive(row.score);
        if (is_positive(row.instance)) {
            set_pos_all.push_back(inst);
            if (pred_pos) {
                if (static_cast<int>(correct_pos.size()) < top_k) correct_pos.push_back(row);
            } else {
                set_pos_mis.push_back(inst);
                pos_mis_rows.push_back(row);
            }
        } else {
            set_neg_all.push_back(inst);
            if (pred_pos) {
                set_neg_mis.push_back(inst);
                if (static_cast<int>(mis_neg.size()) < top_k) mis_neg.push_back(row);
            } else {
                neg_correct_rows.push_back(row);
            }
        }
    }

    write_table(out_dir + "/top_positive.tsv", correct_pos, dataset, drugs);
    write_table(out_dir + "/top_misclassified_negative.tsv", mis_neg, dataset, drugs);

    // Enrichment rows mirror the report tables: whole classes, all
    // misclassified, the ten most confident mistakes, the ten most
    // confident correct calls.
    auto take_instances = [&](const std::vector<Row>& rows, int k, bool from_back) {
        std::vector<LabeledInstance> subset;
        if (from_back) {
            for (int i = static_cast<int>(rows.size()) - 1; i >= 0 && static_cast<int>(subset.size()) < k; --i)
                subset.push_back(dataset[rows[i].instance]);
        } else {
            for (int i = 0; i < static_cast<int>(rows.size()) && i < k; ++i)
                subset.push_back(dataset[rows[i].instance]);
        }
        return subset;
    };

    std::vector<LabeledInstance> pos_mis_top10 = take_instances(pos_mis_rows, top_k, true);
    std::vector<LabeledInstance> pos_correct_top10;
    for (const Row& r : correct_pos) pos_correct_top10.push_back(dataset[r.instance]);
    std::vector<LabeledInstance> neg_mis_top10;
    for (const Row& r : mis_neg) neg_mis_top10.push_back(dataset[r.instance]);
    std::vector<LabeledInstance> neg_correct_bottom10 = take_instances(neg_correct_rows, top_k, true);

    {
        std::ofstream f(out_dir + "/enrichment.txt");
        if (!f) throw IoFailure("cannot open enrichment.txt for writing");
        write_enrichment_line(f, "positives_all", set_pos_all, dmyo, have_dmyo);
        write_enrichment_line(f, "positives_misclassified", set_pos_mis, dmyo, have_dmyo);
        write_enrichment_line(f, "positives_misclassified_top10", pos_mis_top10, dmyo, have_dmyo);
        write_enrichment_line(f, "positives_correct_top10", pos_correct_top10, dmyo, have_dmyo);
        write_enrichment_line(f, "negatives_all", set_neg_all, dmyo, have_dmyo);
        write_enrichment_line(f, "negatives_misclassified", set_neg_mis, dmyo, have_dmyo);
        write_enrichment_line(f, "negatives_misclassified_top10", neg_mis_top10, dmyo, have_dmyo);
        write_enrichment_line(f, "negatives_correct_bottom10", neg_correct_bottom10, dmyo, have_dmyo);
        if (!f) throw IoFailure("error writing enrichment.txt");
    }
}

} // namespace ckl
