// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion pins its tolerance in code.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ckl/dataset.hpp"
#include "ckl/kernels.hpp"
#include "ckl/linalg.hpp"
#include "ckl/lsap.hpp"
#include "ckl/pipeline.hpp"
#include "ckl/rand.hpp"
#include "ckl/sds.hpp"
#include "ckl/stats.hpp"
#include "ckl/svm.hpp"

using namespace ckl;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
    std::printf("%s %s (%s)\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    if (!ok) ++g_failures;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::string fmt(const char* pattern, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c);
    return buf;
}

// ---------------------------------------------------------------- criteria

void lsap_optimality() {
    Timer timer;
    std::mt19937_64 rng(2024);
    int checked = 0, wrong = 0;
    for (int trial = 0; trial < 250; ++trial) {
        int rows = 1 + static_cast<int>(next_uniform(rng) * 7);
        int cols = 1 + static_cast<int>(next_uniform(rng) * 7);
        CostMatrix c(rows, cols);
        for (double& v : c.values) v = next_uniform(rng);
        if (solve_lsap(c).total_cost != brute_force_lsap(c).total_cost) ++wrong;
        ++checked;
    }
    double secs = timer.seconds();
    report(wrong == 0 && secs < 5.0, "lsap-optimality",
           fmt("%g of 250 matrices exact, %.2fs < 5s", checked - wrong, secs));
}

void psd_repair_contract() {
    Timer timer;
    std::mt19937_64 rng(77);
    int bad = 0;
    for (int trial = 0; trial < 100; ++trial) {
        int n = 2 + static_cast<int>(next_uniform(rng) * 49);
        SymmetricMatrix s(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) s.set(i, j, next_uniform(rng) * 2.0 - 1.0);
        KernelMatrix k = psd_repair(s, 1e-8);
        bool ok = smallest_eigenvalue(k.values) >= -1e-8;
        for (int i = 0; i < n && ok; ++i) {
            if (k.values(i, i) != s(i, i) + k.shift) ok = false;
            for (int j = i + 1; j < n && ok; ++j)
                if (k.values(i, j) != s(i, j)) ok = false;
        }
        if (!ok) ++bad;
    }
    double secs = timer.seconds();
    report(bad == 0 && secs < 10.0, "psd-repair",
           fmt("%g of 100 matrices repaired cleanly, %.2fs < 10s", 100.0 - bad, secs));
}

std::vector<DrugCombination> random_combos(std::mt19937_64& rng, int count, int n_drugs,
                                           int max_order) {
    std::vector<DrugCombination> out;
    while (static_cast<int>(out.size()) < count) {
        std::vector<int> v;
        int k = 1 + static_cast<int>(next_uniform(rng) * max_order);
        for (int i = 0; i < k; ++i) v.push_back(static_cast<int>(next_uniform(rng) * n_drugs));
        out.push_back(canonicalize(v));
    }
    return out;
}

void kernel_validity_without_repair() {
    std::mt19937_64 rng(31);
    auto combos = random_combos(rng, 40, 15, 6);

    KernelSpec cd1{KernelFamily::CD1, SdsKind::NONE};
    double l1 = smallest_eigenvalue(similarity_matrix(combos, cd1, nullptr));
    KernelSpec cd2{KernelFamily::CD2, SdsKind::NONE};
    double l2 = smallest_eigenvalue(similarity_matrix(combos, cd2, nullptr));

    SymmetricMatrix sds(15);
    for (int i = 0; i < 15; ++i)
        for (int j = i + 1; j < 15; ++j) sds.set(i, j, next_uniform(rng));
    for (int i = 0; i < 15; ++i) sds.set(i, i, 1.0);
    sds = psd_repair(sds, 1e-8).values;
    KernelSpec ds{KernelFamily::DS, SdsKind::SDS_CM};
    double l3 = smallest_eigenvalue(similarity_matrix(combos, ds, &sds));

    report(l1 >= -1e-8 && l2 >= -1e-8 && l3 >= -1e-8, "kernel-validity-no-repair",
           fmt("lambda_min cd1 %.2e, cd2 %.2e, ds %.2e >= -1e-8", l1, l2, l3));
}

void sgm_contracts() {
    std::mt19937_64 rng(17);
    SymmetricMatrix sds(14);
    for (int i = 0; i < 14; ++i)
        for (int j = i + 1; j < 14; ++j) sds.set(i, j, next_uniform(rng));
    for (int i = 0; i < 14; ++i) sds.set(i, i, 1.0);

    int self_exact = 0;
    auto combos = random_combos(rng, 100, 14, 7);
    for (const DrugCombination& d : combos)
        if (s_gm(d, d, sds) == static_cast<double>(d.order())) ++self_exact;

    bool symmetric = true, bounded = true;
    for (int t = 0; t < 200; ++t) {
        const DrugCombination& a = combos[static_cast<int>(next_uniform(rng) * combos.size())];
        const DrugCombination& b = combos[static_cast<int>(next_uniform(rng) * combos.size())];
        double ab = s_gm(a, b, sds);
        double ba = s_gm(b, a, sds);
        if (std::fabs(ab - ba) > 1e-12) symmetric = false;
        if (ab < 0 || ab > std::min(a.order(), b.order()) + 1e-12) bounded = false;
    }
    report(self_exact == 100 && symmetric && bounded, "sgm-contracts",
           fmt("self==order %g/100, symmetric, bounded by min order", double(self_exact)));
}

void eigen_cholesky_oracles() {
    std::mt19937_64 rng(5);
    bool ok = true;
    std::string detail = "recon<=1e-7, trace<=1e-8 rel, LLt<=1e-9";
    for (int n : {3, 12, 33, 60}) {
        SymmetricMatrix s(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) s.set(i, j, next_uniform(rng) * 2.0 - 1.0);
        EigenDecomposition e = eigen_symmetric(s);

        double max_entry = 0;
        for (double v : s.data()) max_entry = std::max(max_entry, std::fabs(v));
        double bound = 1e-7 * std::max(1.0, max_entry);
        for (int i = 0; i < n && ok; ++i) {
            for (int j = 0; j < n && ok; ++j) {
                double acc = 0;
                for (int k = 0; k < n; ++k)
                    acc += e.eigenvectors(i, k) * e.eigenvalues[k] * e.eigenvectors(j, k);
                if (std::fabs(acc - s(i, j)) > bound) ok = false;
            }
        }
        double eigen_sum = 0;
        for (double v : e.eigenvalues) eigen_sum += v;
        if (std::fabs(eigen_sum - s.trace()) > 1e-8 * std::max(1.0, std::fabs(s.trace())))
            ok = false;

        // SPD instance for the Cholesky half of the criterion
        SymmetricMatrix spd = psd_repair(s, 1e-8).values;
        spd.add_diagonal(0.5);
        Matrix l = cholesky(spd);
        double spd_norm = 0;
        for (double v : spd.data()) spd_norm = std::max(spd_norm, std::fabs(v));
        for (int i = 0; i < n && ok; ++i) {
            for (int j = 0; j < n && ok; ++j) {
                double acc = 0;
                for (int k = 0; k < n; ++k) acc += l(i, k) * l(j, k);
                if (std::fabs(acc - spd(i, j)) > 1e-9 * spd_norm) ok = false;
            }
        }
        if (!ok) detail = "failed at n=" + std::to_string(n);
    }
    report(ok, "eigen-cholesky-oracles", detail);
}

double auc_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
    double concordant = 0, tied = 0;
    std::int64_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] <= 0) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] > 0) continue;
            ++pairs;
            if (scores[i] > scores[j])
                concordant += 1;
            else if (scores[i] == scores[j])
                tied += 1;
        }
    }
    return (concordant + 0.5 * tied) / static_cast<double>(pairs);
}

void auc_against_enumeration() {
    std::mt19937_64 rng(2718);
    int checked = 0;
    double worst = 0;
    while (checked < 100) {
        int n = 2 + static_cast<int>(next_uniform(rng) * 198);
        std::vector<double> scores;
        std::vector<int> labels;
        bool pos = false, neg = false;
        for (int i = 0; i < n; ++i) {
            scores.push_back(std::floor(next_uniform(rng) * 10.0) / 10.0); // forces ties
            int y = next_uniform(rng) < 0.5 ? +1 : -1;
            (y > 0 ? pos : neg) = true;
            labels.push_back(y);
        }
        if (!pos || !neg) continue;
        ++checked;
        double got = *classification_metrics(scores, labels).auc;
        worst = std::max(worst, std::fabs(got - auc_oracle(scores, labels)));
    }
    report(worst <= 1e-12, "auc-oracle", fmt("max |diff| %.2e over 100 vectors <= 1e-12", worst));
}

void fisher_against_enumeration() {
    // Independent multiplicative-recurrence pmf, then every table with all
    // four margins <= 30.
    double worst = 0;
    double hand = std::fabs(fisher_right_tail(ContingencyTable{3, 1, 1, 3}) - 17.0 / 70.0);
    for (std::int64_t r1 = 0; r1 <= 30; ++r1) {
        for (std::int64_t c1 = 0; c1 <= 30; ++c1) {
            std::int64_t n_lo = std::max(r1, c1);
            std::int64_t n_hi = std::min<std::int64_t>({60, r1 + 30, c1 + 30});
            for (std::int64_t total = n_lo; total <= n_hi; ++total) {
                if (total == 0) continue;
                std::int64_t lo = std::max<std::int64_t>(0, r1 + c1 - total);
                std::int64_t hi = std::min(r1, c1);
                std::vector<double> u{1.0};
                for (std::int64_t x = lo; x < hi; ++x) {
                    double num = static_cast<double>(r1 - x) * static_cast<double>(c1 - x);
                    double den = static_cast<double>(x + 1) *
                                 static_cast<double>(total - r1 - c1 + x + 1);
                    u.push_back(u.back() * num / den);
                }
                double sum = 0;
                for (double v : u) sum += v;

                double tail = 0;
                for (std::int64_t x = hi; x >= lo; --x) {
                    tail += u[x - lo] / sum;
                    ContingencyTable ct{x, r1 - x, c1 - x, total - r1 - c1 + x};
                    double got = fisher_right_tail(ct);
                    double want = std::min(tail, 1.0);
                    worst = std::max(worst, std::fabs(got - want));
                }
            }
        }
    }
    report(worst <= 1e-10 && hand <= 1e-12, "fisher-oracle",
           fmt("max |diff| %.2e <= 1e-10 over all margins <= 30; [[3,1],[1,3]] off by %.1e",
               worst, hand));
}

void svm_correctness() {
    const int n = 40;
    SymmetricMatrix k(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            bool same = (i < n / 2) == (j < n / 2);
            k.set(i, j, i == j ? 1.0 : (same ? 0.9 : 0.05));
        }
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) y[i] = i < n / 2 ? +1 : -1;

    TrainConfig cfg;
    cfg.track_objective = true;
    TrainResult r = train(k, y, cfg);

    Matrix rows(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) rows(i, j) = k(i, j);
    std::vector<double> f = decision_values(r.model, rows);
    int correct = 0;
    for (int i = 0; i < n; ++i) correct += ((f[i] >= 0 ? +1 : -1) == y[i]);

    double alpha_y = 0;
    bool box_ok = true;
    for (int i = 0; i < n; ++i) {
        alpha_y += r.model.alphas[i] * y[i];
        if (r.model.alphas[i] < 0 || r.model.alphas[i] > cfg.C) box_ok = false;
    }

    bool monotone = true;
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
        if (r.objective_trace[i] < r.objective_trace[i - 1] - 1e-12) monotone = false;

    bool ok = correct == n && r.kkt_violation <= 1e-3 &&
              std::fabs(alpha_y) <= 1e-8 * cfg.C * n && box_ok && monotone && r.converged;
    report(ok, "svm-correctness",
           fmt("train acc %g/40, kkt gap %.1e <= 1e-3, |sum alpha*y| %.1e",
               double(correct), r.kkt_violation, std::fabs(alpha_y)));
}

void end_to_end_synthetic() {
    Timer timer;
    SynthConfig sc;
    sc.n_drugs = 60;
    sc.n_events = 2000;
    sc.risky_drug_fraction = 0.15;
    sc.mean_order = 4.0;
    sc.seed = 42;
    SynthResult synth = synth_generate(sc);

    Partitions parts = partition(mine(synth.events));
    PruneConfig pc;
    pc.preset = PrunePreset::CUSTOM;
    pc.top_mplus = 400;
    pc.alpha = 0.05;
    pc.n_nminus = 400;
    BuiltDataset built = build_dataset(parts, pc);

    SymmetricMatrix sds = sds_matrix_cm(synth.events, sc.n_drugs);
    std::vector<DrugCombination> instances;
    for (const LabeledInstance& inst : built.instances) instances.push_back(inst.combination);

    CvParams params;
    params.folds = 5;
    params.seed = 42;

    KernelSpec gm{KernelFamily::GM, SdsKind::SDS_CM};
    CvReport rep_gm = cv_run(built.instances, similarity_matrix(instances, gm, &sds), params);

    KernelSpec cd1{KernelFamily::CD1, SdsKind::NONE};
    CvReport rep_cd1 = cv_run(built.instances, similarity_matrix(instances, cd1, nullptr), params);

    double secs = timer.seconds();
    double auc_gm = rep_gm.mean.auc.value_or(0.0);
    double auc_cd1 = rep_cd1.mean.auc.value_or(0.0);
    report(auc_gm >= 0.90 && auc_gm > auc_cd1 && secs < 120.0, "end-to-end-synthetic",
           fmt("gm+cm auc %.4f >= 0.90, cd1 auc %.4f, %.0fs < 120s", auc_gm, auc_cd1, secs));
}

// Event log whose mined quadrants are large enough for every preset:
// unique drug pairs per combination, planned case/control counts.
std::vector<EventRecord> structured_log() {
    std::vector<EventRecord> events;
    int id = 0;
    auto push = [&](int a, int b, bool adr, int times) {
        for (int t = 0; t < times; ++t)
            events.push_back(EventRecord{"e" + std::to_string(id++), canonicalize({a, b}), adr});
    };
    // pair index -> distinct (a,b) over 130 drugs
    int next = 0;
    auto pair_at = [&](int idx) {
        int a = 0, b = 1;
        int count = 0;
        for (a = 0; a < 130; ++a) {
            int span = 129 - a;
            if (count + span > idx) {
                b = a + 1 + (idx - count);
                return std::pair<int, int>(a, b);
            }
            count += span;
        }
        return std::pair<int, int>(a, b);
    };
    (void)next;

    int idx = 0;
    for (int i = 0; i < 1250; ++i) { // M+: case-only
        auto [a, b] = pair_at(idx++);
        push(a, b, true, 1 + i % 5);
    }
    for (int i = 0; i < 2600; ++i) { // N-: control-only
        auto [a, b] = pair_at(idx++);
        push(a, b, false, 1 + i % 5);
    }
    for (int i = 0; i < 1100; ++i) { // M0: both, strongly case-heavy
        auto [a, b] = pair_at(idx++);
        push(a, b, true, 25 + i % 10);
        push(a, b, false, 2);
    }
    for (int i = 0; i < 1100; ++i) { // N0: both, strongly control-heavy
        auto [a, b] = pair_at(idx++);
        push(a, b, true, 2);
        push(a, b, false, 25 + i % 10);
    }
    return events;
}

void structural_fidelity() {
    std::vector<EventRecord> events = structured_log();
    Partitions parts = partition(mine(events));

    auto count_sources = [](const BuiltDataset& ds) {
        std::map<Source, int> counts;
        for (const LabeledInstance& inst : ds.instances) ++counts[inst.source];
        return counts;
    };

    BuiltDataset dstar = build_dataset(parts, PruneConfig::d_star());
    auto cs = count_sources(dstar);
    bool mzero_ok = true;
    for (const LabeledInstance& inst : dstar.instances)
        if (inst.source == Source::M_ZERO)
            mzero_ok = mzero_ok && inst.odds_ratio && *inst.odds_ratio > 1.0;
    // every built M0 instance must be Fisher-significant
    {
        std::map<std::vector<int>, const ComboStats*> by_combo;
        for (const ComboStats& s : parts.m_zero) by_combo[s.combination.drugs] = &s;
        for (const LabeledInstance& inst : dstar.instances) {
            if (inst.source != Source::M_ZERO) continue;
            const ComboStats* s = by_combo.at(inst.combination.drugs);
            mzero_ok = mzero_ok && s->fisher_p && *s->fisher_p < 0.05;
        }
    }
    bool dstar_ok = cs[Source::M_PLUS] == 1000 && cs[Source::N_MINUS] == 2200 &&
                    cs[Source::N_ZERO] == static_cast<int>(parts.n_zero.size()) && mzero_ok;

    BuiltDataset d4000 = build_dataset(parts, PruneConfig::d4000());
    auto c4 = count_sources(d4000);
    bool d4000_ok = c4[Source::M_PLUS] == 1000 && c4[Source::M_ZERO] == 1000 &&
                    c4[Source::N_ZERO] == 1000 && c4[Source::N_MINUS] == 1000;

    BuiltDataset d2000 = build_dataset(parts, PruneConfig::d2000());
    auto c2 = count_sources(d2000);
    bool d2000_ok = c2[Source::M_PLUS] == 1000 && c2[Source::N_MINUS] == 1000 &&
                    d2000.instances.size() == 2000;

    char buf[160];
    std::snprintf(buf, sizeof(buf), "d*: M+ %d, N- %d, M0 significant %d; d4000 %s; d2000 %s",
                  cs[Source::M_PLUS], cs[Source::N_MINUS], int(mzero_ok),
                  d4000_ok ? "1000 per quadrant" : "WRONG", d2000_ok ? "1000+1000" : "WRONG");
    report(dstar_ok && d4000_ok && d2000_ok, "structural-fidelity", buf);
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void determinism() {
    fs::path tmp = fs::temp_directory_path() / "ckl_acceptance_det";
    fs::remove_all(tmp);
    fs::create_directories(tmp);

    SynthConfig sc;
    sc.n_drugs = 40;
    sc.n_events = 1500;
    sc.risky_drug_fraction = 0.2;
    sc.mean_order = 3.5;
    sc.seed = 11;
    SynthResult synth = synth_generate(sc);
    write_events_csv((tmp / "events.csv").string(), synth.events, synth.drugs);
    {
        std::ofstream dmyo(tmp / "dmyo.txt");
        for (int d : synth.risky_drugs) dmyo << synth.drugs.id(d) << '\n';
    }
    {
        std::ofstream cfg(tmp / "run.cfg");
        cfg << "events = " << (tmp / "events.csv").string() << "\n"
            << "dmyo = " << (tmp / "dmyo.txt").string() << "\n"
            << "kernel = gm\nsds = cm\nfolds = 5\nseed = 11\n"
            << "preset = custom\ntop_mplus = 150\nn_nminus = 150\nalpha = 0.05\n";
    }

    const char* names[] = {"cv_run.txt",       "report.txt",    "predictions.tsv",
                           "top_positive.tsv", "enrichment.txt", "top_misclassified_negative.tsv"};
    for (const char* dir : {"out1", "out2"}) {
        RunConfig cfg = load_config((tmp / "run.cfg").string());
        cfg.out_dir = (tmp / dir).string();
        fs::create_directories(cfg.out_dir);
        PipelineResult result = run_cv_pipeline(cfg);
        write_cv_report(cfg.out_dir + "/cv_run.txt", result.report);
        emit_report(cfg.out_dir, result.report, result.dataset, result.drugs, result.dmyo,
                    result.have_dmyo);
    }

    bool identical = true;
    std::string first_diff = "all files byte-identical";
    for (const char* name : names) {
        std::string a = slurp((tmp / "out1" / name).string());
        std::string b = slurp((tmp / "out2" / name).string());
        if (a.empty() || a != b) {
            identical = false;
            first_diff = std::string(name) + " differs or is empty";
            break;
        }
    }
    fs::remove_all(tmp);
    report(identical, "determinism", first_diff);
}

} // namespace

int main() {
    Timer total;
    lsap_optimality();
    psd_repair_contract();
    kernel_validity_without_repair();
    sgm_contracts();
    eigen_cholesky_oracles();
    auc_against_enumeration();
    fisher_against_enumeration();
    svm_correctness();
    end_to_end_synthetic();
    structural_fidelity();
    determinism();
    std::printf("%d of 11 criteria passed in %.0fs\n", 11 - g_failures, total.seconds());
    return g_failures == 0 ? 0 : 1;
}
