// Pipeline orchestration: run configuration, file formats, cross-validated
// training and report emission.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "ckl/core.hpp"
#include "ckl/dataset.hpp"
#include "ckl/kernels.hpp"
#include "ckl/sds.hpp"
#include "ckl/stats.hpp"
#include "ckl/svm.hpp"

namespace ckl {

struct IoFailure : ComputeError {
    explicit IoFailure(const std::string& what) : ComputeError(what) {}
};
struct DegenerateFolds : ComputeError {
    DegenerateFolds()
        : ComputeError("could not form folds with both classes after 20 reshuffles") {}
};

enum class PsdMode { FULL_MATRIX, TRAIN_ONLY };

const char* to_string(PsdMode m);
const char* to_string(SdsKind k);

struct RunConfig {
    std::string events_path;
    std::string fingerprints_path;
    std::string dmyo_path;
    std::string dataset_path; // pre-built dataset TSV; empty = build from events
    std::string out_dir = ".";

    KernelSpec kernel;
    TrainConfig svm;
    std::vector<double> c_grid; // empty = no inner C selection

    int folds = 5;
    std::uint64_t seed = 0;
    PsdMode psd_mode = PsdMode::FULL_MATRIX;

    PruneConfig prune = PruneConfig::d_star();
    SynthConfig synth;

    void validate() const;
    void finalize_kernel(); // CD1/CD2 drop any configured sds kind
};

// Flat "key = value" configuration file; '#' starts a comment.
RunConfig load_config(const std::string& path);

std::string format_double(double v); // 17 significant digits, round-trip exact

// --- file formats (all UTF-8, LF line endings) ---

struct EventLog {
    std::vector<EventRecord> events;
    DrugRegistry drugs;
};

// header `event_id,adr,drugs`; adr in {0,1}; drugs `id;id;...`
EventLog read_events_csv(const std::string& path);
void write_events_csv(const std::string& path, const std::vector<EventRecord>& events,
                      const DrugRegistry& drugs);

// first line n, then n lines of n comma-separated values
SymmetricMatrix read_matrix_csv(const std::string& path);
void write_matrix_csv(const std::string& path, const SymmetricMatrix& m);

// one line per drug: `drug_id<TAB>bitstring`
std::map<std::string, Fingerprint> read_fingerprints(const std::string& path);

// `label<TAB>source<TAB>frequency<TAB>odds_ratio|NA<TAB>drug;drug;...`
void write_dataset_tsv(const std::string& path, const std::vector<LabeledInstance>& instances,
                       const DrugRegistry& drugs);
std::vector<LabeledInstance> read_dataset_tsv(const std::string& path, const DrugRegistry& drugs);

// one drug id per line; ids absent from the registry are skipped
std::unordered_set<int> read_dmyo(const std::string& path, const DrugRegistry& drugs);

// --- cross validation ---

struct FoldPrediction {
    int instance = 0;
    int fold = 0;
    double score = 0.0;
};

struct CvReport {
    std::string kernel_name = "gm";
    std::string sds_name = "cm";
    int folds = 5;
    std::uint64_t seed = 0;
    double svm_c = 1.0;
    PsdMode psd_mode = PsdMode::FULL_MATRIX;
    double psd_shift = 0.0;          // FULL_MATRIX: whole-Gram shift
    std::vector<double> fold_shifts; // TRAIN_ONLY: per-fold train-block shifts
    std::vector<MetricsReport> per_fold;
    MetricsReport mean; // metric fields averaged, counts summed
    std::vector<FoldPrediction> predictions; // one per instance, instance order
    std::vector<std::string> warnings;
};

struct CvParams {
    int folds = 5;
    std::uint64_t seed = 0;
    PsdMode psd_mode = PsdMode::FULL_MATRIX;
    double psd_tolerance = 1e-8;
    TrainConfig svm;
    std::vector<double> c_grid;
};

// Seeded shuffle into contiguous folds of equal size +-1; every instance is
// tested exactly once. Deterministic for a fixed seed.
CvReport cv_run(const std::vector<LabeledInstance>& dataset, const SymmetricMatrix& raw_gram,
                const CvParams& params);

// --- orchestration ---

struct PipelineResult {
    CvReport report;
    std::vector<LabeledInstance> dataset;
    DrugRegistry drugs;
    std::unordered_set<int> dmyo;
    bool have_dmyo = false;
};

std::vector<LabeledInstance> build_dataset_from_config(const RunConfig& cfg, const EventLog& log,
                                                       std::vector<std::string>* warnings);

// Builds the drug similarity required by cfg.kernel (repaired copy for the
// DS/PB families, raw for GM).
SymmetricMatrix build_kernel_gram(const RunConfig& cfg, const EventLog& log,
                                  const std::vector<DrugCombination>& instances);

PipelineResult run_cv_pipeline(const RunConfig& cfg);

// --- reports ---

void write_cv_report(const std::string& path, const CvReport& report);
CvReport read_cv_report(const std::string& path);

// Writes report.txt, predictions.tsv, top_positive.tsv,
// top_misclassified_negative.tsv and enrichment.txt under out_dir.
void emit_report(const std::string& out_dir, const CvReport& report,
                 const std::vector<LabeledInstance>& dataset, const DrugRegistry& drugs,
                 const std::unordered_set<int>& dmyo, bool have_dmyo);

} // namespace ckl
