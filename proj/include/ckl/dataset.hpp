// Mines combination statistics from event logs, partitions combinations into
// the M+/M0/N0/N- quadrants, prunes them into labeled datasets and generates
// synthetic event logs with a planted signal for testing.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ckl/core.hpp"

namespace ckl {

struct EmptyPartition : ValidationError {
    explicit EmptyPartition(const std::string& which)
        : ValidationError("required quadrant " + which + " is empty") {}
};
struct ConfigInvalid : ValidationError {
    explicit ConfigInvalid(const std::string& what) : ValidationError(what) {}
};

struct ComboStats {
    DrugCombination combination;
    std::int64_t case_count = 0;    // n1
    std::int64_t control_count = 0; // m1
    ContingencyTable contingency;   // n2/m2 derived from event totals
    std::optional<double> odds_ratio_value;
    std::optional<double> fisher_p;

    std::int64_t frequency() const { return case_count + control_count; }
};

// One ComboStats per distinct combination, sorted by drug list; an event
// "takes D" only when its drug set equals D exactly. OR and Fisher p are
// computed for combinations seen in both case and control events (OR stays
// absent when one of its cells is zero).
std::vector<ComboStats> mine(const std::vector<EventRecord>& events);

struct Partitions {
    std::vector<ComboStats> m_plus;  // case-only
    std::vector<ComboStats> m_zero;  // both, OR > 1
    std::vector<ComboStats> n_zero;  // both, OR < 1
    std::vector<ComboStats> n_minus; // control-only
    std::int64_t excluded_or_one = 0;
    std::int64_t excluded_undefined_or = 0;
};

Partitions partition(const std::vector<ComboStats>& stats);

enum class PrunePreset { D_STAR, D4000, D2000, CUSTOM };

struct PruneConfig {
    PrunePreset preset = PrunePreset::D_STAR;
    int top_mplus = 1000;
    double alpha = 0.05;
    int n_nminus = 2200;
    std::optional<int> top_mzero_by_or; // keep this many M0, largest OR first
    std::optional<int> top_nzero_by_or; // keep this many N0, smallest OR first

    static PruneConfig d_star();
    static PruneConfig d4000();
    static PruneConfig d2000();
};

struct BuiltDataset {
    std::vector<LabeledInstance> instances;
    std::vector<std::string> warnings;
};

// Frequency ranking is descending with lexicographic drug-list tie-break.
// M0 keeps only combinations with OR > 1 and fisher_p < alpha.
BuiltDataset build_dataset(const Partitions& parts, const PruneConfig& cfg);

struct SynthConfig {
    int n_drugs = 60;
    int n_events = 2000;
    double risky_drug_fraction = 0.15;
    double mean_order = 4.0;
    std::uint64_t seed = 0;
};

struct SynthResult {
    std::vector<EventRecord> events;
    std::vector<int> risky_drugs;
    DrugRegistry drugs;
};

// Deterministic for a fixed seed. Events whose combination contains at
// least two risky drugs are case with probability 0.9, all others with
// probability 0.1; orders are drawn around mean_order.
SynthResult synth_generate(const SynthConfig& cfg);

} // namespace ckl
