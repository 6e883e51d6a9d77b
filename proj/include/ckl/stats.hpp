// Pharmacovigilance statistics (odds ratio, right-tailed Fisher exact test)
// and classification metrics (accuracy/precision/recall/F1/AUC).
#pragma once

#include <cstdint>
#include <optional>
#include <unordered_set>
#include <vector>

#include "ckl/core.hpp"

namespace ckl {

struct UndefinedOdds : ValidationError {
    UndefinedOdds() : ValidationError("odds ratio undefined: zero cell in m1, n2 or m2") {}
};
struct Overflow : ValidationError {
    Overflow() : ValidationError("contingency total exceeds the log-factorial table bound") {}
};

// (n1/m1) / (n2/m2). No continuity correction: zero cells raise.
double odds_ratio(const ContingencyTable& ct);

// P(X >= n1) under the hypergeometric distribution with the table's margins,
// computed from log-factorials with the tail summed in linear space.
// Precondition: total <= 1e7.
double fisher_right_tail(const ContingencyTable& ct);

struct MetricsReport {
    double accuracy = 0, precision = 0, recall = 0, f1 = 0;
    std::optional<double> auc;
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    // Flags for zero-denominator cases where the metric is reported as 0.
    bool precision_defined = true, recall_defined = true, f1_defined = true;
};

// Thresholding: score >= threshold predicts +1. AUC by the midrank statistic,
// ties between a positive and a negative score counting 1/2.
MetricsReport classification_metrics(const std::vector<double>& scores,
                                     const std::vector<int>& labels, double threshold = 0.0);

// Mean over instances of 100 * |D intersect dmyo| / |D|; absent for an empty list.
std::optional<double> dmyo_enrichment(const std::vector<LabeledInstance>& instances,
                                      const std::unordered_set<int>& dmyo);

} // namespace ckl
