#include "ckl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numeric>

namespace ckl {

double odds_ratio(const ContingencyTable& ct) {
    if (ct.m1 == 0 || ct.n2 == 0 || ct.m2 == 0) throw UndefinedOdds();
    return (static_cast<double>(ct.n1) / static_cast<double>(ct.m1)) /
           (static_cast<double>(ct.n2) / static_cast<double>(ct.m2));
}

namespace {

constexpr std::int64_t kFisherTotalBound = 10'000'000;

// Grow-only shared log-factorial table. Readers hold a snapshot, so a
// concurrent grow never invalidates an in-flight computation.
std::shared_ptr<const std::vector<double>> log_factorials(std::size_t n) {
    static std::mutex mu;
    static std::shared_ptr<const std::vector<double>> table =
        std::make_shared<const std::vector<double>>(1, 0.0);

    std::lock_guard<std::mutex> lock(mu);
    if (table->size() <= n) {
        auto grown = std::make_shared<std::vector<double>>(*table);
        grown->reserve(n + 1);
        for (std::size_t k = grown->size(); k <= n; ++k)
            grown->push_back(grown->back() + std::log(static_cast<double>(k)));
        table = std::move(grown);
    }
    return table;
}

} // namespace

double fisher_right_tail(const ContingencyTable& ct) {
    if (ct.n1 < 0 || ct.m1 < 0 || ct.n2 < 0 || ct.m2 < 0)
        throw ValidationError("contingency counts must be non-negative");
    const std::int64_t total = ct.total();
    if (total > kFisherTotalBound) throw Overflow();
    if (total == 0) return 1.0;

    const std::int64_t row = ct.n1 + ct.m1; // events taking D
    const std::int64_t col = ct.n1 + ct.n2; // ADR events
    const std::int64_t lo = std::max<std::int64_t>(0, row + col - total);
    const std::int64_t hi = std::min(row, col);
    if (ct.n1 <= lo) return 1.0; // tail covers the whole support

    auto lf = log_factorials(static_cast<std::size_t>(total));
    auto log_choose = [&](std::int64_t a, std::int64_t b) {
        return (*lf)[a] - (*lf)[b] - (*lf)[a - b];
    };

    const double log_denom = log_choose(total, col);
    double p = 0.0;
    for (std::int64_t x = ct.n1; x <= hi; ++x) {
        double lp = log_choose(row, x) + log_choose(total - row, col - x) - log_denom;
        p += std::exp(lp);
    }
    return std::min(p, 1.0);
}

MetricsReport classification_metrics(const std::vector<double>& scores,
                                     const std::vector<int>& labels, double threshold) {
    if (scores.size() != labels.size() || scores.empty())
        throw LengthMismatch();

    MetricsReport r;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        bool predicted_pos = scores[i] >= threshold; // ties predict +1
        bool actual_pos = labels[i] > 0;
        if (predicted_pos && actual_pos)
            ++r.tp;
        else if (predicted_pos && !actual_pos)
            ++r.fp;
        else if (!predicted_pos && actual_pos)
            ++r.fn;
        else
            ++r.tn;
    }

    const double n = static_cast<double>(scores.size());
    r.accuracy = static_cast<double>(r.tp + r.tn) / n;
    r.precision_defined = (r.tp + r.fp) > 0;
    r.precision = r.precision_defined ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 0.0;
    r.recall_defined = (r.tp + r.fn) > 0;
    r.recall = r.recall_defined ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
    r.f1_defined = r.precision_defined && r.recall_defined && (r.precision + r.recall) > 0;
    r.f1 = r.f1_defined ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;

    // AUC via midranks: (rank sum of positives - P(P+1)/2) / (P*N).
    const std::int64_t pos = r.tp + r.fn, neg = r.fp + r.tn;
    if (pos > 0 && neg > 0) {
        std::vector<std::size_t> order(scores.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
        double rank_sum_pos = 0.0;
        std::size_t i = 0;
        while (i < order.size()) {
            std::size_t j = i;
            while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
            double midrank = 0.5 * static_cast<double>(i + 1 + j); // ranks are 1-based
            for (std::size_t k = i; k < j; ++k)
                if (labels[order[k]] > 0) rank_sum_pos += midrank;
            i = j;
        }
        double p = static_cast<double>(pos);
        r.auc = (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
    }
    return r;
}

std::optional<double> dmyo_enrichment(const std::vector<LabeledInstance>& instances,
                                      const std::unordered_set<int>& dmyo) {
    if (instances.empty()) return std::nullopt;
    double acc = 0.0;
    for (const LabeledInstance& inst : instances) {
        int hits = 0;
        for (int d : inst.combination.drugs)
            if (dmyo.count(d)) ++hits;
        acc += 100.0 * static_cast<double>(hits) / static_cast<double>(inst.combination.order());
    }
    return acc / static_cast<double>(instances.size());
}

} // namespace ckl
