#include "ckl/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "ckl/rand.hpp"
#include "ckl/stats.hpp"

namespace ckl {

std::vector<ComboStats> mine(const std::vector<EventRecord>& events) {
    if (events.empty()) throw ValidationError("event list is empty");

    CombinationInterner interner;
    std::vector<std::int64_t> case_counts, control_counts;
    std::int64_t total_case = 0, total_control = 0;

    for (const EventRecord& ev : events) {
        int idx = interner.intern(ev.combination);
        if (idx == static_cast<int>(case_counts.size())) {
            case_counts.push_back(0);
            control_counts.push_back(0);
        }
        if (ev.adr) {
            ++case_counts[idx];
            ++total_case;
        } else {
            ++control_counts[idx];
            ++total_control;
        }
    }

    std::vector<ComboStats> stats(interner.size());
    for (int i = 0; i < interner.size(); ++i) {
        ComboStats& s = stats[i];
        s.combination = interner.at(i);
        s.case_count = case_counts[i];
        s.control_count = control_counts[i];
        s.contingency = ContingencyTable{case_counts[i], control_counts[i],
                                         total_case - case_counts[i],
                                         total_control - control_counts[i]};
        if (s.case_count > 0 && s.control_count > 0) {
            s.fisher_p = fisher_right_tail(s.contingency);
            if (s.contingency.n2 > 0 && s.contingency.m2 > 0)
                s.odds_ratio_value = odds_ratio(s.contingency);
        }
    }
    // Sorted output makes mine independent of event ordering.
    std::sort(stats.begin(), stats.end(),
              [](const ComboStats& a, const ComboStats& b) { return a.combination < b.combination; });
    return stats;
}

Partitions partition(const std::vector<ComboStats>& stats) {
    Partitions parts;
    for (const ComboStats& s : stats) {
        if (s.case_count > 0 && s.control_count == 0) {
            parts.m_plus.push_back(s);
        } else if (s.control_count > 0 && s.case_count == 0) {
            parts.n_minus.push_back(s);
        } else {
            if (!s.odds_ratio_value) {
                // Seen on both sides but OR has a zero cell; no side to take.
                ++parts.excluded_undefined_or;
            } else if (*s.odds_ratio_value > 1.0) {
                parts.m_zero.push_back(s);
            } else if (*s.odds_ratio_value < 1.0) {
                parts.n_zero.push_back(s);
            } else {
                ++parts.excluded_or_one;
            }
        }
    }
    return parts;
}

PruneConfig PruneConfig::d_star() {
    return PruneConfig{PrunePreset::D_STAR, 1000, 0.05, 2200, std::nullopt, std::nullopt};
}
PruneConfig PruneConfig::d4000() {
    return PruneConfig{PrunePreset::D4000, 1000, 0.05, 1000, 1000, 1000};
}
PruneConfig PruneConfig::d2000() {
    return PruneConfig{PrunePreset::D2000, 1000, 0.05, 1000, std::nullopt, std::nullopt};
}

namespace {

bool by_frequency_desc(const ComboStats& a, const ComboStats& b) {
    if (a.frequency() != b.frequency()) return a.frequency() > b.frequency();
    return a.combination < b.combination;
}

bool by_or_desc(const ComboStats& a, const ComboStats& b) {
    if (*a.odds_ratio_value != *b.odds_ratio_value)
        return *a.odds_ratio_value > *b.odds_ratio_value;
    return a.combination < b.combination;
}

bool by_or_asc(const ComboStats& a, const ComboStats& b) {
    if (*a.odds_ratio_value != *b.odds_ratio_value)
        return *a.odds_ratio_value < *b.odds_ratio_value;
    return a.combination < b.combination;
}

std::vector<ComboStats> take_top(std::vector<ComboStats> pool, int requested,
                                 bool (*cmp)(const ComboStats&, const ComboStats&),
                                 const char* which, std::vector<std::string>& warnings) {
    std::sort(pool.begin(), pool.end(), cmp);
    if (static_cast<int>(pool.size()) < requested) {
        warnings.push_back(std::string(which) + ": requested " + std::to_string(requested) +
                           " but only " + std::to_string(pool.size()) + " available");
        return pool;
    }
    pool.resize(requested);
    return pool;
}

LabeledInstance make_instance(const ComboStats& s, int label, Source source) {
    LabeledInstance inst;
    inst.combination = s.combination;
    inst.label = label;
    inst.source = source;
    inst.frequency = s.frequency();
    if (source == Source::M_ZERO || source == Source::N_ZERO)
        inst.odds_ratio = s.odds_ratio_value;
    return inst;
}

} // namespace

BuiltDataset build_dataset(const Partitions& parts, const PruneConfig& cfg) {
    if (cfg.top_mplus < 0 || cfg.n_nminus < 0 || cfg.alpha <= 0)
        throw ConfigInvalid("prune configuration values out of range");

    BuiltDataset out;

    // Fisher-significant, OR > 1 subset of M0; D4000's OR ranking applies
    // on top of this filter since it prunes the D* content further.
    std::vector<ComboStats> m_zero_kept;
    for (const ComboStats& s : parts.m_zero)
        if (s.fisher_p && *s.fisher_p < cfg.alpha && *s.odds_ratio_value > 1.0)
            m_zero_kept.push_back(s);

    std::vector<ComboStats> n_zero_kept = parts.n_zero;

    bool want_mzero = cfg.preset != PrunePreset::D2000;
    bool want_nzero = cfg.preset != PrunePreset::D2000;

    if (cfg.top_mplus > 0 && parts.m_plus.empty()) throw EmptyPartition("M+");
    if (cfg.n_nminus > 0 && parts.n_minus.empty()) throw EmptyPartition("N-");
    if (want_mzero && cfg.top_mzero_by_or && *cfg.top_mzero_by_or > 0 && parts.m_zero.empty())
        throw EmptyPartition("M0");
    if (want_nzero && cfg.top_nzero_by_or && *cfg.top_nzero_by_or > 0 && parts.n_zero.empty())
        throw EmptyPartition("N0");

    std::vector<ComboStats> m_plus =
        take_top(parts.m_plus, cfg.top_mplus, by_frequency_desc, "M+", out.warnings);
    std::vector<ComboStats> n_minus =
        take_top(parts.n_minus, cfg.n_nminus, by_frequency_desc, "N-", out.warnings);

    if (want_mzero && cfg.top_mzero_by_or)
        m_zero_kept = take_top(std::move(m_zero_kept), *cfg.top_mzero_by_or, by_or_desc, "M0",
                               out.warnings);
    if (want_nzero && cfg.top_nzero_by_or)
        n_zero_kept = take_top(std::move(n_zero_kept), *cfg.top_nzero_by_or, by_or_asc, "N0",
                               out.warnings);

    for (const ComboStats& s : m_plus)
        out.instances.push_back(make_instance(s, +1, Source::M_PLUS));
    if (want_mzero)
        for (const ComboStats& s : m_zero_kept)
            out.instances.push_back(make_instance(s, +1, Source::M_ZERO));
    if (want_nzero)
        for (const ComboStats& s : n_zero_kept)
            out.instances.push_back(make_instance(s, -1, Source::N_ZERO));
    for (const ComboStats& s : n_minus)
        out.instances.push_back(make_instance(s, -1, Source::N_MINUS));

    return out;
}

namespace {

int weighted_pick(std::mt19937_64& rng, const std::vector<double>& weights, double total) {
    double u = next_uniform(rng) * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        u -= weights[i];
        if (u < 0) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
}

} // namespace

SynthResult synth_generate(const SynthConfig& cfg) {
    if (cfg.n_drugs < 4) throw ConfigInvalid("synthetic generator needs at least 4 drugs");
    if (cfg.mean_order < 2.0) throw ConfigInvalid("mean_order must be at least 2");
    if (cfg.n_events <= 0) throw ConfigInvalid("n_events must be positive");
    if (cfg.risky_drug_fraction < 0.0 || cfg.risky_drug_fraction > 1.0)
        throw ConfigInvalid("risky_drug_fraction must be in [0,1]");

    std::mt19937_64 rng(cfg.seed);
    SynthResult out;

    int n_risky = static_cast<int>(std::lround(cfg.risky_drug_fraction * cfg.n_drugs));
    std::vector<int> order(cfg.n_drugs);
    for (int i = 0; i < cfg.n_drugs; ++i) order[i] = i;
    for (int i = 0; i < n_risky; ++i) {
        int j = i + static_cast<int>(next_uniform(rng) * (cfg.n_drugs - i));
        std::swap(order[i], order[j]);
    }
    out.risky_drugs.assign(order.begin(), order.begin() + n_risky);
    std::sort(out.risky_drugs.begin(), out.risky_drugs.end());
    std::vector<char> is_risky(cfg.n_drugs, 0);
    for (int d : out.risky_drugs) is_risky[d] = 1;

    // Zipf-like drug popularity: combinations repeat across events and
    // popular risky drugs co-occur naturally, yielding both mineable
    // frequencies and recoverable co-medication structure.
    std::vector<double> base_weight(cfg.n_drugs);
    for (int i = 0; i < cfg.n_drugs; ++i)
        base_weight[i] = 1.0 / std::pow(static_cast<double>(i + 1), 1.1);

    int id_width = static_cast<int>(std::to_string(cfg.n_drugs - 1).size());
    for (int i = 0; i < cfg.n_drugs; ++i) {
        std::string id = std::to_string(i);
        out.drugs.intern("d" + std::string(id_width - id.size(), '0') + id);
    }

    const int max_order = std::min(cfg.n_drugs, 12);
    for (int e = 0; e < cfg.n_events; ++e) {
        int k = 2 + next_poisson(rng, cfg.mean_order - 2.0);
        k = std::min(k, max_order);

        std::vector<double> w = base_weight;
        double total = 0;
        for (double v : w) total += v;
        std::vector<int> picked;
        for (int t = 0; t < k; ++t) {
            int d = weighted_pick(rng, w, total);
            picked.push_back(d);
            total -= w[d];
            w[d] = 0;
        }

        int risky_in = 0;
        for (int d : picked)
            if (is_risky[d]) ++risky_in;
        double p_case = risky_in >= 2 ? 0.9 : 0.1;
        bool adr = next_uniform(rng) < p_case;

        std::string num = std::to_string(e + 1);
        EventRecord ev;
        ev.event_id = "e" + std::string(num.size() < 7 ? 7 - num.size() : 0, '0') + num;
        ev.combination = canonicalize(picked);
        ev.adr = adr;
        out.events.push_back(std::move(ev));
    }
    return out;
}

} // namespace ckl
