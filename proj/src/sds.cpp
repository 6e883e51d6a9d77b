#include "ckl/sds.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace ckl {

namespace {

template <typename T>
double tanimoto_sorted(const std::vector<T>& a, const std::vector<T>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t i = 0, j = 0, inter = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++inter;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    double uni = static_cast<double>(a.size() + b.size() - inter);
    if (uni == 0.0) return 1.0;
    return static_cast<double>(inter) / uni;
}

} // namespace

double tanimoto(const std::vector<int>& a, const std::vector<int>& b) {
    return tanimoto_sorted(a, b);
}

double tanimoto(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
    return tanimoto_sorted(a, b);
}

Fingerprint::Fingerprint(int width)
    : width_(width), blocks_(static_cast<std::size_t>(width + 63) / 64, 0) {}

void Fingerprint::set(int i) {
    std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (!(blocks_[i >> 6] & mask)) {
        blocks_[i >> 6] |= mask;
        ++popcount_;
    }
}

Fingerprint Fingerprint::from_bitstring(const std::string& bits) {
    Fingerprint fp(static_cast<int>(bits.size()));
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] == '1')
            fp.set(static_cast<int>(i));
        else if (bits[i] != '0')
            throw ValidationError("fingerprint bitstring may contain only 0 and 1");
    }
    return fp;
}

double sds_2d(const Fingerprint& a, const Fingerprint& b) {
    if (a.width_ != b.width_) throw WidthMismatch();
    if (a.popcount_ == 0 && b.popcount_ == 0) return 1.0; // identical empty sets
    std::size_t inter = 0;
    for (std::size_t k = 0; k < a.blocks_.size(); ++k)
        inter += std::popcount(a.blocks_[k] & b.blocks_[k]);
    return static_cast<double>(inter) /
           static_cast<double>(a.popcount_ + b.popcount_ - inter);
}

std::vector<CoMedProfile> build_comed_profiles(const std::vector<EventRecord>& events, int n_drugs) {
    // Integer accumulation keeps profiles exactly invariant under event
    // reordering and under scaling all counts by a common factor.
    std::vector<std::vector<std::int64_t>> case_counts(n_drugs, std::vector<std::int64_t>(n_drugs, 0));
    std::vector<std::vector<std::int64_t>> control_counts(n_drugs, std::vector<std::int64_t>(n_drugs, 0));

    for (const EventRecord& ev : events) {
        const auto& d = ev.combination.drugs;
        for (int idx : d)
            if (idx < 0 || idx >= n_drugs)
                throw IndexOutOfRange("drug index " + std::to_string(idx) + " out of range");
        auto& counts = ev.adr ? case_counts : control_counts;
        for (std::size_t i = 0; i + 1 < d.size(); ++i) {
            for (std::size_t j = i + 1; j < d.size(); ++j) {
                counts[d[i]][d[j]] += 1;
                counts[d[j]][d[i]] += 1;
            }
        }
    }

    auto normalize = [](const std::vector<std::int64_t>& counts) {
        std::int64_t total = 0;
        for (std::int64_t c : counts) total += c;
        std::vector<double> out(counts.size(), 0.0);
        if (total > 0)
            for (std::size_t j = 0; j < counts.size(); ++j)
                out[j] = static_cast<double>(counts[j]) / static_cast<double>(total);
        return out;
    };

    std::vector<CoMedProfile> profiles(n_drugs);
    for (int i = 0; i < n_drugs; ++i) {
        profiles[i].case_half = normalize(case_counts[i]);
        profiles[i].control_half = normalize(control_counts[i]);
    }
    return profiles;
}

double sds_cm(const CoMedProfile& a, const CoMedProfile& b) {
    if (a.case_half.size() != b.case_half.size() ||
        a.control_half.size() != b.control_half.size())
        throw LengthMismatch();

    double dot = 0, na = 0, nb = 0;
    auto accumulate = [&](const std::vector<double>& x, const std::vector<double>& y) {
        for (std::size_t j = 0; j < x.size(); ++j) {
            dot += x[j] * y[j];
            na += x[j] * x[j];
            nb += y[j] * y[j];
        }
    };
    accumulate(a.case_half, b.case_half);
    accumulate(a.control_half, b.control_half);

    if (na == 0.0 || nb == 0.0) return 0.0;
    double v = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(v, 0.0, 1.0);
}

namespace {

std::vector<Fingerprint> gather_fingerprints(const DrugRegistry& drugs,
                                             const std::map<std::string, Fingerprint>& fingerprints) {
    std::vector<Fingerprint> by_index;
    by_index.reserve(drugs.size());
    for (int i = 0; i < drugs.size(); ++i) {
        auto it = fingerprints.find(drugs.id(i));
        if (it == fingerprints.end()) throw MissingFingerprint(drugs.id(i));
        by_index.push_back(it->second);
    }
    return by_index;
}

template <typename PairFn>
SymmetricMatrix assemble(int n, PairFn&& pair_value, bool parallel) {
    SymmetricMatrix m(n);
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) m.set(i, j, pair_value(i, j));
    } else {
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) m.set(i, j, pair_value(i, j));
    }
    for (int i = 0; i < n; ++i) m.set(i, i, 1.0);
    return m;
}

SymmetricMatrix build_2d(const DrugRegistry& drugs,
                         const std::map<std::string, Fingerprint>& fingerprints, bool parallel) {
    std::vector<Fingerprint> fps = gather_fingerprints(drugs, fingerprints);
    return assemble(drugs.size(),
                    [&](int i, int j) { return sds_2d(fps[i], fps[j]); }, parallel);
}

SymmetricMatrix build_cm(const std::vector<EventRecord>& events, int n_drugs, bool parallel) {
    std::vector<CoMedProfile> profiles = build_comed_profiles(events, n_drugs);
    return assemble(n_drugs,
                    [&](int i, int j) { return sds_cm(profiles[i], profiles[j]); }, parallel);
}

} // namespace

SymmetricMatrix sds_matrix_2d(const DrugRegistry& drugs,
                              const std::map<std::string, Fingerprint>& fingerprints) {
    return build_2d(drugs, fingerprints, true);
}

SymmetricMatrix sds_matrix_2d_serial(const DrugRegistry& drugs,
                                     const std::map<std::string, Fingerprint>& fingerprints) {
    return build_2d(drugs, fingerprints, false);
}

SymmetricMatrix sds_matrix_cm(const std::vector<EventRecord>& events, int n_drugs) {
    return build_cm(events, n_drugs, true);
}

SymmetricMatrix sds_matrix_cm_serial(const std::vector<EventRecord>& events, int n_drugs) {
    return build_cm(events, n_drugs, false);
}

} // namespace ckl
