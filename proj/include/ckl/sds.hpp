// Single-drug similarities: structural Tanimoto over fingerprints (2d) and
// co-medication cosine over case/control co-occurrence profiles (cm).
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ckl/core.hpp"

namespace ckl {

struct WidthMismatch : ValidationError {
    WidthMismatch() : ValidationError("fingerprint widths differ") {}
};
struct MissingFingerprint : ValidationError {
    explicit MissingFingerprint(const std::string& drug_id)
        : ValidationError("no fingerprint for drug " + drug_id) {}
};

enum class SdsKind { SDS_2D, SDS_CM, NONE };

// |A & B| / (|A| + |B| - |A & B|) over sorted unique element lists.
// Two empty sets are identical, hence 1.0.
double tanimoto(const std::vector<int>& a, const std::vector<int>& b);
double tanimoto(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b);

// Fixed-width binary substructure vector with a cached popcount.
class Fingerprint {
public:
    Fingerprint() = default;
    explicit Fingerprint(int width);
    static Fingerprint from_bitstring(const std::string& bits);

    int width() const { return width_; }
    int popcount() const { return popcount_; }
    bool test(int i) const { return (blocks_[i >> 6] >> (i & 63)) & 1u; }
    void set(int i);

    friend double sds_2d(const Fingerprint& a, const Fingerprint& b);

private:
    int width_ = 0;
    int popcount_ = 0;
    std::vector<std::uint64_t> blocks_;
};

// Tanimoto over the set-bit positions of two equal-width fingerprints.
double sds_2d(const Fingerprint& a, const Fingerprint& b);

// Per-drug co-occurrence probabilities, split by event ADR status.
// The similarity vector is the concatenation [case_half; control_half];
// each half sums to 1 unless it is identically zero.
struct CoMedProfile {
    std::vector<double> case_half;    // c+
    std::vector<double> control_half; // c-
};

std::vector<CoMedProfile> build_comed_profiles(const std::vector<EventRecord>& events, int n_drugs);

// Cosine similarity between concatenated profiles; 0 when either norm is 0.
double sds_cm(const CoMedProfile& a, const CoMedProfile& b);

// Drug-by-drug similarity matrices. Entries in [0,1], diagonal exactly 1.
// Assembly is OpenMP-parallel; the _serial variants are the reference
// implementations and produce bit-identical output.
SymmetricMatrix sds_matrix_2d(const DrugRegistry& drugs,
                              const std::map<std::string, Fingerprint>& fingerprints);
SymmetricMatrix sds_matrix_2d_serial(const DrugRegistry& drugs,
                                     const std::map<std::string, Fingerprint>& fingerprints);
SymmetricMatrix sds_matrix_cm(const std::vector<EventRecord>& events, int n_drugs);
SymmetricMatrix sds_matrix_cm_serial(const std::vector<EventRecord>& events, int n_drugs);

} // namespace ckl
