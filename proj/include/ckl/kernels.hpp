// Drug-combination kernels: graph matching (gm), common drugs (cd, order 1
// and 2), average drug similarity (ds) and the probabilistic ensemble kernel
// (pb), plus spectral-shift PSD repair of similarity matrices.
#pragma once

#include <cstdint>
#include <vector>

#include "ckl/core.hpp"
#include "ckl/sds.hpp"

namespace ckl {

struct OutOfRange : ValidationError {
    OutOfRange() : ValidationError("similarity value outside [0,1]") {}
};
struct FactorizationFailure : ComputeError {
    FactorizationFailure()
        : ComputeError("embedding factorization failed; increase the diagonal ridge") {}
};

enum class KernelFamily { GM, CD1, CD2, DS, PB };

const char* to_string(KernelFamily f);

struct KernelSpec {
    KernelFamily family = KernelFamily::GM;
    SdsKind sds_kind = SdsKind::SDS_CM;
    double psd_tolerance = 1e-8;
    double pb_ridge = 1e-6;     // eta, added to embedding Gram diagonals
    double pb_cov_ridge = 1e-3; // rho, added to per-set covariance diagonals

    // CD1/CD2 take no drug similarity; GM/DS/PB require one.
    void validate() const;
};

// Matching cost between two drugs is their dissimilarity 1 - SDS.
double match_cost(double sds_value);

// Sum of drug similarities over the optimal injective matching of the
// smaller combination into the larger: min(kp,kq) - lsap(1 - sds).
double s_gm(const DrugCombination& dp, const DrugCombination& dq, const SymmetricMatrix& sds);

// Tanimoto over the two drug sets.
double k_cd1(const DrugCombination& dp, const DrugCombination& dq);

// All k singletons plus all k(k-1)/2 unordered pairs, as sortable codes.
std::vector<std::uint64_t> expand_order2(const DrugCombination& d);

// Tanimoto over the order-2 expanded feature sets.
double k_cd2(const DrugCombination& dp, const DrugCombination& dq);

// Average of sds over the cross product of the two drug sets.
double k_ds(const DrugCombination& dp, const DrugCombination& dq, const SymmetricMatrix& sds);

// Bhattacharyya affinity between Gaussians fitted to the two drug sets
// embedded through the (PSD, ridge-regularized) sds restricted to their union.
double k_pb(const DrugCombination& dp, const DrugCombination& dq, const SymmetricMatrix& sds,
            double ridge, double cov_ridge);

// Gram matrix of the requested family over all instance pairs. sds may be
// null for CD1/CD2. OpenMP-parallel; the _serial variant is the reference
// implementation and produces bit-identical output.
SymmetricMatrix similarity_matrix(const std::vector<DrugCombination>& instances,
                                  const KernelSpec& spec, const SymmetricMatrix* sds);
SymmetricMatrix similarity_matrix_serial(const std::vector<DrugCombination>& instances,
                                         const KernelSpec& spec, const SymmetricMatrix* sds);

// Probabilistic-ensemble Gram over all instances (raw, before repair).
SymmetricMatrix k_pb_matrix(const std::vector<DrugCombination>& instances,
                            const SymmetricMatrix& sds, double ridge, double cov_ridge);

// Spectral shift: if lambda_min < -tol, add |lambda_min| to the diagonal.
// Off-diagonal entries are never touched.
KernelMatrix psd_repair(const SymmetricMatrix& s, double tol = 1e-8);

} // namespace ckl
