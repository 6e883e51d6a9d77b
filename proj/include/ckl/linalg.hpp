// Dense symmetric linear algebra: cyclic Jacobi eigendecomposition and
// Cholesky factorization.
#pragma once

#include <vector>

#include "ckl/core.hpp"

namespace ckl {

struct EigenNoConvergence : ComputeError {
    EigenNoConvergence() : ComputeError("Jacobi eigendecomposition did not converge") {}
};
struct NotPositiveDefinite : ComputeError {
    NotPositiveDefinite() : ComputeError("Cholesky pivot <= 0: matrix is not positive definite") {}
};

struct EigenDecomposition {
    std::vector<double> eigenvalues; // sorted ascending
    Matrix eigenvectors;             // column k pairs with eigenvalues[k]
};

// Cyclic Jacobi sweeps until max off-diagonal magnitude <= 1e-12 * ||S||_F
// or 64 sweeps, whichever comes first.
EigenDecomposition eigen_symmetric(const SymmetricMatrix& s);

double smallest_eigenvalue(const SymmetricMatrix& s);

// Lower-triangular L with L * L^T == s; requires lambda_min > 0.
Matrix cholesky(const SymmetricMatrix& s);

} // namespace ckl
