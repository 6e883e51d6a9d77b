#include "ckl/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ckl {

namespace {

double frobenius_norm(const SymmetricMatrix& s) {
    double acc = 0;
    for (double v : s.data()) acc += v * v;
    return std::sqrt(acc);
}

double max_off_diagonal(const std::vector<double>& a, int n) {
    double m = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            m = std::max(m, std::fabs(a[static_cast<std::size_t>(i) * n + j]));
    return m;
}

} // namespace

EigenDecomposition eigen_symmetric(const SymmetricMatrix& s) {
    const int n = s.size();
    std::vector<double> a = s.data(); // working copy, full storage
    // vt holds eigenvectors as rows so rotations touch contiguous memory.
    std::vector<double> vt(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) vt[static_cast<std::size_t>(i) * n + i] = 1.0;

    const double stop = 1e-12 * frobenius_norm(s);
    const int max_sweeps = 64;

    auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };

    bool converged = (n <= 1) || max_off_diagonal(a, n) <= stop;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = at(p, q);
                if (apq == 0.0) continue;
                double app = at(p, p), aqq = at(q, q);
                double theta = (aqq - app) / (2.0 * apq);
                double t = 1.0 / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                if (theta < 0) t = -t;
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double sn = t * c;
                double tau = sn / (1.0 + c);

                at(p, p) = app - t * apq;
                at(q, q) = aqq + t * apq;
                at(p, q) = 0.0;
                at(q, p) = 0.0;

                double* row_p = &a[static_cast<std::size_t>(p) * n];
                double* row_q = &a[static_cast<std::size_t>(q) * n];
                for (int r = 0; r < n; ++r) {
                    if (r == p || r == q) continue;
                    double arp = row_p[r], arq = row_q[r];
                    double np = arp - sn * (arq + tau * arp);
                    double nq = arq + sn * (arp - tau * arq);
                    row_p[r] = np;
                    row_q[r] = nq;
                    at(r, p) = np;
                    at(r, q) = nq;
                }
                double* vp = &vt[static_cast<std::size_t>(p) * n];
                double* vq = &vt[static_cast<std::size_t>(q) * n];
                for (int r = 0; r < n; ++r) {
                    double up = vp[r], uq = vq[r];
                    vp[r] = up - sn * (uq + tau * up);
                    vq[r] = uq + sn * (up - tau * uq);
                }
            }
        }
        converged = max_off_diagonal(a, n) <= stop;
    }
    if (!converged) throw EigenNoConvergence();

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int x, int y) { return at(x, x) < at(y, y); });

    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Matrix(n, n);
    for (int k = 0; k < n; ++k) {
        int src = order[k];
        out.eigenvalues[k] = at(src, src);
        for (int i = 0; i < n; ++i)
            out.eigenvectors(i, k) = vt[static_cast<std::size_t>(src) * n + i];
    }
    return out;
}

double smallest_eigenvalue(const SymmetricMatrix& s) {
    return eigen_symmetric(s).eigenvalues.front();
}

Matrix cholesky(const SymmetricMatrix& s) {
    const int n = s.size();
    Matrix l(n, n);
    for (int j = 0; j < n; ++j) {
        double d = s(j, j);
        for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d <= 0.0 || !std::isfinite(d)) throw NotPositiveDefinite();
        double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (int i = j + 1; i < n; ++i) {
            double v = s(i, j);
            for (int k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
            l(i, j) = v / ljj;
        }
    }
    return l;
}

} // namespace ckl
