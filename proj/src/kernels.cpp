#include "ckl/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "ckl/linalg.hpp"
#include "ckl/lsap.hpp"

namespace ckl {

const char* to_string(KernelFamily f) {
    switch (f) {
        case KernelFamily::GM: return "gm";
        case KernelFamily::CD1: return "cd1";
        case KernelFamily::CD2: return "cd2";
        case KernelFamily::DS: return "ds";
        case KernelFamily::PB: return "pb";
    }
    return "?";
}

void KernelSpec::validate() const {
    bool needs_sds = family == KernelFamily::GM || family == KernelFamily::DS ||
                     family == KernelFamily::PB;
    if (needs_sds && sds_kind == SdsKind::NONE)
        throw ValidationError("kernel family requires a drug similarity (sds 2d or cm)");
    if (!needs_sds && sds_kind != SdsKind::NONE)
        throw ValidationError("common-drug kernels take no drug similarity");
    if (psd_tolerance < 0 || pb_ridge <= 0 || pb_cov_ridge <= 0)
        throw ValidationError("kernel regularization values must be positive");
}

double match_cost(double sds_value) {
    if (!(sds_value >= 0.0 && sds_value <= 1.0)) throw OutOfRange();
    return 1.0 - sds_value;
}

namespace {

void check_indices(const DrugCombination& d, const SymmetricMatrix& sds) {
    for (int idx : d.drugs)
        if (idx < 0 || idx >= sds.size())
            throw IndexOutOfRange("drug index " + std::to_string(idx) +
                                  " outside sds dimension " + std::to_string(sds.size()));
}

} // namespace

double s_gm(const DrugCombination& dp, const DrugCombination& dq, const SymmetricMatrix& sds) {
    check_indices(dp, sds);
    check_indices(dq, sds);
    const int kp = dp.order(), kq = dq.order();
    CostMatrix c(kp, kq);
    for (int i = 0; i < kp; ++i)
        for (int j = 0; j < kq; ++j) c.at(i, j) = match_cost(sds(dp.drugs[i], dq.drugs[j]));
    Assignment a = solve_lsap(c);
    return static_cast<double>(std::min(kp, kq)) - a.total_cost;
}

double k_cd1(const DrugCombination& dp, const DrugCombination& dq) {
    return tanimoto(dp.drugs, dq.drugs);
}

std::vector<std::uint64_t> expand_order2(const DrugCombination& d) {
    // Singletons encode with a zero high word, pairs as (lo+1, hi+1); the
    // two ranges never collide and sort order stays deterministic.
    std::vector<std::uint64_t> features;
    const auto& drugs = d.drugs;
    features.reserve(drugs.size() * (drugs.size() + 1) / 2);
    for (int a : drugs) features.push_back(static_cast<std::uint64_t>(a) + 1);
    for (std::size_t i = 0; i + 1 < drugs.size(); ++i)
        for (std::size_t j = i + 1; j < drugs.size(); ++j)
            features.push_back(((static_cast<std::uint64_t>(drugs[i]) + 1) << 32) |
                               (static_cast<std::uint64_t>(drugs[j]) + 1));
    std::sort(features.begin(), features.end());
    return features;
}

double k_cd2(const DrugCombination& dp, const DrugCombination& dq) {
    return tanimoto(expand_order2(dp), expand_order2(dq));
}

double k_ds(const DrugCombination& dp, const DrugCombination& dq, const SymmetricMatrix& sds) {
    check_indices(dp, sds);
    check_indices(dq, sds);
    double acc = 0.0;
    for (int a : dp.drugs)
        for (int b : dq.drugs) acc += sds(a, b);
    return acc / (static_cast<double>(dp.order()) * static_cast<double>(dq.order()));
}

namespace {

// Gaussian fitted to a drug set embedded via rows of the Cholesky factor:
// mean vector and population covariance plus the rho ridge.
struct FittedGaussian {
    std::vector<double> mean;
    SymmetricMatrix cov;
};

FittedGaussian fit_gaussian(const Matrix& embed, const std::vector<int>& members,
                            double cov_ridge) {
    const int dim = embed.cols();
    const double k = static_cast<double>(members.size());
    FittedGaussian g;
    g.mean.assign(dim, 0.0);
    for (int m : members)
        for (int d = 0; d < dim; ++d) g.mean[d] += embed(m, d);
    for (double& v : g.mean) v /= k;

    g.cov = SymmetricMatrix(dim);
    for (int a = 0; a < dim; ++a) {
        for (int b = a; b < dim; ++b) {
            double acc = 0.0;
            for (int m : members)
                acc += (embed(m, a) - g.mean[a]) * (embed(m, b) - g.mean[b]);
            g.cov.set(a, b, acc / k);
        }
    }
    g.cov.add_diagonal(cov_ridge);
    return g;
}

double log_det_from_cholesky(const Matrix& l) {
    double acc = 0.0;
    for (int i = 0; i < l.rows(); ++i) acc += std::log(l(i, i));
    return 2.0 * acc;
}

} // namespace

double k_pb(const DrugCombination& dp, const DrugCombination& dq, const SymmetricMatrix& sds,
            double ridge, double cov_ridge) {
    check_indices(dp, sds);
    check_indices(dq, sds);

    // Union of the two drug sets; embedding lives in R^m.
    std::vector<int> u = dp.drugs;
    u.insert(u.end(), dq.drugs.begin(), dq.drugs.end());
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    const int m = static_cast<int>(u.size());

    SymmetricMatrix g(m);
    for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b) g.set(a, b, sds(u[a], u[b]));
    g.add_diagonal(ridge);

    Matrix embed;
    try {
        embed = cholesky(g);
    } catch (const NotPositiveDefinite&) {
        throw FactorizationFailure();
    }

    auto positions = [&](const DrugCombination& d) {
        std::vector<int> pos;
        pos.reserve(d.drugs.size());
        for (int idx : d.drugs)
            pos.push_back(static_cast<int>(std::lower_bound(u.begin(), u.end(), idx) - u.begin()));
        return pos;
    };

    FittedGaussian gp = fit_gaussian(embed, positions(dp), cov_ridge);
    FittedGaussian gq = fit_gaussian(embed, positions(dq), cov_ridge);

    SymmetricMatrix avg(m);
    for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b) avg.set(a, b, 0.5 * (gp.cov(a, b) + gq.cov(a, b)));

    Matrix lp, lq, lavg;
    try {
        lp = cholesky(gp.cov);
        lq = cholesky(gq.cov);
        lavg = cholesky(avg);
    } catch (const NotPositiveDefinite&) {
        throw FactorizationFailure();
    }

    // Mahalanobis term through the average covariance: solve L z = (mu_p - mu_q).
    std::vector<double> z(m);
    for (int i = 0; i < m; ++i) {
        double v = gp.mean[i] - gq.mean[i];
        for (int k = 0; k < i; ++k) v -= lavg(i, k) * z[k];
        z[i] = v / lavg(i, i);
    }
    double maha = 0.0;
    for (double v : z) maha += v * v;

    double log_aff = -0.125 * maha - 0.5 * log_det_from_cholesky(lavg) +
                     0.25 * log_det_from_cholesky(lp) + 0.25 * log_det_from_cholesky(lq);
    return std::exp(log_aff);
}

namespace {

template <typename PairFn>
SymmetricMatrix assemble_gram(int n, PairFn&& pair_value, bool parallel) {
    SymmetricMatrix m(n);
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int p = 0; p < n; ++p)
            for (int q = p; q < n; ++q) m.set(p, q, pair_value(p, q));
    } else {
        for (int p = 0; p < n; ++p)
            for (int q = p; q < n; ++q) m.set(p, q, pair_value(p, q));
    }
    return m;
}

SymmetricMatrix build_similarity(const std::vector<DrugCombination>& instances,
                                 const KernelSpec& spec, const SymmetricMatrix* sds,
                                 bool parallel) {
    spec.validate();
    bool needs_sds = spec.family == KernelFamily::GM || spec.family == KernelFamily::DS ||
                     spec.family == KernelFamily::PB;
    if (needs_sds && sds == nullptr)
        throw ValidationError("kernel family requires an sds matrix");

    const int n = static_cast<int>(instances.size());
    switch (spec.family) {
        case KernelFamily::GM:
            return assemble_gram(
                n, [&](int p, int q) { return s_gm(instances[p], instances[q], *sds); }, parallel);
        case KernelFamily::CD1:
            return assemble_gram(
                n, [&](int p, int q) { return k_cd1(instances[p], instances[q]); }, parallel);
        case KernelFamily::CD2:
            return assemble_gram(
                n, [&](int p, int q) { return k_cd2(instances[p], instances[q]); }, parallel);
        case KernelFamily::DS:
            return assemble_gram(
                n, [&](int p, int q) { return k_ds(instances[p], instances[q], *sds); }, parallel);
        case KernelFamily::PB:
            return assemble_gram(
                n,
                [&](int p, int q) {
                    return k_pb(instances[p], instances[q], *sds, spec.pb_ridge, spec.pb_cov_ridge);
                },
                parallel);
    }
    throw ValidationError("unknown kernel family");
}

} // namespace

SymmetricMatrix similarity_matrix(const std::vector<DrugCombination>& instances,
                                  const KernelSpec& spec, const SymmetricMatrix* sds) {
    return build_similarity(instances, spec, sds, true);
}

SymmetricMatrix similarity_matrix_serial(const std::vector<DrugCombination>& instances,
                                         const KernelSpec& spec, const SymmetricMatrix* sds) {
    return build_similarity(instances, spec, sds, false);
}

SymmetricMatrix k_pb_matrix(const std::vector<DrugCombination>& instances,
                            const SymmetricMatrix& sds, double ridge, double cov_ridge) {
    return assemble_gram(
        static_cast<int>(instances.size()),
        [&](int p, int q) { return k_pb(instances[p], instances[q], sds, ridge, cov_ridge); },
        true);
}

KernelMatrix psd_repair(const SymmetricMatrix& s, double tol) {
    KernelMatrix out;
    out.values = s;
    if (s.size() == 0) return out;
    double lambda_min = eigen_symmetric(s).eigenvalues.front();
    if (lambda_min < -tol) {
        out.shift = -lambda_min;
        out.values.add_diagonal(out.shift);
    }
    return out;
}

} // namespace ckl
