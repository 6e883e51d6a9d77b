#include "ckl/svm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>

#include "ckl/linalg.hpp"

namespace ckl {

std::vector<int> SvmModel::support_indices() const {
    std::vector<int> idx;
    for (std::size_t i = 0; i < alphas.size(); ++i)
        if (alphas[i] > 0.0) idx.push_back(static_cast<int>(i));
    return idx;
}

namespace {

// lambda_min(K) < -eps  <=>  Cholesky of K + eps*I fails.
bool psd_within(const SymmetricMatrix& k, double eps) {
    SymmetricMatrix shifted = k;
    shifted.add_diagonal(eps);
    try {
        cholesky(shifted);
        return true;
    } catch (const NotPositiveDefinite&) {
        return false;
    }
}

struct Smo {
    const SymmetricMatrix& k;
    const std::vector<int>& y;
    const TrainConfig& cfg;
    int n;
    std::vector<double> alpha;
    std::vector<double> grad; // gradient of the dual minimization objective
    std::vector<double> objective_trace;
    double worst_feasibility = 0.0; // max over steps of box/equality violation

    Smo(const SymmetricMatrix& kernel, const std::vector<int>& labels, const TrainConfig& c)
        : k(kernel), y(labels), cfg(c), n(static_cast<int>(labels.size())),
          alpha(n, 0.0), grad(n, -1.0) {}

    bool in_up(int t) const { return (y[t] > 0 && alpha[t] < cfg.C) || (y[t] < 0 && alpha[t] > 0); }
    bool in_low(int t) const { return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < cfg.C); }

    double dual_objective() const {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += alpha[i] * (1.0 - grad[i]);
        return 0.5 * acc;
    }

    void record_feasibility() {
        double v = 0.0, alpha_y = 0.0;
        for (int i = 0; i < n; ++i) {
            v = std::max(v, std::max(-alpha[i], alpha[i] - cfg.C));
            alpha_y += alpha[i] * static_cast<double>(y[i]);
        }
        worst_feasibility = std::max(worst_feasibility, std::max(v, std::fabs(alpha_y)));
    }

    double violation(int t) const { return -static_cast<double>(y[t]) * grad[t]; }

    double pair_curvature(int a, int b) const {
        double q = k(a, a) + k(b, b) - 2.0 * k(a, b);
        return q > 0 ? q : 1e-12;
    }

    // Maximal violating pair refined by a second-order gain. Both sides get
    // the same treatment (fix the worst violator of either set, choose its
    // partner by gain) so the selection commutes with a global label flip.
    // Returns the gap m - M; indices are -1 when no violating pair exists.
    double select_pair(int& out_i, int& out_j) const {
        int i_star = -1, j_star = -1;
        double m = -std::numeric_limits<double>::infinity();
        double big_m = std::numeric_limits<double>::infinity();
        for (int t = 0; t < n; ++t) {
            double v = violation(t);
            if (in_up(t) && v > m) {
                m = v;
                i_star = t;
            }
            if (in_low(t) && v < big_m) {
                big_m = v;
                j_star = t;
            }
        }
        out_i = -1;
        out_j = -1;
        if (i_star < 0 || j_star < 0) return 0.0;
        double gap = m - big_m;
        if (gap <= 0) return gap;

        int a_j = -1, b_i = -1;
        double a_gain = -1.0, b_gain = -1.0;
        for (int t = 0; t < n; ++t) {
            double v = violation(t);
            if (in_low(t) && v < m) {
                double b = m - v;
                double gain = b * b / pair_curvature(i_star, t);
                if (gain > a_gain) {
                    a_gain = gain;
                    a_j = t;
                }
            }
            if (in_up(t) && v > big_m) {
                double b = v - big_m;
                double gain = b * b / pair_curvature(t, j_star);
                if (gain > b_gain) {
                    b_gain = gain;
                    b_i = t;
                }
            }
        }

        auto unordered = [](int x, int z) {
            return std::pair<int, int>(std::min(x, z), std::max(x, z));
        };
        bool take_a;
        if (a_gain != b_gain)
            take_a = a_gain > b_gain;
        else
            take_a = unordered(i_star, a_j) <= unordered(b_i, j_star);
        if (take_a) {
            out_i = i_star;
            out_j = a_j;
        } else {
            out_i = b_i;
            out_j = j_star;
        }
        return gap;
    }

    // Move alpha along y_i e_i - y_j e_j by delta, clipped to the box.
    void update_pair(int i, int j) {
        double a = k(i, i) + k(j, j) - 2.0 * k(i, j);
        if (a <= 0) a = 1e-12;
        double delta = -(static_cast<double>(y[i]) * grad[i] -
                         static_cast<double>(y[j]) * grad[j]) / a;

        double max_delta = std::numeric_limits<double>::infinity();
        max_delta = std::min(max_delta, y[i] > 0 ? cfg.C - alpha[i] : alpha[i]);
        max_delta = std::min(max_delta, y[j] > 0 ? alpha[j] : cfg.C - alpha[j]);
        delta = std::clamp(delta, 0.0, max_delta);

        alpha[i] += static_cast<double>(y[i]) * delta;
        alpha[j] -= static_cast<double>(y[j]) * delta;
        for (int t = 0; t < n; ++t)
            grad[t] += static_cast<double>(y[t]) * delta * (k(t, i) - k(t, j));
    }

    TrainResult run() {
        TrainResult result;
        double gap = 0.0;
        int pass = 0;
        bool converged = false;
        if (cfg.track_objective) objective_trace.push_back(dual_objective());
        for (; pass < cfg.max_passes && !converged; ++pass) {
            for (int step = 0; step < n; ++step) {
                int i, j;
                gap = select_pair(i, j);
                if (i < 0 || j < 0 || gap <= cfg.kkt_tol) {
                    converged = true;
                    break;
                }
                update_pair(i, j);
                if (cfg.track_objective) {
                    objective_trace.push_back(dual_objective());
                    record_feasibility();
                }
            }
        }

        if (!converged) { // report the gap left after the last update
            int i, j;
            gap = select_pair(i, j);
            if (i < 0 || j < 0) gap = 0.0;
        }
        result.converged = converged;
        result.passes = pass;
        result.kkt_violation = std::max(gap, 0.0);
        result.objective_trace = std::move(objective_trace);
        result.feasibility_violation = worst_feasibility;

        SvmModel& model = result.model;
        model.alphas = alpha;
        model.labels = y;
        model.C = cfg.C;
        model.bias = compute_bias();
        return result;
    }

    double compute_bias() const {
        // Average y_i - sum_j alpha_j y_j K(j,i) over free support vectors;
        // with none free, the midpoint of the KKT-derived bounds.
        const double free_eps = 1e-12 * cfg.C;
        double acc = 0.0;
        int n_free = 0;
        double lower = -std::numeric_limits<double>::infinity();
        double upper = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            // S_i = sum_j alpha_j y_j K(i,j) = y_i (grad_i + 1)
            double r = static_cast<double>(y[i]) -
                       static_cast<double>(y[i]) * (grad[i] + 1.0);
            if (alpha[i] > free_eps && alpha[i] < cfg.C - free_eps) {
                acc += r;
                ++n_free;
            } else if (alpha[i] <= free_eps) {
                if (y[i] > 0)
                    lower = std::max(lower, r);
                else
                    upper = std::min(upper, r);
            } else { // alpha == C
                if (y[i] > 0)
                    upper = std::min(upper, r);
                else
                    lower = std::max(lower, r);
            }
        }
        if (n_free > 0) return acc / static_cast<double>(n_free);
        if (std::isinf(lower) && std::isinf(upper)) return 0.0;
        if (std::isinf(lower)) return upper;
        if (std::isinf(upper)) return lower;
        return 0.5 * (lower + upper);
    }
};

} // namespace

TrainResult train(const SymmetricMatrix& kernel, const std::vector<int>& labels,
                  const TrainConfig& cfg) {
    const int n = static_cast<int>(labels.size());
    if (kernel.size() != n) throw ShapeMismatch();
    if (n == 0) throw ValidationError("empty training set");
    if (cfg.C <= 0 || cfg.kkt_tol <= 0) throw ValidationError("C and kkt_tol must be positive");

    bool has_pos = false, has_neg = false;
    for (int y : labels) {
        if (y > 0)
            has_pos = true;
        else if (y < 0)
            has_neg = true;
        else
            throw ValidationError("labels must be -1 or +1");
    }
    if (!has_pos || !has_neg) throw SingleClassTrainingSet();

    if (cfg.check_psd && !psd_within(kernel, 1e-6)) throw KernelNotPsd();

    Smo smo(kernel, labels, cfg);
    return smo.run();
}

std::vector<double> decision_values(const SvmModel& model, const Matrix& k_rows) {
    const int n_train = static_cast<int>(model.alphas.size());
    if (k_rows.cols() != n_train) throw ShapeMismatch();

    std::vector<double> out(k_rows.rows(), 0.0);
    for (int t = 0; t < k_rows.rows(); ++t) {
        double f = model.bias;
        for (int j = 0; j < n_train; ++j)
            if (model.alphas[j] > 0.0)
                f += model.alphas[j] * static_cast<double>(model.labels[j]) * k_rows(t, j);
        out[t] = f;
    }
    return out;
}

void save_model(std::ostream& os, const SvmModel& model) {
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        os << buf;
    };
    os << model.alphas.size() << ' ';
    put(model.C);
    os << ' ';
    put(model.bias);
    os << '\n';
    for (std::size_t i = 0; i < model.alphas.size(); ++i) {
        if (model.alphas[i] <= 0.0) continue;
        os << i << ' ';
        put(model.alphas[i]);
        os << ' ' << model.labels[i] << '\n';
    }
}

SvmModel load_model(std::istream& is) {
    SvmModel model;
    std::size_t n = 0;
    if (!(is >> n >> model.C >> model.bias))
        throw ValidationError("malformed svm model header");
    model.alphas.assign(n, 0.0);
    model.labels.assign(n, 1);
    std::size_t idx;
    double a;
    int y;
    while (is >> idx >> a >> y) {
        if (idx >= n) throw ValidationError("svm model support index out of range");
        model.alphas[idx] = a;
        model.labels[idx] = y;
    }
    return model;
}

} // namespace ckl
