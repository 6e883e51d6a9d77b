// Soft-margin kernel SVM over a precomputed kernel matrix, trained by
// sequential minimal optimization with second-order working-pair selection.
#pragma once

#include <iosfwd>
#include <vector>

#include "ckl/core.hpp"

namespace ckl {

struct SingleClassTrainingSet : ValidationError {
    SingleClassTrainingSet() : ValidationError("training labels contain a single class") {}
};
struct KernelNotPsd : ValidationError {
    KernelNotPsd() : ValidationError("training kernel is not positive semi-definite") {}
};
struct ShapeMismatch : ValidationError {
    ShapeMismatch() : ValidationError("kernel block shape does not match the model") {}
};

struct TrainConfig {
    double C = 1.0;
    double kkt_tol = 1e-3;
    int max_passes = 200;    // one pass = n working-pair updates
    bool check_psd = true;   // reject kernels with lambda_min < -1e-6
    bool track_objective = false;
};

struct SvmModel {
    std::vector<double> alphas; // 0 <= alpha_i <= C
    std::vector<int> labels;    // -1 / +1
    double bias = 0.0;
    double C = 1.0;

    std::vector<int> support_indices() const;
};

struct TrainResult {
    SvmModel model;
    bool converged = false;
    int passes = 0;
    double kkt_violation = 0.0; // final maximal-pair gap
    std::vector<double> objective_trace; // dual objective per accepted step, if tracked
    double feasibility_violation = 0.0;  // max per-step box/equality violation, if tracked
};

TrainResult train(const SymmetricMatrix& kernel, const std::vector<int>& labels,
                  const TrainConfig& cfg);

// f(x) = sum_i alpha_i y_i K(x_i, x) + bias for each row of the
// test-by-train kernel block.
std::vector<double> decision_values(const SvmModel& model, const Matrix& k_rows);

void save_model(std::ostream& os, const SvmModel& model);
SvmModel load_model(std::istream& is);

} // namespace ckl
