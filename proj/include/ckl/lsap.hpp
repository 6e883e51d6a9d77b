// Exact rectangular linear-sum-assignment solver (Hungarian algorithm)
// plus an exhaustive-enumeration oracle for small instances.
#pragma once

#include <utility>
#include <vector>

#include "ckl/core.hpp"

namespace ckl {

struct NonFiniteCost : ValidationError {
    NonFiniteCost() : ValidationError("cost matrix contains a non-finite entry") {}
};
struct TooLarge : ValidationError {
    TooLarge() : ValidationError("brute-force LSAP limited to min dimension <= 8") {}
};

struct CostMatrix {
    int rows = 0, cols = 0;
    std::vector<double> values; // row-major

    CostMatrix() = default;
    CostMatrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, fill) {}

    double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

struct Assignment {
    std::vector<std::pair<int, int>> pairs; // (row, col), min(rows, cols) of them
    double total_cost = 0.0;
};

// Minimum-cost injective matching of the smaller side into the larger.
// Deterministic for a fixed input.
Assignment solve_lsap(const CostMatrix& c);

// Test oracle: exhaustive enumeration, min(rows, cols) <= 8.
Assignment brute_force_lsap(const CostMatrix& c);

} // namespace ckl
