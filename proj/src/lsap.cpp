#include "ckl/lsap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ckl {

namespace {

void check(const CostMatrix& c) {
    if (c.rows <= 0 || c.cols <= 0) throw ValidationError("cost matrix is empty");
    for (double v : c.values)
        if (!std::isfinite(v)) throw NonFiniteCost();
}

// Both solver and oracle total their pairs in the same (row-sorted) order so
// equal pair sets produce bit-equal sums.
Assignment finish(const CostMatrix& c, std::vector<std::pair<int, int>> pairs) {
    std::sort(pairs.begin(), pairs.end());
    Assignment out;
    out.pairs = std::move(pairs);
    out.total_cost = 0.0;
    for (const auto& [r, col] : out.pairs) out.total_cost += c.at(r, col);
    return out;
}

// Shortest-augmenting-path Hungarian solver over a square matrix with
// potentials u, v. 1-based internally; returns col assigned to each row.
std::vector<int> solve_square(const CostMatrix& c, int n) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> match_col(n + 1, 0), way(n + 1, 0);

    auto cost_at = [&](int i, int j) -> double {
        // Padded cells beyond the real matrix cost zero.
        if (i <= c.rows && j <= c.cols) return c.at(i - 1, j - 1);
        return 0.0;
    };

    for (int i = 1; i <= n; ++i) {
        match_col[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            int i0 = match_col[j0], j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost_at(i0, j) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match_col[j0] != 0);
        do {
            int j1 = way[j0];
            match_col[j0] = match_col[j1];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (match_col[j]) row_to_col[match_col[j] - 1] = j - 1;
    return row_to_col;
}

void enumerate(const CostMatrix& c, int row, std::vector<char>& col_used,
               std::vector<int>& current, double cost_so_far,
               std::vector<int>& best, double& best_cost) {
    if (row == c.rows) {
        if (cost_so_far < best_cost) {
            best_cost = cost_so_far;
            best = current;
        }
        return;
    }
    for (int col = 0; col < c.cols; ++col) {
        if (col_used[col]) continue;
        col_used[col] = 1;
        current[row] = col;
        enumerate(c, row + 1, col_used, current, cost_so_far + c.at(row, col), best, best_cost);
        col_used[col] = 0;
    }
}

} // namespace

Assignment solve_lsap(const CostMatrix& c) {
    check(c);
    int n = std::max(c.rows, c.cols);
    std::vector<int> row_to_col = solve_square(c, n);

    std::vector<std::pair<int, int>> pairs;
    for (int r = 0; r < c.rows; ++r) {
        int col = row_to_col[r];
        if (col < c.cols) pairs.emplace_back(r, col);
    }
    return finish(c, std::move(pairs));
}

Assignment brute_force_lsap(const CostMatrix& c) {
    check(c);
    if (std::min(c.rows, c.cols) > 8) throw TooLarge();

    // Enumerate with the smaller side as rows so every row is matched.
    if (c.rows > c.cols) {
        CostMatrix t(c.cols, c.rows);
        for (int r = 0; r < c.rows; ++r)
            for (int j = 0; j < c.cols; ++j) t.at(j, r) = c.at(r, j);
        Assignment a = brute_force_lsap(t);
        std::vector<std::pair<int, int>> pairs;
        for (const auto& [tr, tc] : a.pairs) pairs.emplace_back(tc, tr);
        return finish(c, std::move(pairs));
    }

    std::vector<char> col_used(c.cols, 0);
    std::vector<int> current(c.rows, -1), best;
    double best_cost = std::numeric_limits<double>::infinity();
    enumerate(c, 0, col_used, current, 0.0, best, best_cost);

    std::vector<std::pair<int, int>> pairs;
    for (int r = 0; r < c.rows; ++r) pairs.emplace_back(r, best[r]);
    return finish(c, std::move(pairs));
}

} // namespace ckl
