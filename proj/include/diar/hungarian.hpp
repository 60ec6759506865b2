#pragma once

#include <algorithm>
#include <limits>
#include <vector>

namespace diar {

// Minimum-cost assignment on a dense rectangular matrix, O(n^3) shortest
// augmenting paths with potentials. Rows beyond the rectangle are padded
// internally. assignment[r] = assigned column for row r, or -1.
inline std::vector<int> solve_assignment_min(
    const std::vector<std::vector<double>>& cost) {
    const int n_rows = static_cast<int>(cost.size());
    const int n_cols = n_rows ? static_cast<int>(cost[0].size()) : 0;
    if (n_rows == 0 || n_cols == 0) return std::vector<int>(n_rows, -1);

    const int n = std::max(n_rows, n_cols);
    const double kInf = std::numeric_limits<double>::infinity();
    auto cell = [&](int i, int j) -> double {
        return (i < n_rows && j < n_cols) ? cost[i][j] : 0.0;  // padding
    };

    // 1-indexed potentials; p[j] = row assigned to column j.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            int i0 = p[j0], j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cell(i0 - 1, j - 1) - u[i0] - v[j];
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
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> assignment(n_rows, -1);
    for (int j = 1; j <= n; ++j) {
        if (p[j] >= 1 && p[j] <= n_rows && j <= n_cols) assignment[p[j] - 1] = j - 1;
    }
    return assignment;
}

}  // namespace diar
