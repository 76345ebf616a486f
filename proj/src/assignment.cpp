#include "othr/assignment.hpp"

#include <limits>

namespace othr {

std::vector<int> solve_assignment(const MatX& cost) {
    const int rows = static_cast<int>(cost.rows());
    const int cols = static_cast<int>(cost.cols());
    std::vector<int> result(rows, -1);
    if (rows == 0 || cols == 0) return result;

    // Pad to a square problem. Forbidden and dummy cells cost more than any
    // feasible total.
    double finite_max = 0.0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if (std::isfinite(cost(r, c))) finite_max = std::max(finite_max, std::abs(cost(r, c)));
    const int n = std::max(rows, cols);
    const double big = (finite_max + 1.0) * (n + 1);
    const double forbidden = big * (n + 1);
    MatX a = MatX::Constant(n, n, big);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            a(r, c) = std::isfinite(cost(r, c)) ? cost(r, c) : forbidden;

    // Shortest augmenting path with row/column potentials, 1-based work arrays.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
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
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    for (int j = 1; j <= n; ++j) {
        const int r = p[j] - 1;
        const int c = j - 1;
        if (r < rows && c < cols && std::isfinite(cost(r, c))) result[r] = c;
    }
    return result;
}

}  // namespace othr
