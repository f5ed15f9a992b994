#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace minmax::linalg {

/// Dense row-major n x n matrix paired with solve helpers sized for the
/// tiny systems this library produces (induced Markov chains).
struct Dense {
    int n = 0;
    std::vector<double> a;  // row-major

    explicit Dense(int n_) : n(n_), a(static_cast<std::size_t>(n_) * n_, 0.0) {}
    double& at(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    double at(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
};

/// Gaussian elimination with partial pivoting; solves A x = b in place on
/// copies. Throws on a (numerically) singular matrix.
inline std::vector<double> solve_dense(Dense a, std::vector<double> b) {
    int n = a.n;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        double best = std::abs(a.at(col, col));
        for (int i = col + 1; i < n; ++i) {
            double v = std::abs(a.at(i, col));
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best < 1e-300) throw std::runtime_error("singular linear system");
        if (piv != col) {
            for (int j = col; j < n; ++j) std::swap(a.at(piv, j), a.at(col, j));
            std::swap(b[piv], b[col]);
        }
        double d = a.at(col, col);
        for (int i = col + 1; i < n; ++i) {
            double f = a.at(i, col) / d;
            if (f == 0.0) continue;
            a.at(i, col) = 0.0;
            for (int j = col + 1; j < n; ++j) a.at(i, j) -= f * a.at(col, j);
            b[i] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < n; ++j) s -= a.at(i, j) * x[j];
        x[i] = s / a.at(i, i);
    }
    return x;
}

/// Gauss-Seidel sweeps for (I - Q) x = b with substochastic Q, used above
/// the dense-size cutoff. Q is passed as the full matrix A = I - Q.
inline std::vector<double> solve_sweeps(const Dense& a, const std::vector<double>& b,
                                        double residual_tol = 1e-12,
                                        long max_sweeps = 10'000'000) {
    int n = a.n;
    std::vector<double> x(n, 0.0);
    for (long sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_delta = 0.0;
        for (int i = 0; i < n; ++i) {
            double s = b[i];
            for (int j = 0; j < n; ++j)
                if (j != i) s -= a.at(i, j) * x[j];
            double xi = s / a.at(i, i);
            max_delta = std::max(max_delta, std::abs(xi - x[i]));
            x[i] = xi;
        }
        if (max_delta < residual_tol) return x;
    }
    throw std::runtime_error("linear sweeps did not converge");
}

/// Direct elimination for small systems, iterative sweeps above the cutoff.
inline std::vector<double> solve(const Dense& a, const std::vector<double>& b,
                                 int dense_cutoff = 512) {
    if (a.n <= dense_cutoff) return solve_dense(a, b);
    return solve_sweeps(a, b);
}

}  // namespace minmax::linalg
