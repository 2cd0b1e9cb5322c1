#pragma once

// Brute-force reference computations shared by the unit and acceptance tests.
// Nothing here calls into the library's numeric code.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

namespace oracle {

inline double rmse(const std::vector<double>& a, const std::vector<double>& b) {
    long double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (long double)(a[i] - b[i]) * (a[i] - b[i]);
    return (double)std::sqrt(s / a.size());
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const long double mx = sx / n, my = sy / n;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return (double)(sxy / std::sqrt(sxx * syy));
}

// rank_i = 1 + #{j: v_j < v_i} + (#{j: v_j == v_i} - 1) / 2
inline std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double less = 0, equal = 0;
        for (double w : v) {
            less += w < v[i];
            equal += w == v[i];
        }
        r[i] = 1 + less + (equal - 1) / 2;
    }
    return r;
}

inline double huber(double e, double delta) {
    const double a = std::fabs(e);
    return a <= delta ? 0.5 * e * e : delta * (a - 0.5 * delta);
}

// Solves (X^T X) beta = X^T y by Gaussian elimination with partial pivoting.
// X rows already include any intercept column.
inline std::vector<double> least_squares(const std::vector<std::vector<double>>& X, const std::vector<double>& y) {
    const std::size_t p = X.front().size();
    std::vector<std::vector<long double>> A(p, std::vector<long double>(p + 1, 0));
    for (std::size_t r = 0; r < X.size(); ++r)
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = 0; j < p; ++j) A[i][j] += (long double)X[r][i] * X[r][j];
            A[i][p] += (long double)X[r][i] * y[r];
        }
    for (std::size_t c = 0; c < p; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < p; ++r)
            if (std::fabs((double)A[r][c]) > std::fabs((double)A[piv][c])) piv = r;
        std::swap(A[c], A[piv]);
        for (std::size_t r = 0; r < p; ++r) {
            if (r == c) continue;
            const long double f = A[r][c] / A[c][c];
            for (std::size_t k = c; k <= p; ++k) A[r][k] -= f * A[c][k];
        }
    }
    std::vector<double> beta(p);
    for (std::size_t i = 0; i < p; ++i) beta[i] = (double)(A[i][p] / A[i][i]);
    return beta;
}

inline double fit_rmse(const std::vector<std::vector<double>>& X, const std::vector<double>& y) {
    const auto beta = least_squares(X, y);
    std::vector<double> pred(y.size(), 0.0);
    for (std::size_t r = 0; r < X.size(); ++r)
        for (std::size_t i = 0; i < beta.size(); ++i) pred[r] += X[r][i] * beta[i];
    return rmse(pred, y);
}

}  // namespace oracle

namespace testutil {

// Scratch directory under SIPHI_TEST_TMP (set by ctest) or the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
    const char* root = std::getenv("SIPHI_TEST_TMP");
    auto dir = (root ? std::filesystem::path(root) : std::filesystem::temp_directory_path() / "siphi-tests") / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testutil
