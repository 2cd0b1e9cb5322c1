#include "siphi/kernels.hpp"

#include <algorithm>
#include <cstdint>

namespace siphi::kernels {

namespace {

// One output row of a*b. Shared by both variants so the summation order is identical.
inline void matmul_row(const double* a, const double* b, double* c, std::size_t i, std::size_t k, std::size_t n) {
    double* ci = c + i * n;
    std::fill(ci, ci + n, 0.0);
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
        const double aip = ai[p];
        const double* bp = b + p * n;
#pragma omp simd
        for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
}

inline void matmul_tn_row(const double* a, const double* g, double* c, std::size_t p, std::size_t m,
                          std::size_t k, std::size_t n) {
    double* cp = c + p * n;
    std::fill(cp, cp + n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double aip = a[i * k + p];
        const double* gi = g + i * n;
#pragma omp simd
        for (std::size_t j = 0; j < n; ++j) cp[j] += aip * gi[j];
    }
}

inline void matmul_nt_row(const double* g, const double* b, double* c, std::size_t i, std::size_t k,
                          std::size_t n) {
    const double* gi = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
        const double* bp = b + p * n;
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += gi[j] * bp[j];
        c[i * k + p] = acc;
    }
}

}  // namespace

namespace serial {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
            std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) matmul_row(a.data(), b.data(), c.data(), i, k, n);
}

void matmul_tn(std::span<const double> a, std::span<const double> g, std::span<double> c, std::size_t m,
               std::size_t k, std::size_t n) {
    for (std::size_t p = 0; p < k; ++p) matmul_tn_row(a.data(), g.data(), c.data(), p, m, k, n);
}

void matmul_nt(std::span<const double> g, std::span<const double> b, std::span<double> c, std::size_t m,
               std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) matmul_nt_row(g.data(), b.data(), c.data(), i, k, n);
}

}  // namespace serial

namespace parallel {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
            std::size_t k, std::size_t n) {
    const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i)
        matmul_row(a.data(), b.data(), c.data(), static_cast<std::size_t>(i), k, n);
}

void matmul_tn(std::span<const double> a, std::span<const double> g, std::span<double> c, std::size_t m,
               std::size_t k, std::size_t n) {
    const auto rows = static_cast<std::int64_t>(k);
#pragma omp parallel for schedule(static)
    for (std::int64_t p = 0; p < rows; ++p)
        matmul_tn_row(a.data(), g.data(), c.data(), static_cast<std::size_t>(p), m, k, n);
}

void matmul_nt(std::span<const double> g, std::span<const double> b, std::span<double> c, std::size_t m,
               std::size_t k, std::size_t n) {
    const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i)
        matmul_nt_row(g.data(), b.data(), c.data(), static_cast<std::size_t>(i), k, n);
}

}  // namespace parallel

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
            std::size_t k, std::size_t n, Exec exec) {
    if (exec == Exec::parallel && m * k * n >= kParallelWorkThreshold)
        parallel::matmul(a, b, c, m, k, n);
    else
        serial::matmul(a, b, c, m, k, n);
}

void matmul_tn(std::span<const double> a, std::span<const double> g, std::span<double> c, std::size_t m,
               std::size_t k, std::size_t n, Exec exec) {
    if (exec == Exec::parallel && m * k * n >= kParallelWorkThreshold)
        parallel::matmul_tn(a, g, c, m, k, n);
    else
        serial::matmul_tn(a, g, c, m, k, n);
}

void matmul_nt(std::span<const double> g, std::span<const double> b, std::span<double> c, std::size_t m,
               std::size_t k, std::size_t n, Exec exec) {
    if (exec == Exec::parallel && m * k * n >= kParallelWorkThreshold)
        parallel::matmul_nt(g, b, c, m, k, n);
    else
        serial::matmul_nt(g, b, c, m, k, n);
}

}  // namespace siphi::kernels
