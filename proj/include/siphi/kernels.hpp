#pragma once

#include <cstddef>
#include <span>

// Dense matrix products used by the autodiff core.
//
// Each product exists twice: `serial::` is the plain reference loop nest and
// `parallel::` splits output rows across OpenMP threads. Both accumulate every
// output element in the same order, so their results are bit-identical; the
// unit tests and the bench target rely on that.
//
// All matrices are row-major and the output is overwritten.

namespace siphi::kernels {

enum class Exec { serial, parallel };

namespace serial {
// c[m x n] = a[m x k] * b[k x n]
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
            std::size_t k, std::size_t n);
// c[k x n] = a[m x k]^T * g[m x n]
void matmul_tn(std::span<const double> a, std::span<const double> g, std::span<double> c, std::size_t m,
               std::size_t k, std::size_t n);
// c[m x k] = g[m x n] * b[k x n]^T
void matmul_nt(std::span<const double> g, std::span<const double> b, std::span<double> c, std::size_t m,
               std::size_t k, std::size_t n);
}  // namespace serial

namespace parallel {
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
            std::size_t k, std::size_t n);
void matmul_tn(std::span<const double> a, std::span<const double> g, std::span<double> c, std::size_t m,
               std::size_t k, std::size_t n);
void matmul_nt(std::span<const double> g, std::span<const double> b, std::span<double> c, std::size_t m,
               std::size_t k, std::size_t n);
}  // namespace parallel

// Products below this many multiply-adds stay on the calling thread.
inline constexpr std::size_t kParallelWorkThreshold = 1u << 15;

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
            std::size_t k, std::size_t n, Exec exec = Exec::parallel);
void matmul_tn(std::span<const double> a, std::span<const double> g, std::span<double> c, std::size_t m,
               std::size_t k, std::size_t n, Exec exec = Exec::parallel);
void matmul_nt(std::span<const double> g, std::span<const double> b, std::span<double> c, std::size_t m,
               std::size_t k, std::size_t n, Exec exec = Exec::parallel);

}  // namespace siphi::kernels
