#pragma once

// Dense double-precision inner loops used by the tensor ops.
//
// Every kernel has a scalar reference implementation. Vector variants
// (AVX2 on x86-64, NEON on aarch64) are selected at runtime when the CPU
// supports them. Elementwise kernels agree bit-for-bit with the scalar
// reference; reductions (dot) agree to rounding, since lane-parallel
// accumulation changes the summation order.
//
// The environment variable DBLP_KERNELS=scalar forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace dblp::kernels {

enum class Backend { scalar, avx2, neon };

/// Raw kernel entry points for one backend. All pointers are non-null.
struct KernelTable {
  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// out[i] = a[i] + b[i]
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  /// out[i] = a[i] * b[i]
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  /// y[i] += a[i] * b[i]
  void (*mul_acc)(const double* a, const double* b, double* y, std::size_t n);
  /// out[i] = alpha * x[i]
  void (*scale)(double alpha, const double* x, double* out, std::size_t n);
};

std::string_view backend_name(Backend backend);
bool backend_supported(Backend backend);

/// Table for an explicit backend. Throws std::invalid_argument when the
/// backend is not compiled in or not supported by this CPU.
const KernelTable& table(Backend backend);

Backend active_backend();
/// Switches the process-wide backend. Not thread-safe against concurrent
/// kernel calls.
void set_active_backend(Backend backend);

// Dispatching wrappers over the active backend.

double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void add(std::span<const double> a, std::span<const double> b, std::span<double> out);
void mul(std::span<const double> a, std::span<const double> b, std::span<double> out);
void mul_acc(std::span<const double> a, std::span<const double> b, std::span<double> y);
void scale(double alpha, std::span<const double> x, std::span<double> out);

// Row-major matrix products built on the primitives above. `c` is
// overwritten unless `accumulate` is set.

/// c[m×n] (+)= a[m×k] · b[k×n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate = false);
/// c[m×n] (+)= a[m×k] · b[n×k]ᵀ
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate = false);
/// c[m×n] (+)= a[k×m]ᵀ · b[k×n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n, bool accumulate = false);

namespace detail {
const KernelTable& scalar_table();
#if defined(DBLP_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(DBLP_HAVE_NEON)
const KernelTable& neon_table();
#endif
}  // namespace detail

}  // namespace dblp::kernels
