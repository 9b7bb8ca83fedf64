#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "dblp/kernels.hpp"

namespace dblp::kernels {
namespace {

Backend detect_best() {
  if (const char* env = std::getenv("DBLP_KERNELS")) {
    if (std::string(env) == "scalar") return Backend::scalar;
  }
  if (backend_supported(Backend::avx2)) return Backend::avx2;
  if (backend_supported(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> current{&table(detect_best())};
  return current;
}

std::atomic<Backend>& active_kind() {
  static std::atomic<Backend> kind{detect_best()};
  return kind;
}

const KernelTable& k() { return *active_table().load(std::memory_order_relaxed); }

void check_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": length mismatch " + std::to_string(a) +
                                " vs " + std::to_string(b));
  }
}

}  // namespace

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "unknown";
}

bool backend_supported(Backend backend) {
  switch (backend) {
    case Backend::scalar: return true;
    case Backend::avx2:
#if defined(DBLP_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Backend::neon:
#if defined(DBLP_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Backend backend) {
  if (!backend_supported(backend)) {
    throw std::invalid_argument("kernel backend not available: " +
                                std::string(backend_name(backend)));
  }
  switch (backend) {
#if defined(DBLP_HAVE_AVX2)
    case Backend::avx2: return detail::avx2_table();
#endif
#if defined(DBLP_HAVE_NEON)
    case Backend::neon: return detail::neon_table();
#endif
    default: return detail::scalar_table();
  }
}

Backend active_backend() { return active_kind().load(); }

void set_active_backend(Backend backend) {
  active_table().store(&table(backend));
  active_kind().store(backend);
}

double dot(std::span<const double> a, std::span<const double> b) {
  check_same(a.size(), b.size(), "dot");
  return k().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_same(x.size(), y.size(), "axpy");
  k().axpy(alpha, x.data(), y.data(), x.size());
}

void add(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  check_same(a.size(), b.size(), "add");
  check_same(a.size(), out.size(), "add");
  k().add(a.data(), b.data(), out.data(), a.size());
}

void mul(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  check_same(a.size(), b.size(), "mul");
  check_same(a.size(), out.size(), "mul");
  k().mul(a.data(), b.data(), out.data(), a.size());
}

void mul_acc(std::span<const double> a, std::span<const double> b, std::span<double> y) {
  check_same(a.size(), b.size(), "mul_acc");
  check_same(a.size(), y.size(), "mul_acc");
  k().mul_acc(a.data(), b.data(), y.data(), a.size());
}

void scale(double alpha, std::span<const double> x, std::span<double> out) {
  check_same(x.size(), out.size(), "scale");
  k().scale(alpha, x.data(), out.data(), x.size());
}

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k_dim,
             std::size_t n, bool accumulate) {
  const KernelTable& t = k();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = c + i * n;
    if (!accumulate) {
      for (std::size_t j = 0; j < n; ++j) row[j] = 0.0;
    }
    const double* a_row = a + i * k_dim;
    for (std::size_t p = 0; p < k_dim; ++p) {
      if (a_row[p] != 0.0) t.axpy(a_row[p], b + p * n, row, n);
    }
  }
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k_dim,
             std::size_t n, bool accumulate) {
  const KernelTable& t = k();
  for (std::size_t i = 0; i < m; ++i) {
    const double* a_row = a + i * k_dim;
    double* row = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = t.dot(a_row, b + j * k_dim, k_dim);
      row[j] = accumulate ? row[j] + v : v;
    }
  }
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k_dim,
             std::size_t n, bool accumulate) {
  const KernelTable& t = k();
  if (!accumulate) {
    for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
  }
  for (std::size_t p = 0; p < k_dim; ++p) {
    const double* a_row = a + p * m;
    const double* b_row = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      if (a_row[i] != 0.0) t.axpy(a_row[i], b_row, c + i * n, n);
    }
  }
}

}  // namespace dblp::kernels
