#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dblp/kernels.hpp"
#include "dblp/rng.hpp"

using namespace dblp;
using kernels::Backend;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

std::vector<Backend> vector_backends() {
  std::vector<Backend> out;
  for (Backend b : {Backend::avx2, Backend::neon}) {
    if (kernels::backend_supported(b)) out.push_back(b);
  }
  return out;
}

// Restores the active backend when a test changes it.
struct BackendGuard {
  Backend saved = kernels::active_backend();
  ~BackendGuard() { kernels::set_active_backend(saved); }
};

}  // namespace

TEST_CASE("scalar kernels compute their definitions") {
  const auto& k = kernels::table(Backend::scalar);
  const double a[] = {1, 2, 3};
  const double b[] = {4, -5, 6};
  CHECK(k.dot(a, b, 3) == 12.0);
  double y[] = {1, 1, 1};
  k.axpy(2.0, a, y, 3);
  CHECK(y[0] == 3.0);
  CHECK(y[2] == 7.0);
  double out[3];
  k.add(a, b, out, 3);
  CHECK(out[1] == -3.0);
  k.mul(a, b, out, 3);
  CHECK(out[1] == -10.0);
  k.mul_acc(a, b, out, 3);
  CHECK(out[2] == 36.0);
  k.scale(-0.5, a, out, 3);
  CHECK(out[2] == -1.5);
}

TEST_CASE("vector backends agree with the scalar reference") {
  const auto& ref = kernels::table(Backend::scalar);
  Rng rng(3);
  for (Backend backend : vector_backends()) {
    CAPTURE(kernels::backend_name(backend));
    const auto& k = kernels::table(backend);
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 64u, 67u, 1000u}) {
      CAPTURE(n);
      const auto a = random_vec(n, rng);
      const auto b = random_vec(n, rng);
      const auto y0 = random_vec(n, rng);

      std::vector<double> r(n), v(n);
      ref.add(a.data(), b.data(), r.data(), n);
      k.add(a.data(), b.data(), v.data(), n);
      CHECK(r == v);
      ref.mul(a.data(), b.data(), r.data(), n);
      k.mul(a.data(), b.data(), v.data(), n);
      CHECK(r == v);
      ref.scale(1.7, a.data(), r.data(), n);
      k.scale(1.7, a.data(), v.data(), n);
      CHECK(r == v);
      r = y0;
      v = y0;
      ref.axpy(-0.3, a.data(), r.data(), n);
      k.axpy(-0.3, a.data(), v.data(), n);
      CHECK(r == v);
      r = y0;
      v = y0;
      ref.mul_acc(a.data(), b.data(), r.data(), n);
      k.mul_acc(a.data(), b.data(), v.data(), n);
      CHECK(r == v);

      double abs_sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) abs_sum += std::abs(a[i] * b[i]);
      const double d_ref = ref.dot(a.data(), b.data(), n);
      const double d_vec = k.dot(a.data(), b.data(), n);
      CHECK(std::abs(d_ref - d_vec) <= 1e-14 * (abs_sum + 1.0));
    }
  }
}

TEST_CASE("unsupported backends are rejected") {
  for (Backend b : {Backend::avx2, Backend::neon}) {
    if (!kernels::backend_supported(b)) CHECK_THROWS_AS(kernels::table(b), std::invalid_argument);
  }
  CHECK(kernels::backend_supported(Backend::scalar));
}

TEST_CASE("span wrappers check lengths") {
  std::vector<double> a(3), b(4);
  CHECK_THROWS_AS(kernels::dot(a, b), std::invalid_argument);
  CHECK_THROWS_AS(kernels::axpy(1.0, a, b), std::invalid_argument);
  CHECK_THROWS_AS(kernels::add(a, a, b), std::invalid_argument);
}

TEST_CASE("gemm variants match a naive triple loop on every backend") {
  BackendGuard guard;
  Rng rng(5);
  const std::size_t m = 5, k = 7, n = 6;
  const auto a = random_vec(m * k, rng);   // m×k
  const auto b = random_vec(k * n, rng);   // k×n
  const auto bt = random_vec(n * k, rng);  // n×k
  const auto at = random_vec(k * m, rng);  // k×m

  std::vector<double> nn(m * n, 0.0), nt(m * n, 0.0), tn(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t p = 0; p < k; ++p) {
        nn[i * n + j] += a[i * k + p] * b[p * n + j];
        nt[i * n + j] += a[i * k + p] * bt[j * k + p];
        tn[i * n + j] += at[p * m + i] * b[p * n + j];
      }
    }
  }
  std::vector<Backend> all{Backend::scalar};
  for (Backend bk : vector_backends()) all.push_back(bk);
  for (Backend backend : all) {
    CAPTURE(kernels::backend_name(backend));
    kernels::set_active_backend(backend);
    CHECK(kernels::active_backend() == backend);
    std::vector<double> c(m * n, 99.0);
    kernels::gemm_nn(a.data(), b.data(), c.data(), m, k, n);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(nn[i]).epsilon(1e-13));
    kernels::gemm_nt(a.data(), bt.data(), c.data(), m, k, n);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(nt[i]).epsilon(1e-13));
    kernels::gemm_tn(at.data(), b.data(), c.data(), m, k, n);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(tn[i]).epsilon(1e-13));
    kernels::gemm_tn(at.data(), b.data(), c.data(), m, k, n, true);
    for (std::size_t i = 0; i < c.size(); ++i) {
      CHECK(c[i] == doctest::Approx(2 * tn[i]).epsilon(1e-13));
    }
  }
}
