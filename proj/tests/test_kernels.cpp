#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "c2g/geometry.hpp"
#include "c2g/kernels.hpp"

using namespace c2g;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  geometry::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

}  // namespace

TEST_CASE("scalar and avx2 elementwise kernels agree bitwise") {
  if (!kernels::cpu_has_avx2()) return;
  const auto& s = kernels::scalar_table();
  const auto& v = kernels::avx2_table();
  for (std::size_t n : {1u, 3u, 4u, 17u, 256u, 1001u}) {
    const auto a = random_vec(n, 10 + n);
    const auto b = random_vec(n, 20 + n);
    std::vector<double> os(n), ov(n);
    s.add(a.data(), b.data(), os.data(), n);
    v.add(a.data(), b.data(), ov.data(), n);
    CHECK(os == ov);
    s.sub(a.data(), b.data(), os.data(), n);
    v.sub(a.data(), b.data(), ov.data(), n);
    CHECK(os == ov);
    s.mul(a.data(), b.data(), os.data(), n);
    v.mul(a.data(), b.data(), ov.data(), n);
    CHECK(os == ov);
    s.scale(a.data(), 1.7, os.data(), n);
    v.scale(a.data(), 1.7, ov.data(), n);
    CHECK(os == ov);
    os = b;
    ov = b;
    s.axpy(0.3, a.data(), os.data(), n);
    v.axpy(0.3, a.data(), ov.data(), n);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(os[i] == doctest::Approx(ov[i]).epsilon(1e-15));
  }
}

TEST_CASE("reductions agree across implementations") {
  if (!kernels::cpu_has_avx2()) return;
  const auto& s = kernels::scalar_table();
  const auto& v = kernels::avx2_table();
  for (std::size_t n : {1u, 5u, 64u, 777u}) {
    const auto a = random_vec(n, 3 + n);
    const auto b = random_vec(n, 4 + n);
    CHECK(s.dot(a.data(), b.data(), n) ==
          doctest::Approx(v.dot(a.data(), b.data(), n)).epsilon(1e-13));
    CHECK(s.sum(a.data(), n) ==
          doctest::Approx(v.sum(a.data(), n)).epsilon(1e-13));
    std::size_t ia = 0, iv = 0;
    CHECK(s.max(a.data(), n, &ia) == v.max(a.data(), n, &iv));
    CHECK(ia == iv);
  }
}

TEST_CASE("matmul forms agree with a naive triple loop") {
  if (!kernels::cpu_has_avx2()) return;
  const std::size_t m = 7, k = 9, n = 11;
  const auto a = random_vec(m * k, 1);
  const auto at = [&] {
    std::vector<double> t(k * m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) t[p * m + i] = a[i * k + p];
    return t;
  }();
  const auto b = random_vec(k * n, 2);
  const auto bt = [&] {
    std::vector<double> t(n * k);
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t j = 0; j < n; ++j) t[j * k + p] = b[p * n + j];
    return t;
  }();
  std::vector<double> ref(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = 0; p < k; ++p)
        ref[i * n + j] += a[i * k + p] * b[p * n + j];

  for (const auto* tbl : {&kernels::scalar_table(), &kernels::avx2_table()}) {
    std::vector<double> c(m * n);
    tbl->matmul(a.data(), b.data(), c.data(), m, k, n, false, false, false);
    for (std::size_t i = 0; i < m * n; ++i)
      CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    tbl->matmul(a.data(), bt.data(), c.data(), m, k, n, false, true, false);
    for (std::size_t i = 0; i < m * n; ++i)
      CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    tbl->matmul(at.data(), b.data(), c.data(), m, k, n, true, false, false);
    for (std::size_t i = 0; i < m * n; ++i)
      CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    // accumulate doubles the result
    tbl->matmul(a.data(), b.data(), c.data(), m, k, n, false, false, false);
    tbl->matmul(a.data(), b.data(), c.data(), m, k, n, false, false, true);
    for (std::size_t i = 0; i < m * n; ++i)
      CHECK(c[i] == doctest::Approx(2 * ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("nearest3 matches brute force") {
  if (!kernels::cpu_has_avx2()) return;
  const std::size_t p = 37;
  const auto pts = random_vec(p * 3, 5);
  geometry::Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const double q[3] = {rng.uniform(-2, 2), rng.uniform(-2, 2),
                         rng.uniform(-2, 2)};
    double best = 1e300;
    std::size_t bi = 0;
    for (std::size_t i = 0; i < p; ++i) {
      double d = 0;
      for (int a = 0; a < 3; ++a)
        d += (pts[3 * i + a] - q[a]) * (pts[3 * i + a] - q[a]);
      if (d < best) {
        best = d;
        bi = i;
      }
    }
    for (const auto* tbl : {&kernels::scalar_table(), &kernels::avx2_table()}) {
      double sq;
      CHECK(tbl->nearest3(pts.data(), p, q, &sq) == bi);
      CHECK(sq == doctest::Approx(best).epsilon(1e-13));
    }
  }
}
