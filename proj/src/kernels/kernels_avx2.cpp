#include <cstddef>
#include <limits>

#include "c2g/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace c2g::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_pd(lo, _mm_unpackhi_pd(lo, lo)));
}

void v_add(const double* a, const double* b, double* o, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(o + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                          _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) o[i] = a[i] + b[i];
}
void v_sub(const double* a, const double* b, double* o, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(o + i, _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                          _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) o[i] = a[i] - b[i];
}
void v_mul(const double* a, const double* b, double* o, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(o + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                          _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) o[i] = a[i] * b[i];
}
void v_scale(const double* a, double s, double* o, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(o + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vs));
  for (; i < n; ++i) o[i] = a[i] * s;
}
void v_axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(
        y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}
double v_dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4),
                           acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double r = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}
double v_sum(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double r = hsum(acc);
  for (; i < n; ++i) r += a[i];
  return r;
}
double v_max(const double* a, std::size_t n, std::size_t* arg) {
  // argmax must match the scalar first-maximum rule, so scan scalar.
  double best = -std::numeric_limits<double>::infinity();
  std::size_t bi = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] > best) {
      best = a[i];
      bi = i;
    }
  }
  if (arg) *arg = bi;
  return best;
}

// NN / TN inner step: c_row += av * b_row over n columns.
inline void fma_row(double av, const double* brow, double* crow, std::size_t n) {
  const __m256d va = _mm256_set1_pd(av);
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    _mm256_storeu_pd(crow + j, _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j),
                                               _mm256_loadu_pd(crow + j)));
    _mm256_storeu_pd(
        crow + j + 4,
        _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j + 4),
                        _mm256_loadu_pd(crow + j + 4)));
  }
  for (; j + 4 <= n; j += 4)
    _mm256_storeu_pd(crow + j, _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j),
                                               _mm256_loadu_pd(crow + j)));
  for (; j < n; ++j) crow[j] += av * brow[j];
}

void v_matmul(const double* a, const double* b, double* c, std::size_t m,
              std::size_t k, std::size_t n, bool ta, bool tb, bool acc) {
  if (!acc)
    for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
  if (!ta && !tb) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p)
        fma_row(a[i * k + p], b + p * n, c + i * n, n);
  } else if (!ta && tb) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        c[i * n + j] += v_dot(a + i * k, b + j * k, k);
  } else if (ta && !tb) {
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t i = 0; i < m; ++i)
        fma_row(a[p * m + i], b + p * n, c + i * n, n);
  } else {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double accv = 0.0;
        for (std::size_t p = 0; p < k; ++p) accv += a[p * m + i] * b[j * k + p];
        c[i * n + j] += accv;
      }
  }
}

std::size_t v_nearest3(const double* pts, std::size_t p, const double* q,
                       double* best_sq) {
  const __m256d qx = _mm256_set1_pd(q[0]);
  const __m256d qy = _mm256_set1_pd(q[1]);
  const __m256d qz = _mm256_set1_pd(q[2]);
  double best = std::numeric_limits<double>::infinity();
  std::size_t bi = 0;
  std::size_t i = 0;
  alignas(32) double buf[4];
  for (; i + 4 <= p; i += 4) {
    // Gather 4 xyz triples; strided loads, no fancy shuffles needed here.
    __m256d px = _mm256_set_pd(pts[3 * (i + 3)], pts[3 * (i + 2)],
                               pts[3 * (i + 1)], pts[3 * i]);
    __m256d py = _mm256_set_pd(pts[3 * (i + 3) + 1], pts[3 * (i + 2) + 1],
                               pts[3 * (i + 1) + 1], pts[3 * i + 1]);
    __m256d pz = _mm256_set_pd(pts[3 * (i + 3) + 2], pts[3 * (i + 2) + 2],
                               pts[3 * (i + 1) + 2], pts[3 * i + 2]);
    __m256d dx = _mm256_sub_pd(px, qx);
    __m256d dy = _mm256_sub_pd(py, qy);
    __m256d dz = _mm256_sub_pd(pz, qz);
    __m256d d = _mm256_fmadd_pd(
        dx, dx, _mm256_fmadd_pd(dy, dy, _mm256_mul_pd(dz, dz)));
    _mm256_store_pd(buf, d);
    for (int l = 0; l < 4; ++l) {
      if (buf[l] < best) {
        best = buf[l];
        bi = i + l;
      }
    }
  }
  for (; i < p; ++i) {
    const double dx = pts[3 * i] - q[0];
    const double dy = pts[3 * i + 1] - q[1];
    const double dz = pts[3 * i + 2] - q[2];
    const double d = dx * dx + dy * dy + dz * dz;
    if (d < best) {
      best = d;
      bi = i;
    }
  }
  *best_sq = best;
  return bi;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable t = {"avx2",  v_add,  v_sub,    v_mul,
                                v_scale, v_axpy, v_dot,    v_sum,
                                v_max,   v_matmul, v_nearest3};
  return t;
}

}  // namespace c2g::kernels

#else

namespace c2g::kernels {
const KernelTable& avx2_table() { return scalar_table(); }
}  // namespace c2g::kernels

#endif
