#include <cstddef>
#include <limits>

#include "c2g/kernels.hpp"

namespace c2g::kernels {
namespace {

void s_add(const double* a, const double* b, double* o, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) o[i] = a[i] + b[i];
}
void s_sub(const double* a, const double* b, double* o, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) o[i] = a[i] - b[i];
}
void s_mul(const double* a, const double* b, double* o, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) o[i] = a[i] * b[i];
}
void s_scale(const double* a, double s, double* o, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) o[i] = a[i] * s;
}
void s_axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}
double s_dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}
double s_sum(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}
double s_max(const double* a, std::size_t n, std::size_t* arg) {
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

// Row-major GEMM covering the three forms autodiff needs:
//   NN: C[m,n] = A[m,k] B[k,n]
//   NT: C[m,n] = A[m,k] B[n,k]^T
//   TN: C[m,n] = A[k,m]^T B[k,n]
void s_matmul(const double* a, const double* b, double* c, std::size_t m,
              std::size_t k, std::size_t n, bool ta, bool tb, bool acc) {
  if (!acc)
    for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
  if (!ta && !tb) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        const double av = a[i * k + p];
        const double* brow = b + p * n;
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
  } else if (!ta && tb) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double accv = 0.0;
        const double* arow = a + i * k;
        const double* brow = b + j * k;
        for (std::size_t p = 0; p < k; ++p) accv += arow[p] * brow[p];
        c[i * n + j] += accv;
      }
  } else if (ta && !tb) {
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t i = 0; i < m; ++i) {
        const double av = a[p * m + i];
        const double* brow = b + p * n;
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
  } else {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double accv = 0.0;
        for (std::size_t p = 0; p < k; ++p) accv += a[p * m + i] * b[j * k + p];
        c[i * n + j] += accv;
      }
  }
}

std::size_t s_nearest3(const double* pts, std::size_t p, const double* q,
                       double* best_sq) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t bi = 0;
  for (std::size_t i = 0; i < p; ++i) {
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

const KernelTable& scalar_table() {
  static const KernelTable t = {"scalar", s_add,  s_sub,    s_mul,
                                s_scale,  s_axpy, s_dot,    s_sum,
                                s_max,    s_matmul, s_nearest3};
  return t;
}

}  // namespace c2g::kernels
