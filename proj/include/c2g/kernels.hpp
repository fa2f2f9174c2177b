#pragma once

#include <cstddef>

// Data-parallel f64 kernels behind a runtime-dispatched table. A scalar
// reference implementation is always present; an AVX2+FMA variant is
// selected at startup when the CPU supports it. Set C2G_FORCE_SCALAR=1
// (or call force_scalar) to pin the reference path.
namespace c2g::kernels {

struct KernelTable {
  const char* name;
  void (*add)(const double*, const double*, double*, std::size_t);
  void (*sub)(const double*, const double*, double*, std::size_t);
  void (*mul)(const double*, const double*, double*, std::size_t);
  void (*scale)(const double*, double, double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  double (*max)(const double*, std::size_t, std::size_t* argmax);
  // C[m x n] (+)= op_a(A) * op_b(B); layouts row-major.
  // trans_a: A stored k x m, read as A^T.  trans_b: B stored n x k.
  void (*matmul)(const double*, const double*, double*, std::size_t m,
                 std::size_t k, std::size_t n, bool trans_a, bool trans_b,
                 bool accumulate);
  // Index of the row of pts (p x 3) closest to q; *best_sq = squared dist.
  std::size_t (*nearest3)(const double* pts, std::size_t p, const double* q,
                          double* best_sq);
};

const KernelTable& active();
const char* active_name();
void force_scalar(bool on);
const KernelTable& scalar_table();
const KernelTable& avx2_table();  // valid only if cpu_has_avx2()
bool cpu_has_avx2();

inline void add(const double* a, const double* b, double* o, std::size_t n) { active().add(a, b, o, n); }
inline void sub(const double* a, const double* b, double* o, std::size_t n) { active().sub(a, b, o, n); }
inline void mul(const double* a, const double* b, double* o, std::size_t n) { active().mul(a, b, o, n); }
inline void scale(const double* a, double s, double* o, std::size_t n) { active().scale(a, s, o, n); }
inline void axpy(double a, const double* x, double* y, std::size_t n) { active().axpy(a, x, y, n); }
inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline double sum(const double* a, std::size_t n) { return active().sum(a, n); }
inline double max(const double* a, std::size_t n, std::size_t* arg = nullptr) { return active().max(a, n, arg); }
inline void matmul(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t k, std::size_t n, bool ta = false,
                   bool tb = false, bool acc = false) {
  active().matmul(a, b, c, m, k, n, ta, tb, acc);
}
inline std::size_t nearest3(const double* pts, std::size_t p, const double* q,
                            double* best_sq) {
  return active().nearest3(pts, p, q, best_sq);
}

}  // namespace c2g::kernels
