#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "c2g/autodiff.hpp"
#include "c2g/kernels.hpp"

namespace c2g::autodiff {
namespace {

using geometry::Vec3;

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  std::ostringstream os;
  os << op << ": shape mismatch [";
  for (int d : a.shape) os << d << ",";
  os << "] vs [";
  for (int d : b.shape) os << d << ",";
  os << "]";
  throw std::runtime_error(os.str());
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) shape_error(op, a, b);
}

// Elementwise op with saved forward value; deriv(x, y) gives dy/dx.
template <typename F, typename D>
Var unary(Tape& t, Var a, F&& f, D&& deriv) {
  const Tensor& av = t.val(a);
  Tensor out = Tensor::zeros(av.shape);
  for (std::size_t i = 0; i < av.size(); ++i) out.v[i] = f(av.v[i]);
  const int out_id = int(t.size());
  const bool ng = t.needs_grad(a);
  return t.emit(std::move(out), ng, [a, out_id, deriv](Tape& tp) {
    const Tensor& g = tp.grad(Var{out_id});
    const Tensor& x = tp.val(a);
    const Tensor& y = tp.val(Var{out_id});
    Tensor& ga = tp.grad_rw(a);
    for (std::size_t i = 0; i < g.size(); ++i)
      ga.v[i] += g.v[i] * deriv(x.v[i], y.v[i]);
  });
}

}  // namespace

Var add(Tape& t, Var a, Var b) {
  check_same_shape("add", t.val(a), t.val(b));
  Tensor out = Tensor::zeros(t.val(a).shape);
  kernels::add(t.val(a).v.data(), t.val(b).v.data(), out.v.data(), out.size());
  const int out_id = int(t.size());
  const bool ng = t.needs_grad(a) || t.needs_grad(b);
  return t.emit(std::move(out), ng, [a, b, out_id](Tape& tp) {
    const Tensor& g = tp.grad(Var{out_id});
    if (tp.needs_grad(a))
      kernels::axpy(1.0, g.v.data(), tp.grad_rw(a).v.data(), g.size());
    if (tp.needs_grad(b))
      kernels::axpy(1.0, g.v.data(), tp.grad_rw(b).v.data(), g.size());
  });
}

Var sub(Tape& t, Var a, Var b) {
  check_same_shape("sub", t.val(a), t.val(b));
  Tensor out = Tensor::zeros(t.val(a).shape);
  kernels::sub(t.val(a).v.data(), t.val(b).v.data(), out.v.data(), out.size());
  const int out_id = int(t.size());
  const bool ng = t.needs_grad(a) || t.needs_grad(b);
  return t.emit(std::move(out), ng, [a, b, out_id](Tape& tp) {
    const Tensor& g = tp.grad(Var{out_id});
    if (tp.needs_grad(a))
      kernels::axpy(1.0, g.v.data(), tp.grad_rw(a).v.data(), g.size());
    if (tp.needs_grad(b))
      kernels::axpy(-1.0, g.v.data(), tp.grad_rw(b).v.data(), g.size());
  });
}

Var mul(Tape& t, Var a, Var b) {
  check_same_shape("mul", t.val(a), t.val(b));
  Tensor out = Tensor::zeros(t.val(a).shape);
  kernels::mul(t.val(a).v.data(), t.val(b).v.data(), out.v.data(), out.size());
  const int out_id = int(t.size());
  const bool ng = t.needs_grad(a) || t.needs_grad(b);
  return t.emit(std::move(out), ng, [a, b, out_id](Tape& tp) {
    const Tensor& g = tp.grad(Var{out_id});
    if (tp.needs_grad(a)) {
      const Tensor& bv = tp.val(b);
      Tensor& ga = tp.grad_rw(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i] * bv.v[i];
    }
    if (tp.needs_grad(b)) {
      const Tensor& av = tp.val(a);
      Tensor& gb = tp.grad_rw(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb.v[i] += g.v[i] * av.v[i];
    }
  });
}

Var smul(Tape& t, Var a, double s) {
  return unary(t, a, [s](double x) { return x * s; },
               [s](double, double) { return s; });
}

Var sadd(Tape& t, Var a, double s) {
  return unary(t, a, [s](double x) { return x + s; },
               [](double, double) { return 1.0; });
}

Var matmul(Tape& t, Var a, Var b) {
  const Tensor& av = t.val(a);
  const Tensor& bv = t.val(b);
  if (av.shape.size() != 2 || bv.shape.size() != 2 || av.shape[1] != bv.shape[0])
    shape_error("matmul", av, bv);
  const int m = av.shape[0], k = av.shape[1], n = bv.shape[1];
  Tensor out = Tensor::zeros({m, n});
  kernels::matmul(av.v.data(), bv.v.data(), out.v.data(), m, k, n);
  const int out_id = int(t.size());
  const bool ng = t.needs_grad(a) || t.needs_grad(b);
  return t.emit(std::move(out), ng, [a, b, out_id, m, k, n](Tape& tp) {
    const Tensor& g = tp.grad(Var{out_id});
    if (tp.needs_grad(a))  // dA = dC * B^T
      kernels::matmul(g.v.data(), tp.val(b).v.data(), tp.grad_rw(a).v.data(), m,
                      n, k, false, true, true);
    if (tp.needs_grad(b))  // dB = A^T * dC
      kernels::matmul(tp.val(a).v.data(), g.v.data(), tp.grad_rw(b).v.data(), k,
                      m, n, true, false, true);
  });
}

Var concat_cols(Tape& t, Var a, Var b) {
  const Tensor& av = t.val(a);
  const Tensor& bv = t.val(b);
  if (av.shape.size() != 2 || bv.shape.size() != 2 || av.shape[0] != bv.shape[0])
    shape_error("concat_cols", av, bv);
  const int n = av.shape[0], p = av.shape[1], q = bv.shape[1];
  Tensor out = Tensor::zeros({n, p + q});
  for (int i = 0; i < n; ++i) {
    std::copy_n(&av.v[std::size_t(i) * p], p, &out.v[std::size_t(i) * (p + q)]);
    std::copy_n(&bv.v[std::size_t(i) * q], q,
                &out.v[std::size_t(i) * (p + q) + p]);
  }
  const int out_id = int(t.size());
  const bool ng = t.needs_grad(a) || t.needs_grad(b);
  return t.emit(std::move(out), ng, [a, b, out_id, n, p, q](Tape& tp) {
    const Tensor& g = tp.grad(Var{out_id});
    if (tp.needs_grad(a)) {
      Tensor& ga = tp.grad_rw(a);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j)
          ga.v[std::size_t(i) * p + j] += g.v[std::size_t(i) * (p + q) + j];
    }
    if (tp.needs_grad(b)) {
      Tensor& gb = tp.grad_rw(b);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < q; ++j)
          gb.v[std::size_t(i) * q + j] += g.v[std::size_t(i) * (p + q) + p + j];
    }
  });
}

Var broadcast_rows(Tape& t, Var row, int n) {
  const Tensor& rv = t.val(row);
  if (rv.shape.size() != 2 || rv.shape[0] != 1)
    throw std::runtime_error("broadcast_rows: input must be [1,c]");
  const int c = rv.shape[1];
  Tensor out = Tensor::zeros({n, c});
  for (int i = 0; i < n; ++i)
    std::copy_n(rv.v.data(), c, &out.v[std::size_t(i) * c]);
  const int out_id = int(t.size());
  const bool ng = t.needs_grad(row);
  return t.emit(std::move(out), ng, [row, out_id, n, c](Tape& tp) {
    const Tensor& g = tp.grad(Var{out_id});
    Tensor& gr = tp.grad_rw(row);
    for (int i = 0; i < n; ++i)
      kernels::axpy(1.0, &g.v[std::size_t(i) * c], gr.v.data(), c);
  });
}

Var relu(Tape& t, Var a) {
  return unary(t, a, [](double x) { return x > 0 ? x : 0.0; },
               [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var sigmoid(Tape& t, Var a) {
  return unary(t, a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
               [](double, double y) { return y * (1.0 - y); });
}

Var tanh_op(Tape& t, Var a) {
  return unary(t, a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var log_op(Tape& t, Var a) {
  return unary(t, a, [](double x) { return std::log(x); },
               [](double x, double) { return 1.0 / x; });
}

Var exp_op(Tape& t, Var a) {
  return unary(t, a, [](double x) { return std::exp(x); },
               [](double, double y) { return y; });
}

Var sqrt_op(Tape& t, Var a) {
  return unary(t, a, [](double x) { return std::sqrt(x); },
               [](double, double y) { return 0.5 / std::max(y, 1e-300); });
}

Var clamp(Tape& t, Var a, double lo, double hi) {
  return unary(t, a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
               [lo, hi](double x, double) {
                 return (x > lo && x < hi) ? 1.0 : 0.0;
               });
}

Var recip(Tape& t, Var a) {
  return unary(t, a, [](double x) { return 1.0 / x; },
               [](double, double y) { return -y * y; });
}

Var abs_op(Tape& t, Var a) {
  return unary(t, a, [](double x) { return std::abs(x); },
               [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Var acos_op(Tape& t, Var a) {
  return unary(t, a, [](double x) { return std::acos(x); },
               [](double x, double) {
                 return -1.0 / std::sqrt(std::max(1.0 - x * x, 1e-14));
               });
}

Var sum_all(Tape& t, Var a) {
  Tensor out = Tensor::scalar(kernels::sum(t.val(a).v.data(), t.val(a).size()));
  const int out_id = int(t.size());
  const bool ng = t.needs_grad(a);
  return t.emit(std::move(out), ng, [a, out_id](Tape& tp) {
    const double g = tp.grad(Var{out_id}).v[0];
    Tensor& ga = tp.grad_rw(a);
    for (auto& x : ga.v) x += g;
  });
}

Var mean_all(Tape& t, Var a) {
  const double inv = 1.0 / double(t.val(a).size());
  return smul(t, sum_all(t, a), inv);
}

Var sum_rows(Tape& t, Var a) {
  const Tensor& av = t.val(a);
  if (av.shape.size() != 2) throw std::runtime_error("sum_rows: need 2-d input");
  const int n = av.shape[0], c = av.shape[1];
  Tensor out = Tensor::zeros({n, 1});
  for (int i = 0; i < n; ++i)
    out.v[i] = kernels::sum(&av.v[std::size_t(i) * c], c);
  const int out_id = int(t.size());
  const bool ng = t.needs_grad(a);
  return t.emit(std::move(out), ng, [a, out_id, n, c](Tape& tp) {
    const Tensor& g = tp.grad(Var{out_id});
    Tensor& ga = tp.grad_rw(a);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j) ga.v[std::size_t(i) * c + j] += g.v[i];
  });
}

Var max_pool_over_points(Tape& t, Var a) {
  const Tensor& av = t.val(a);
  if (av.shape.size() != 2)
    throw std::runtime_error("max_pool_over_points: need 2-d input");
  const int n = av.shape[0], c = av.shape[1];
  Tensor out = Tensor::zeros({1, c});
  auto argmax = std::make_shared<std::vector<int>>(c);
  for (int j = 0; j < c; ++j) {
    double best = av.v[j];
    int bi = 0;
    for (int i = 1; i < n; ++i) {
      const double x = av.v[std::size_t(i) * c + j];
      if (x > best) {
        best = x;
        bi = i;
      }
    }
    out.v[j] = best;
    (*argmax)[j] = bi;
  }
  const int out_id = int(t.size());
  const bool ng = t.needs_grad(a);
  return t.emit(std::move(out), ng, [a, out_id, c, argmax](Tape& tp) {
    const Tensor& g = tp.grad(Var{out_id});
    Tensor& ga = tp.grad_rw(a);
    for (int j = 0; j < c; ++j)
      ga.v[std::size_t((*argmax)[j]) * c + j] += g.v[j];
  });
}

Var batch_norm_eval(Tape& t, Var x, Var gamma, Var beta, const Tensor& mean,
                    const Tensor& var, double eps) {
  const Tensor& xv = t.val(x);
  const int n = xv.shape[0], c = xv.shape[1];
  if (int(mean.size()) != c || int(var.size()) != c ||
      int(t.val(gamma).size()) != c || int(t.val(beta).size()) != c)
    throw std::runtime_error("batch_norm_eval: channel mismatch");
  auto inv_std = std::make_shared<std::vector<double>>(c);
  for (int j = 0; j < c; ++j) (*inv_std)[j] = 1.0 / std::sqrt(var.v[j] + eps);
  Tensor out = Tensor::zeros({n, c});
  const Tensor& gv = t.val(gamma);
  const Tensor& bv = t.val(beta);
  auto mean_v = std::make_shared<std::vector<double>>(mean.v);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < c; ++j)
      out.v[std::size_t(i) * c + j] =
          gv.v[j] * (xv.v[std::size_t(i) * c + j] - (*mean_v)[j]) * (*inv_std)[j] +
          bv.v[j];
  const int out_id = int(t.size());
  const bool ng = t.needs_grad(x) || t.needs_grad(gamma) || t.needs_grad(beta);
  return t.emit(std::move(out), ng,
                [x, gamma, beta, out_id, n, c, inv_std, mean_v](Tape& tp) {
    const Tensor& g = tp.grad(Var{out_id});
    const Tensor& xv2 = tp.val(x);
    const Tensor& gv2 = tp.val(gamma);
    if (tp.needs_grad(x)) {
      Tensor& gx = tp.grad_rw(x);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j)
          gx.v[std::size_t(i) * c + j] +=
              g.v[std::size_t(i) * c + j] * gv2.v[j] * (*inv_std)[j];
    }
    if (tp.needs_grad(gamma)) {
      Tensor& gg = tp.grad_rw(gamma);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j)
          gg.v[j] += g.v[std::size_t(i) * c + j] *
                     (xv2.v[std::size_t(i) * c + j] - (*mean_v)[j]) *
                     (*inv_std)[j];
    }
    if (tp.needs_grad(beta)) {
      Tensor& gb = tp.grad_rw(beta);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j) gb.v[j] += g.v[std::size_t(i) * c + j];
    }
  });
}

Var slice_flat(Tape& t, Var a, int begin, int len, std::vector<int> out_shape) {
  const Tensor& av = t.val(a);
  if (begin < 0 || begin + len > int(av.size()))
    throw std::runtime_error("slice_flat: range out of bounds");
  Tensor out(out_shape, std::vector<double>(av.v.begin() + begin,
                                            av.v.begin() + begin + len));
  const int out_id = int(t.size());
  const bool ng = t.needs_grad(a);
  return t.emit(std::move(out), ng, [a, out_id, begin, len](Tape& tp) {
    const Tensor& g = tp.grad(Var{out_id});
    Tensor& ga = tp.grad_rw(a);
    for (int i = 0; i < len; ++i) ga.v[begin + i] += g.v[i];
  });
}

Var reshape(Tape& t, Var a, std::vector<int> shape) {
  std::size_t n = 1;
  for (int d : shape) n *= std::size_t(d);
  if (n != t.val(a).size()) throw std::runtime_error("reshape: size mismatch");
  Tensor out(shape, t.val(a).v);
  const int out_id = int(t.size());
  const bool ng = t.needs_grad(a);
  return t.emit(std::move(out), ng, [a, out_id](Tape& tp) {
    const Tensor& g = tp.grad(Var{out_id});
    Tensor& ga = tp.grad_rw(a);
    kernels::axpy(1.0, g.v.data(), ga.v.data(), g.size());
  });
}

Var transpose2d(Tape& t, Var a) {
  const Tensor& av = t.val(a);
  if (av.shape.size() != 2) throw std::runtime_error("transpose2d: need 2-d");
  const int m = av.shape[0], n = av.shape[1];
  Tensor out = Tensor::zeros({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out.v[std::size_t(j) * m + i] = av.v[std::size_t(i) * n + j];
  const int out_id = int(t.size());
  const bool ng = t.needs_grad(a);
  return t.emit(std::move(out), ng, [a, out_id, m, n](Tape& tp) {
    const Tensor& g = tp.grad(Var{out_id});
    Tensor& ga = tp.grad_rw(a);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        ga.v[std::size_t(i) * n + j] += g.v[std::size_t(j) * m + i];
  });
}

Var concat_rows(Tape& t, const std::vector<Var>& blocks) {
  if (blocks.empty()) throw std::runtime_error("concat_rows: no inputs");
  const int c = t.val(blocks[0]).cols();
  int total = 0;
  bool ng = false;
  for (Var b : blocks) {
    if (t.val(b).cols() != c) shape_error("concat_rows", t.val(blocks[0]), t.val(b));
    total += t.val(b).rows();
    ng = ng || t.needs_grad(b);
  }
  Tensor out = Tensor::zeros({total, c});
  auto offsets = std::make_shared<std::vector<int>>();
  int row = 0;
  for (Var b : blocks) {
    const Tensor& bv = t.val(b);
    offsets->push_back(row);
    std::copy(bv.v.begin(), bv.v.end(), out.v.begin() + std::size_t(row) * c);
    row += bv.rows();
  }
  const int out_id = int(t.size());
  auto ins = std::make_shared<std::vector<Var>>(blocks);
  return t.emit(std::move(out), ng, [ins, offsets, out_id, c](Tape& tp) {
    const Tensor& g = tp.grad(Var{out_id});
    for (std::size_t k = 0; k < ins->size(); ++k) {
      Var b = (*ins)[k];
      if (!tp.needs_grad(b)) continue;
      Tensor& gb = tp.grad_rw(b);
      const std::size_t base = std::size_t((*offsets)[k]) * c;
      kernels::axpy(1.0, &g.v[base], gb.v.data(), gb.size());
    }
  });
}

Var axis_angle_to_rotation(Tape& t, Var aa) {
  const Tensor& av = t.val(aa);
  if (av.shape.size() != 2 || av.shape[1] != 3)
    throw std::runtime_error("axis_angle_to_rotation: need [j,3] input");
  const int j = av.shape[0];
  Tensor out = Tensor::zeros({j, 9});
  for (int r = 0; r < j; ++r) {
    const Vec3 w{av.v[3 * r], av.v[3 * r + 1], av.v[3 * r + 2]};
    const geometry::Mat3 R = geometry::rodrigues(w);
    std::copy_n(R.m.data(), 9, &out.v[std::size_t(r) * 9]);
  }
  const int out_id = int(t.size());
  const bool ng = t.needs_grad(aa);
  return t.emit(std::move(out), ng, [aa, out_id, j](Tape& tp) {
    // d vec(R) / d w_i  (Gallego & Yezzi 2015):
    //   theta > 0: ((w_i [w]x + [w x (I - R) e_i]x) / theta^2) R
    //   theta = 0: [e_i]x
    const Tensor& g = tp.grad(Var{out_id});
    const Tensor& av2 = tp.val(aa);
    const Tensor& rv = tp.val(Var{out_id});
    Tensor& ga = tp.grad_rw(aa);
    auto skew = [](const Vec3& v) {
      geometry::Mat3 s;
      s.m = {0, -v.z, v.y, v.z, 0, -v.x, -v.y, v.x, 0};
      return s;
    };
    for (int r = 0; r < j; ++r) {
      const Vec3 w{av2.v[3 * r], av2.v[3 * r + 1], av2.v[3 * r + 2]};
      geometry::Mat3 R;
      std::copy_n(&rv.v[std::size_t(r) * 9], 9, R.m.data());
      const double th2 = w.dot(w);
      for (int i = 0; i < 3; ++i) {
        geometry::Mat3 dR;
        if (th2 < 1e-18) {
          Vec3 e{0, 0, 0};
          (i == 0 ? e.x : i == 1 ? e.y : e.z) = 1.0;
          dR = skew(e);
        } else {
          Vec3 e{0, 0, 0};
          (i == 0 ? e.x : i == 1 ? e.y : e.z) = 1.0;
          const Vec3 ImRe{e.x - (R.m[0] * e.x + R.m[1] * e.y + R.m[2] * e.z),
                          e.y - (R.m[3] * e.x + R.m[4] * e.y + R.m[5] * e.z),
                          e.z - (R.m[6] * e.x + R.m[7] * e.y + R.m[8] * e.z)};
          const double wi = (i == 0 ? w.x : i == 1 ? w.y : w.z);
          geometry::Mat3 lhs = skew(w * wi + Vec3{0, 0, 0});
          geometry::Mat3 rhs = skew(w.cross(ImRe));
          geometry::Mat3 sum;
          for (int k = 0; k < 9; ++k)
            sum.m[k] = (lhs.m[k] + rhs.m[k]) / th2;
          dR = sum * R;
        }
        double acc = 0;
        for (int k = 0; k < 9; ++k)
          acc += g.v[std::size_t(r) * 9 + k] * dR.m[k];
        ga.v[3 * r + i] += acc;
      }
    }
  });
}

Var min_dist_to_verts(Tape& t, Var verts, const std::vector<Vec3>& cloud) {
  const Tensor& vv = t.val(verts);
  if (vv.shape.size() != 2 || vv.shape[1] != 3)
    throw std::runtime_error("min_dist_to_verts: verts must be [v,3]");
  const int n = int(cloud.size());
  const std::size_t nv = std::size_t(vv.shape[0]);
  Tensor out = Tensor::zeros({n, 1});
  auto arg = std::make_shared<std::vector<std::size_t>>(n);
  auto pts = std::make_shared<std::vector<Vec3>>(cloud);
  for (int i = 0; i < n; ++i) {
    const double q[3] = {cloud[i].x, cloud[i].y, cloud[i].z};
    double sq;
    (*arg)[i] = kernels::nearest3(vv.v.data(), nv, q, &sq);
    out.v[i] = std::sqrt(sq);
  }
  const int out_id = int(t.size());
  const bool ng = t.needs_grad(verts);
  return t.emit(std::move(out), ng, [verts, out_id, pts, n, arg](Tape& tp) {
    const Tensor& g = tp.grad(Var{out_id});
    const Tensor& vv2 = tp.val(verts);
    const Tensor& d = tp.val(Var{out_id});
    Tensor& gv = tp.grad_rw(verts);
    for (int i = 0; i < n; ++i) {
      const std::size_t k = (*arg)[i];
      const double di = std::max(d.v[i], 1e-12);
      gv.v[3 * k] += g.v[i] * (vv2.v[3 * k] - (*pts)[i].x) / di;
      gv.v[3 * k + 1] += g.v[i] * (vv2.v[3 * k + 1] - (*pts)[i].y) / di;
      gv.v[3 * k + 2] += g.v[i] * (vv2.v[3 * k + 2] - (*pts)[i].z) / di;
    }
  });
}

Var min_dist_to_points(Tape& t, Var verts, const std::vector<Vec3>& cloud) {
  const Tensor& vv = t.val(verts);
  if (vv.shape.size() != 2 || vv.shape[1] != 3)
    throw std::runtime_error("min_dist_to_points: verts must be [v,3]");
  const int nv = vv.shape[0];
  std::vector<double> flat(cloud.size() * 3);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    flat[3 * i] = cloud[i].x;
    flat[3 * i + 1] = cloud[i].y;
    flat[3 * i + 2] = cloud[i].z;
  }
  Tensor out = Tensor::zeros({nv, 1});
  auto arg = std::make_shared<std::vector<std::size_t>>(nv);
  auto pts = std::make_shared<std::vector<double>>(std::move(flat));
  for (int v = 0; v < nv; ++v) {
    double sq;
    (*arg)[v] =
        kernels::nearest3(pts->data(), cloud.size(), &vv.v[3 * v], &sq);
    out.v[v] = std::sqrt(sq);
  }
  const int out_id = int(t.size());
  const bool ng = t.needs_grad(verts);
  return t.emit(std::move(out), ng, [verts, out_id, nv, arg, pts](Tape& tp) {
    const Tensor& g = tp.grad(Var{out_id});
    const Tensor& vv2 = tp.val(verts);
    const Tensor& d = tp.val(Var{out_id});
    Tensor& gv = tp.grad_rw(verts);
    for (int v = 0; v < nv; ++v) {
      const std::size_t k = (*arg)[v];
      const double dv = std::max(d.v[v], 1e-12);
      gv.v[3 * v] += g.v[v] * (vv2.v[3 * v] - (*pts)[3 * k]) / dv;
      gv.v[3 * v + 1] += g.v[v] * (vv2.v[3 * v + 1] - (*pts)[3 * k + 1]) / dv;
      gv.v[3 * v + 2] += g.v[v] * (vv2.v[3 * v + 2] - (*pts)[3 * k + 2]) / dv;
    }
  });
}

Var penetration_sum(Tape& t, Var verts, const geometry::TriMesh& object) {
  const Tensor& vv = t.val(verts);
  if (vv.shape.size() != 2 || vv.shape[1] != 3)
    throw std::runtime_error("penetration_sum: verts must be [v,3]");
  const int nv = vv.shape[0];
  std::vector<Vec3> pts(nv);
  for (int v = 0; v < nv; ++v)
    pts[v] = {vv.v[3 * v], vv.v[3 * v + 1], vv.v[3 * v + 2]};
  std::vector<double> sd;
  std::vector<Vec3> closest;
  geometry::signed_distance_with_closest(object, pts, &sd, &closest);
  double total = 0;
  auto inside = std::make_shared<std::vector<int>>();
  auto dirs = std::make_shared<std::vector<Vec3>>();
  for (int v = 0; v < nv; ++v) {
    if (sd[v] < 0) {
      total += -sd[v];
      const Vec3 away = (pts[v] - closest[v]);
      const double n = away.norm();
      if (n > 1e-12) {
        inside->push_back(v);
        dirs->push_back(away / n);  // direction of increasing depth
      }
    }
  }
  const int out_id = int(t.size());
  const bool ng = t.needs_grad(verts);
  return t.emit(Tensor::scalar(total), ng,
                [verts, out_id, inside, dirs](Tape& tp) {
    const double g = tp.grad(Var{out_id}).v[0];
    Tensor& gv = tp.grad_rw(verts);
    for (std::size_t i = 0; i < inside->size(); ++i) {
      const int v = (*inside)[i];
      gv.v[3 * v] += g * (*dirs)[i].x;
      gv.v[3 * v + 1] += g * (*dirs)[i].y;
      gv.v[3 * v + 2] += g * (*dirs)[i].z;
    }
  });
}

double finite_difference_check(const std::function<Var(Tape&, Var)>& f,
                               const Tensor& x, double eps) {
  Tape tape;
  Var leaf = tape.leaf(x, true);
  Var out = f(tape, leaf);
  tape.backward(out);
  const Tensor analytic = tape.grad(leaf);

  double max_rel = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Tensor xp = x, xm = x;
    xp.v[i] += eps;
    xm.v[i] -= eps;
    Tape tp, tm;
    const double fp = tp.val(f(tp, tp.leaf(xp, false))).v[0];
    const double fm = tm.val(f(tm, tm.leaf(xm, false))).v[0];
    const double numeric = (fp - fm) / (2 * eps);
    const double denom =
        std::max({std::abs(analytic.v[i]), std::abs(numeric), 1e-6});
    max_rel = std::max(max_rel, std::abs(analytic.v[i] - numeric) / denom);
  }
  return max_rel;
}

}  // namespace c2g::autodiff
