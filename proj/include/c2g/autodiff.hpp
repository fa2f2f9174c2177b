#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "c2g/geometry.hpp"

// Minimal reverse-mode autodiff over dense f64 tensors. A Tape owns the
// graph; Var is a node handle. Construction order is the topological
// order, so backward is a single reverse sweep.
namespace c2g::autodiff {

struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<double> vals);
  static Tensor zeros(std::vector<int> s);
  static Tensor full(std::vector<int> s, double value);
  static Tensor scalar(double value) { return Tensor({1}, {value}); }

  std::size_t size() const { return v.size(); }
  int rows() const { return shape.empty() ? 1 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  double& at(int r, int c) { return v[std::size_t(r) * cols() + c]; }
  double at(int r, int c) const { return v[std::size_t(r) * cols() + c]; }
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  Var leaf(Tensor t, bool requires_grad);
  Var constant(Tensor t) { return leaf(std::move(t), false); }

  const Tensor& val(Var v) const { return nodes_[v.id].val; }
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }

  // Seeds d(out)/d(out) = 1 and runs the reverse sweep. out must be scalar.
  void backward(Var out);

  std::size_t size() const { return nodes_.size(); }

  // --- used by op implementations ---
  struct Node {
    Tensor val;
    Tensor grad;
    bool needs_grad = false;
    std::function<void(Tape&)> back;  // empty for leaves/constants
  };
  Var emit(Tensor value, bool needs_grad, std::function<void(Tape&)> back);
  Tensor& grad_rw(Var v) { return nodes_[v.id].grad; }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

 private:
  std::vector<Node> nodes_;
};

// --- elementwise / structural ops ---
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var smul(Tape& t, Var a, double s);        // scale by constant
Var sadd(Tape& t, Var a, double s);        // shift by constant
Var matmul(Tape& t, Var a, Var b);         // [m,k] x [k,n]
Var concat_cols(Tape& t, Var a, Var b);    // [n,p],[n,q] -> [n,p+q]
Var broadcast_rows(Tape& t, Var row, int n);  // [1,c] -> [n,c]
Var relu(Tape& t, Var a);
Var sigmoid(Tape& t, Var a);
Var tanh_op(Tape& t, Var a);
Var log_op(Tape& t, Var a);
Var exp_op(Tape& t, Var a);
Var sqrt_op(Tape& t, Var a);
Var clamp(Tape& t, Var a, double lo, double hi);
Var recip(Tape& t, Var a);
Var abs_op(Tape& t, Var a);
Var sum_all(Tape& t, Var a);               // -> scalar
Var mean_all(Tape& t, Var a);              // -> scalar
Var sum_rows(Tape& t, Var a);              // [n,c] -> [n,1]
Var max_pool_over_points(Tape& t, Var a);  // column max, [n,c] -> [1,c]
Var batch_norm_eval(Tape& t, Var x, Var gamma, Var beta, const Tensor& mean,
                    const Tensor& var, double eps = 1e-5);
Var acos_op(Tape& t, Var a);               // inputs pre-clamped by caller
Var slice_flat(Tape& t, Var a, int begin, int len, std::vector<int> out_shape);
Var reshape(Tape& t, Var a, std::vector<int> shape);
Var transpose2d(Tape& t, Var a);                    // [m,n] -> [n,m]
Var concat_rows(Tape& t, const std::vector<Var>& blocks);  // same col count

// Batched Rodrigues: [j,3] axis-angle rows -> [j,9] row-major rotations.
Var axis_angle_to_rotation(Tape& t, Var aa);

// --- geometry-coupled primitives (constant mesh/cloud, variable verts) ---
// Per-cloud-point distance to the nearest row of verts: [n,1].
Var min_dist_to_verts(Tape& t, Var verts, const std::vector<geometry::Vec3>& cloud);
// Per-vertex distance to the nearest cloud point: [v,1].
Var min_dist_to_points(Tape& t, Var verts, const std::vector<geometry::Vec3>& cloud);
// Sum over vertices inside the mesh of |signed distance|: scalar.
Var penetration_sum(Tape& t, Var verts, const geometry::TriMesh& object);

// --- optimizer ---
struct AdamState {
  std::vector<Tensor> m, v;
  std::int64_t t = 0;
};

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
               AdamState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);
// Sparse variant: only the listed flat indices of params[0] are updated.
void adam_step_masked(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v,
                      std::int64_t& t, const std::vector<int>& indices,
                      double lr, double beta1 = 0.9, double beta2 = 0.999,
                      double eps = 1e-8);

// Central-difference check of d f / d x against backward(). Returns the max
// relative error over elements (relative to max(|analytic|,|numeric|,eps)).
double finite_difference_check(const std::function<Var(Tape&, Var)>& f,
                               const Tensor& x, double eps = 1e-6);

// --- checkpoints: magic "C2GCKPT1", u32 manifest length, JSON manifest,
// then all tensors as raw little-endian f64 in manifest order. ---
struct Checkpoint {
  std::string model_type;
  std::string manifest_json;  // full manifest (names, shapes, hyperparams)
  std::vector<std::string> names;
  std::vector<Tensor> tensors;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace c2g::autodiff
