#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "c2g/kernels.hpp"
#include "c2g/losses.hpp"

namespace c2g::losses {

using autodiff::Tensor;
using geometry::Vec3;

namespace {

constexpr double kBceClamp = 1e-7;
constexpr double kDiceEps = 1e-7;
constexpr double kAcosMargin = 1e-7;

void check_aligned(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw std::runtime_error(std::string(what) + ": size mismatch (" +
                             std::to_string(a) + " vs " + std::to_string(b) + ")");
}

}  // namespace

ContactMap ContactMap::clamped(std::vector<double> raw) {
  for (auto& s : raw) s = std::clamp(s, 0.0, 1.0);
  return ContactMap{std::move(raw)};
}

double bce_loss(const ContactMap& pred, const ContactMap& gt) {
  check_aligned(pred.size(), gt.size(), "bce_loss");
  double acc = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred.scores[i], kBceClamp, 1.0 - kBceClamp);
    acc += gt.scores[i] * std::log(p) + (1 - gt.scores[i]) * std::log(1 - p);
  }
  return -acc;
}

double dice_loss(const ContactMap& pred, const ContactMap& gt) {
  check_aligned(pred.size(), gt.size(), "dice_loss");
  double inter = 0, sp = 0, sg = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    inter += pred.scores[i] * gt.scores[i];
    sp += pred.scores[i];
    sg += gt.scores[i];
  }
  return 1.0 - 2.0 * inter / (sp + sg + kDiceEps);
}

double kl_loss(const std::vector<double>& mu, const std::vector<double>& log_var) {
  check_aligned(mu.size(), log_var.size(), "kl_loss");
  double acc = 0;
  for (std::size_t d = 0; d < mu.size(); ++d)
    acc += 1.0 + log_var[d] - mu[d] * mu[d] - std::exp(log_var[d]);
  return -0.5 * acc;
}

double contact_loss(const ContactMap& pred, const ContactMap& gt,
                    const std::vector<double>& mu,
                    const std::vector<double>& log_var) {
  return config::kGamma0 * bce_loss(pred, gt) +
         config::kGamma1 * dice_loss(pred, gt) +
         config::kGamma2 * kl_loss(mu, log_var);
}

double vertex_loss(const hand::HandMesh& pred, const hand::HandMesh& gt) {
  if (pred.model != gt.model || pred.vertices.size() != gt.vertices.size())
    throw std::runtime_error("vertex_loss: topology mismatch");
  double acc = 0;
  for (std::size_t v = 0; v < pred.vertices.size(); ++v) {
    const Vec3 d = pred.vertices[v] - gt.vertices[v];
    acc += d.dot(d);
  }
  return acc / double(pred.vertices.size());
}

double chamfer_loss(const hand::HandMesh& hand, const geometry::ObjectCloud& cloud) {
  if (hand.vertices.empty() || cloud.points.empty())
    throw std::runtime_error("chamfer_loss: empty input");
  std::vector<double> flat_h(hand.vertices.size() * 3);
  for (std::size_t v = 0; v < hand.vertices.size(); ++v) {
    flat_h[3 * v] = hand.vertices[v].x;
    flat_h[3 * v + 1] = hand.vertices[v].y;
    flat_h[3 * v + 2] = hand.vertices[v].z;
  }
  std::vector<double> flat_c(cloud.points.size() * 3);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    flat_c[3 * i] = cloud.points[i].x;
    flat_c[3 * i + 1] = cloud.points[i].y;
    flat_c[3 * i + 2] = cloud.points[i].z;
  }
  double acc_h = 0;
  for (std::size_t v = 0; v < hand.vertices.size(); ++v) {
    double sq;
    kernels::nearest3(flat_c.data(), cloud.points.size(), &flat_h[3 * v], &sq);
    acc_h += sq;
  }
  double acc_c = 0;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    double sq;
    kernels::nearest3(flat_h.data(), hand.vertices.size(), &flat_c[3 * i], &sq);
    acc_c += sq;
  }
  return acc_h / double(hand.vertices.size()) + acc_c / double(cloud.points.size());
}

double penetration_loss(const hand::HandMesh& hand, const geometry::TriMesh& object) {
  const auto sd = geometry::signed_distance(object, hand.vertices);
  double acc = 0;
  for (double d : sd)
    if (d < 0) acc += -d;
  return acc;
}

double translation_loss(const hand::HandPose& pred, const hand::HandPose& gt) {
  double acc = 0;
  for (int i = 0; i < 3; ++i)
    acc += std::abs(pred.translation[i] - gt.translation[i]);
  return acc;
}

double geodesic_pose_loss(const hand::HandPose& pred, const hand::HandPose& gt) {
  double acc = 0;
  for (int j = 0; j < hand::kNumJoints; ++j) {
    const auto rp = geometry::rodrigues(pred.joint_axis_angle(j));
    const auto rg = geometry::rodrigues(gt.joint_axis_angle(j));
    const double tr = (rp.transposed() * rg).trace();
    acc += std::acos(std::clamp((tr - 1.0) / 2.0, -1.0 + kAcosMargin,
                                1.0 - kAcosMargin));
  }
  return acc;
}

ContactMap contact_from_mesh(const hand::HandMesh& hand,
                             const geometry::ObjectCloud& cloud, double t,
                             double s) {
  if (s <= 0) throw std::runtime_error("contact_from_mesh: s <= 0");
  std::vector<double> flat(hand.vertices.size() * 3);
  for (std::size_t v = 0; v < hand.vertices.size(); ++v) {
    flat[3 * v] = hand.vertices[v].x;
    flat[3 * v + 1] = hand.vertices[v].y;
    flat[3 * v + 2] = hand.vertices[v].z;
  }
  ContactMap out;
  out.scores.resize(cloud.points.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const double q[3] = {cloud.points[i].x, cloud.points[i].y, cloud.points[i].z};
    double sq;
    kernels::nearest3(flat.data(), hand.vertices.size(), q, &sq);
    const double d = std::sqrt(sq);
    out.scores[i] = 1.0 - 1.0 / (1.0 + std::exp(-(d - t) / s));
  }
  return out;
}

double consistency_loss(const ContactMap& c_in, const hand::HandMesh& hand,
                        const geometry::ObjectCloud& cloud) {
  check_aligned(c_in.size(), cloud.points.size(), "consistency_loss");
  const ContactMap inferred = contact_from_mesh(hand, cloud);
  double acc = 0;
  for (std::size_t i = 0; i < c_in.size(); ++i) {
    const double d = c_in.scores[i] - inferred.scores[i];
    acc += d * d;
  }
  return acc;
}

double grasp_loss(const GraspLossTerms& terms) {
  return config::kLambdaV * terms.v + config::kLambdaCd * terms.cd +
         config::kLambdaPtr * terms.ptr + config::kLambdaT * terms.t +
         config::kLambdaP * terms.p + config::kLambdaCst * terms.cst;
}

// ---------------------------------------------------------------- autodiff

using autodiff::add;
using autodiff::clamp;
using autodiff::mul;
using autodiff::sadd;
using autodiff::smul;
using autodiff::sub;
using autodiff::sum_all;

Var bce_loss_ad(Tape& t, Var pred, const ContactMap& gt) {
  check_aligned(t.val(pred).size(), gt.size(), "bce_loss");
  const Var y = t.constant(Tensor(t.val(pred).shape, gt.scores));
  const Var p = clamp(t, pred, kBceClamp, 1.0 - kBceClamp);
  const Var one_minus_p = sadd(t, smul(t, p, -1.0), 1.0);
  const Var one_minus_y = t.constant([&] {
    Tensor o(t.val(pred).shape, gt.scores);
    for (auto& x : o.v) x = 1.0 - x;
    return o;
  }());
  const Var term = add(t, mul(t, y, autodiff::log_op(t, p)),
                       mul(t, one_minus_y, autodiff::log_op(t, one_minus_p)));
  return smul(t, sum_all(t, term), -1.0);
}

Var dice_loss_ad(Tape& t, Var pred, const ContactMap& gt) {
  check_aligned(t.val(pred).size(), gt.size(), "dice_loss");
  const Var y = t.constant(Tensor(t.val(pred).shape, gt.scores));
  const Var inter = sum_all(t, mul(t, pred, y));
  const Var den = sadd(t, add(t, sum_all(t, pred), sum_all(t, y)), kDiceEps);
  const Var ratio = mul(t, smul(t, inter, 2.0), autodiff::recip(t, den));
  return sadd(t, smul(t, ratio, -1.0), 1.0);
}

Var kl_loss_ad(Tape& t, Var mu, Var log_var) {
  check_aligned(t.val(mu).size(), t.val(log_var).size(), "kl_loss");
  const Var term = sub(t, sadd(t, log_var, 1.0),
                       add(t, mul(t, mu, mu), autodiff::exp_op(t, log_var)));
  return smul(t, sum_all(t, term), -0.5);
}

Var contact_loss_ad(Tape& t, Var pred, const ContactMap& gt, Var mu,
                    Var log_var) {
  return add(t,
             add(t, smul(t, bce_loss_ad(t, pred, gt), config::kGamma0),
                 smul(t, dice_loss_ad(t, pred, gt), config::kGamma1)),
             smul(t, kl_loss_ad(t, mu, log_var), config::kGamma2));
}

Var vertex_loss_ad(Tape& t, Var verts, const std::vector<Vec3>& gt) {
  const int nv = t.val(verts).rows();
  check_aligned(std::size_t(nv), gt.size(), "vertex_loss");
  std::vector<double> flat(gt.size() * 3);
  for (std::size_t v = 0; v < gt.size(); ++v) {
    flat[3 * v] = gt[v].x;
    flat[3 * v + 1] = gt[v].y;
    flat[3 * v + 2] = gt[v].z;
  }
  const Var g = t.constant(Tensor({nv, 3}, std::move(flat)));
  const Var d = sub(t, verts, g);
  return smul(t, sum_all(t, mul(t, d, d)), 1.0 / double(nv));
}

Var chamfer_loss_ad(Tape& t, Var verts, const geometry::ObjectCloud& cloud) {
  const int nv = t.val(verts).rows();
  const Var d_h = autodiff::min_dist_to_points(t, verts, cloud.points);
  const Var d_c = autodiff::min_dist_to_verts(t, verts, cloud.points);
  const Var m_h = smul(t, sum_all(t, mul(t, d_h, d_h)), 1.0 / double(nv));
  const Var m_c = smul(t, sum_all(t, mul(t, d_c, d_c)),
                       1.0 / double(cloud.points.size()));
  return add(t, m_h, m_c);
}

Var penetration_loss_ad(Tape& t, Var verts, const geometry::TriMesh& object) {
  return autodiff::penetration_sum(t, verts, object);
}

Var translation_loss_ad(Tape& t, Var theta, const hand::HandPose& gt) {
  const Var tr = autodiff::slice_flat(t, theta, 0, 3, {3, 1});
  const Var g = t.constant(
      Tensor({3, 1}, {gt.translation[0], gt.translation[1], gt.translation[2]}));
  return sum_all(t, autodiff::abs_op(t, sub(t, tr, g)));
}

Var geodesic_pose_loss_ad(Tape& t, Var theta, const hand::HandPose& gt) {
  const Var aa = autodiff::slice_flat(t, theta, 3, 48, {hand::kNumJoints, 3});
  const Var rp = autodiff::axis_angle_to_rotation(t, aa);  // [16,9]
  std::vector<double> rg(hand::kNumJoints * 9);
  for (int j = 0; j < hand::kNumJoints; ++j) {
    const auto r = geometry::rodrigues(gt.joint_axis_angle(j));
    std::copy_n(r.m.data(), 9, &rg[std::size_t(j) * 9]);
  }
  const Var rgc = t.constant(Tensor({hand::kNumJoints, 9}, std::move(rg)));
  const Var tr = autodiff::sum_rows(t, mul(t, rp, rgc));  // trace(Rp^T Rg)
  const Var cosang = clamp(t, smul(t, sadd(t, tr, -1.0), 0.5),
                           -1.0 + kAcosMargin, 1.0 - kAcosMargin);
  return sum_all(t, autodiff::acos_op(t, cosang));
}

Var contact_from_mesh_ad(Tape& t, Var verts, const geometry::ObjectCloud& cloud,
                         double soft_t, double soft_s) {
  if (soft_s <= 0) throw std::runtime_error("contact_from_mesh: s <= 0");
  const Var d = autodiff::min_dist_to_verts(t, verts, cloud.points);
  const Var z = smul(t, sadd(t, d, -soft_t), 1.0 / soft_s);
  return sadd(t, smul(t, autodiff::sigmoid(t, z), -1.0), 1.0);
}

Var consistency_loss_ad(Tape& t, const ContactMap& c_in, Var verts,
                        const geometry::ObjectCloud& cloud) {
  check_aligned(c_in.size(), cloud.points.size(), "consistency_loss");
  const Var inferred = contact_from_mesh_ad(t, verts, cloud);
  const Var cin = t.constant(Tensor({int(c_in.size()), 1}, c_in.scores));
  const Var d = sub(t, cin, inferred);
  return sum_all(t, mul(t, d, d));
}

Var grasp_loss_ad(Tape& t, Var v, Var cd, Var ptr, Var trans, Var pose, Var cst) {
  Var acc = smul(t, v, config::kLambdaV);
  acc = add(t, acc, smul(t, cd, config::kLambdaCd));
  acc = add(t, acc, smul(t, ptr, config::kLambdaPtr));
  acc = add(t, acc, smul(t, trans, config::kLambdaT));
  acc = add(t, acc, smul(t, pose, config::kLambdaP));
  acc = add(t, acc, smul(t, cst, config::kLambdaCst));
  return acc;
}

}  // namespace c2g::losses
