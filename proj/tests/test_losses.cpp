#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "c2g/config.hpp"
#include "c2g/data.hpp"
#include "c2g/losses.hpp"

using namespace c2g;
using namespace c2g::losses;
using autodiff::Tape;
using autodiff::Tensor;
using autodiff::Var;
using geometry::Vec3;

namespace {

ContactMap random_map(std::size_t n, std::uint64_t seed, double lo = 0.02,
                      double hi = 0.98) {
  geometry::Rng rng(seed);
  std::vector<double> s(n);
  for (auto& x : s) x = rng.uniform(lo, hi);
  return ContactMap{std::move(s)};
}

// Slow, independent re-derivations of each loss.
double oracle_bce(const ContactMap& p, const ContactMap& g) {
  double sum = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::min(std::max(p.scores[i], 1e-7), 1 - 1e-7);
    sum += -(g.scores[i] * std::log(q) + (1 - g.scores[i]) * std::log(1 - q));
  }
  return sum;
}

double oracle_dice(const ContactMap& p, const ContactMap& g) {
  double inter = 0, sp = 0, sg = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    inter += p.scores[i] * g.scores[i];
    sp += p.scores[i];
    sg += g.scores[i];
  }
  return 1.0 - 2 * inter / (sp + sg + 1e-7);
}

double oracle_kl(const std::vector<double>& mu, const std::vector<double>& lv) {
  double s = 0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    s += -0.5 * (1 + lv[i] - mu[i] * mu[i] - std::exp(lv[i]));
  return s;
}

hand::HandMesh posed(std::uint64_t seed, double amp = 0.4) {
  geometry::Rng rng(seed);
  std::vector<double> theta(51);
  for (auto& x : theta) x = rng.uniform(-amp, amp);
  return hand::forward(hand::default_model(), hand::HandPose::from_theta(theta));
}

}  // namespace

TEST_CASE("bce: oracle agreement, perfect prediction, clamping") {
  const auto p = random_map(64, 1), g = random_map(64, 2, 0.0, 1.0);
  CHECK(bce_loss(p, g) == doctest::Approx(oracle_bce(p, g)).epsilon(1e-12));
  ContactMap ones{std::vector<double>(10, 1.0)};
  CHECK(bce_loss(ones, ones) == doctest::Approx(10 * -std::log(1 - 1e-7)));
  ContactMap zeros{std::vector<double>(10, 0.0)};
  CHECK(std::isfinite(bce_loss(zeros, ones)));  // clamp keeps log finite
}

TEST_CASE("dice: oracle agreement and identical maps give ~0") {
  const auto p = random_map(64, 3), g = random_map(64, 4);
  CHECK(dice_loss(p, g) == doctest::Approx(oracle_dice(p, g)).epsilon(1e-12));
  // identical binary maps -> ~0; disjoint supports -> 1
  ContactMap bin{{1, 0, 1, 1, 0, 0, 1, 0}};
  CHECK(dice_loss(bin, bin) < 1e-6);
  ContactMap inv{{0, 1, 0, 0, 1, 1, 0, 1}};
  CHECK(dice_loss(bin, inv) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("kl: standard normal gives 0, oracle agreement") {
  std::vector<double> mu(64, 0.0), lv(64, 0.0);
  CHECK(kl_loss(mu, lv) == doctest::Approx(0.0));
  geometry::Rng rng(5);
  for (auto& x : mu) x = rng.uniform(-1, 1);
  for (auto& x : lv) x = rng.uniform(-1, 1);
  CHECK(kl_loss(mu, lv) == doctest::Approx(oracle_kl(mu, lv)).epsilon(1e-12));
  CHECK(kl_loss(mu, lv) > 0);
}

TEST_CASE("contact loss combines the three gamma-weighted terms") {
  const auto p = random_map(32, 6), g = random_map(32, 7);
  std::vector<double> mu(8, 0.3), lv(8, -0.2);
  const double expect = config::kGamma0 * bce_loss(p, g) +
                        config::kGamma1 * dice_loss(p, g) +
                        config::kGamma2 * kl_loss(mu, lv);
  CHECK(contact_loss(p, g, mu, lv) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("vertex loss: zero on identical, analytic on uniform offset") {
  const auto a = posed(11);
  CHECK(vertex_loss(a, a) == doctest::Approx(0.0));
  auto b = a;
  for (auto& v : b.vertices) v.x += 0.01;
  // mean squared Euclidean distance = 1e-4 for a 1 cm uniform shift
  CHECK(vertex_loss(a, b) == doctest::Approx(1e-4).epsilon(1e-9));
  auto c = posed(12);
  c.vertices.pop_back();
  CHECK_THROWS(vertex_loss(a, c));
}

TEST_CASE("chamfer loss matches brute-force double loop") {
  const auto h = posed(13);
  geometry::ObjectCloud cloud;
  geometry::Rng rng(14);
  for (int i = 0; i < 50; ++i)
    cloud.points.push_back({rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                            rng.uniform(-0.1, 0.1)});
  double d_hc = 0, d_ch = 0;
  for (const auto& v : h.vertices) {
    double best = 1e300;
    for (const auto& p : cloud.points)
      best = std::min(best, (v - p).dot(v - p));
    d_hc += best;
  }
  d_hc /= double(h.vertices.size());
  for (const auto& p : cloud.points) {
    double best = 1e300;
    for (const auto& v : h.vertices)
      best = std::min(best, (v - p).dot(v - p));
    d_ch += best;
  }
  d_ch /= double(cloud.points.size());
  CHECK(chamfer_loss(h, cloud) == doctest::Approx(d_hc + d_ch).epsilon(1e-9));
}

TEST_CASE("penetration loss: sphere engulfing part of the hand") {
  const auto h = posed(15, 0.0);  // template pose
  auto obj = data::generate_object(data::ObjectKind::Sphere, {.size = 0.05}, 2);
  // center the sphere on the palm so some vertices are inside
  for (auto& v : obj.vertices) v += {0, 0.044, 0};
  const double pen = penetration_loss(h, obj);
  CHECK(pen > 0);

  // oracle: sum over vertices of max(0, -signed distance)
  const auto sd = geometry::signed_distance(obj, h.vertices);
  double expect = 0;
  for (double s : sd) expect += s < 0 ? -s : 0;
  CHECK(pen == doctest::Approx(expect).epsilon(1e-9));

  // far object: zero
  for (auto& v : obj.vertices) v += {1, 0, 0};
  CHECK(penetration_loss(h, obj) == doctest::Approx(0.0));
}

TEST_CASE("translation and geodesic pose losses") {
  hand::HandPose a, b;
  a.translation = {0.01, -0.02, 0.005};
  CHECK(translation_loss(a, b) == doctest::Approx(0.035).epsilon(1e-12));

  // the 1e-7 acos clamp bounds identical poses by 16 * sqrt(2e-7)
  CHECK(geodesic_pose_loss(a, a) <= 16 * std::sqrt(2e-7) + 1e-9);
  // single-joint known angle: sum = angle + 15 aligned-joint clamp residues
  b = a;
  b.joint_rotations[6] = 0.7;  // joint 2 x-axis
  CHECK(std::abs(geodesic_pose_loss(a, b) - 0.7) < 15 * std::sqrt(2e-7) + 1e-9);

  // quaternion oracle on random poses: angle = 2 acos(|q1 . q2|)
  geometry::Rng rng(16);
  hand::HandPose p1, p2;
  for (int i = 0; i < 48; ++i) {
    p1.joint_rotations[i] = rng.uniform(-1, 1);
    p2.joint_rotations[i] = rng.uniform(-1, 1);
  }
  auto quat = [](const Vec3& aa) {
    const double th = aa.norm();
    const Vec3 u = th > 0 ? aa / th : Vec3{1, 0, 0};
    return std::array<double, 4>{std::cos(th / 2), u.x * std::sin(th / 2),
                                 u.y * std::sin(th / 2), u.z * std::sin(th / 2)};
  };
  double expect = 0;
  for (int j = 0; j < 16; ++j) {
    const auto q1 = quat(p1.joint_axis_angle(j)), q2 = quat(p2.joint_axis_angle(j));
    double dot = 0;
    for (int k = 0; k < 4; ++k) dot += q1[k] * q2[k];
    expect += 2 * std::acos(std::min(std::abs(dot), 1.0));
  }
  CHECK(geodesic_pose_loss(p1, p2) == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("contact_from_mesh: sigmoid profile and range") {
  const auto h = posed(17, 0.0);
  geometry::ObjectCloud cloud;
  // one point touching a palm vertex, one 5mm away, one far away
  cloud.points.push_back(h.vertices[0]);
  cloud.points.push_back(h.vertices[0] + Vec3{0, 0, -0.005});
  cloud.points.push_back({1, 1, 1});
  const auto c = contact_from_mesh(h, cloud);
  CHECK(c.scores[0] == doctest::Approx(1.0 / (1.0 + std::exp(-5.0))).epsilon(1e-6));
  CHECK(c.scores[1] > 0.3);
  CHECK(c.scores[1] < 0.7);
  CHECK(c.scores[2] < 1e-6);
}

TEST_CASE("consistency loss is squared L2 to the mesh-derived map") {
  const auto h = posed(18, 0.2);
  geometry::ObjectCloud cloud;
  geometry::Rng rng(19);
  for (int i = 0; i < 40; ++i)
    cloud.points.push_back({rng.uniform(-0.05, 0.05), rng.uniform(0, 0.1),
                            rng.uniform(-0.05, 0.05)});
  const auto derived = contact_from_mesh(h, cloud);
  CHECK(consistency_loss(derived, h, cloud) == doctest::Approx(0.0).epsilon(1e-12));
  const auto other = random_map(40, 20);
  double expect = 0;  // squared L2 norm of the difference
  for (int i = 0; i < 40; ++i) {
    const double d = other.scores[i] - derived.scores[i];
    expect += d * d;
  }
  CHECK(consistency_loss(other, h, cloud) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("grasp loss applies the lambda weights") {
  GraspLossTerms terms{.v = 1, .cd = 2, .ptr = 3, .t = 4, .p = 5, .cst = 6};
  const double expect = config::kLambdaV * 1 + config::kLambdaCd * 2 +
                        config::kLambdaPtr * 3 + config::kLambdaT * 4 +
                        config::kLambdaP * 5 + config::kLambdaCst * 6;
  CHECK(grasp_loss(terms) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("ad builders match plain losses and pass FD") {
  const std::size_t n = 24;
  const auto g = random_map(n, 21, 0.0, 1.0);
  const Tensor pred = Tensor({int(n)}, random_map(n, 22).scores);

  {  // bce
    Tape t;
    const Var p = t.leaf(pred, true);
    const Var l = bce_loss_ad(t, p, g);
    CHECK(t.val(l).v[0] ==
          doctest::Approx(bce_loss(ContactMap{pred.v}, g)).epsilon(1e-12));
    CHECK(autodiff::finite_difference_check(
              [&](Tape& tt, Var x) { return bce_loss_ad(tt, x, g); }, pred) <
          1e-5);
  }
  {  // dice
    Tape t;
    const Var p = t.leaf(pred, true);
    CHECK(t.val(dice_loss_ad(t, p, g)).v[0] ==
          doctest::Approx(dice_loss(ContactMap{pred.v}, g)).epsilon(1e-12));
    CHECK(autodiff::finite_difference_check(
              [&](Tape& tt, Var x) { return dice_loss_ad(tt, x, g); }, pred) <
          1e-5);
  }
  {  // kl
    geometry::Rng rng(23);
    std::vector<double> mu(16), lv(16);
    for (auto& x : mu) x = rng.uniform(-1, 1);
    for (auto& x : lv) x = rng.uniform(-1, 1);
    Tape t;
    const Var vmu = t.leaf(Tensor({16}, mu), true);
    const Var vlv = t.leaf(Tensor({16}, lv), true);
    CHECK(t.val(kl_loss_ad(t, vmu, vlv)).v[0] ==
          doctest::Approx(kl_loss(mu, lv)).epsilon(1e-12));
    CHECK(autodiff::finite_difference_check(
              [&](Tape& tt, Var x) {
                return kl_loss_ad(tt, x, tt.constant(Tensor({16}, lv)));
              },
              Tensor({16}, mu)) < 1e-5);
    CHECK(autodiff::finite_difference_check(
              [&](Tape& tt, Var x) {
                return kl_loss_ad(tt, tt.constant(Tensor({16}, mu)), x);
              },
              Tensor({16}, lv)) < 1e-5);
  }
}

TEST_CASE("pose-dependent ad losses match plain versions through FK") {
  const auto& m = hand::default_model();
  geometry::Rng rng(24);
  std::vector<double> th1(51), th2(51);
  for (auto& x : th1) x = rng.uniform(-0.4, 0.4);
  for (auto& x : th2) x = rng.uniform(-0.4, 0.4);
  const auto pose1 = hand::HandPose::from_theta(th1);
  const auto pose2 = hand::HandPose::from_theta(th2);
  const auto mesh1 = hand::forward(m, pose1);
  const auto mesh2 = hand::forward(m, pose2);

  geometry::ObjectCloud cloud;
  for (int i = 0; i < 30; ++i)
    cloud.points.push_back({rng.uniform(-0.08, 0.08), rng.uniform(0, 0.12),
                            rng.uniform(-0.08, 0.08)});

  Tape t;
  const Var theta = t.leaf(Tensor({51}, pose1.theta()), true);
  const Var verts = hand::forward_ad(t, m, theta);

  CHECK(t.val(vertex_loss_ad(t, verts, mesh2.vertices)).v[0] ==
        doctest::Approx(vertex_loss(mesh1, mesh2)).epsilon(1e-9));
  CHECK(t.val(chamfer_loss_ad(t, verts, cloud)).v[0] ==
        doctest::Approx(chamfer_loss(mesh1, cloud)).epsilon(1e-9));
  CHECK(t.val(translation_loss_ad(t, theta, pose2)).v[0] ==
        doctest::Approx(translation_loss(pose1, pose2)).epsilon(1e-9));
  CHECK(t.val(geodesic_pose_loss_ad(t, theta, pose2)).v[0] ==
        doctest::Approx(geodesic_pose_loss(pose1, pose2)).epsilon(1e-6));
  const auto cm = contact_from_mesh(mesh1, cloud);
  const auto& ad_cm = t.val(contact_from_mesh_ad(t, verts, cloud));
  for (std::size_t i = 0; i < cloud.size(); ++i)
    CHECK(ad_cm.v[i] == doctest::Approx(cm.scores[i]).epsilon(1e-9));
  const auto cin = random_map(30, 25);
  CHECK(t.val(consistency_loss_ad(t, cin, verts, cloud)).v[0] ==
        doctest::Approx(consistency_loss(cin, mesh1, cloud)).epsilon(1e-9));

  // full-theta FD through FK + a representative loss bundle
  auto f = [&](Tape& tt, Var x) {
    const Var vv = hand::forward_ad(tt, m, x);
    const Var lv = vertex_loss_ad(tt, vv, mesh2.vertices);
    const Var lc = chamfer_loss_ad(tt, vv, cloud);
    const Var lt = translation_loss_ad(tt, x, pose2);
    const Var lg = geodesic_pose_loss_ad(tt, x, pose2);
    const Var lcst = consistency_loss_ad(tt, cin, vv, cloud);
    return grasp_loss_ad(tt, lv, lc, tt.constant(Tensor::scalar(0)), lt, lg,
                         lcst);
  };
  CHECK(autodiff::finite_difference_check(f, Tensor({51}, pose1.theta()), 1e-6) <
        1e-4);
}
