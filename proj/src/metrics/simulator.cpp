#include <cmath>
#include <stdexcept>

#include "c2g/metrics.hpp"

namespace c2g::metrics {

using geometry::Aabb;
using geometry::Mat3;
using geometry::TriMesh;
using geometry::Vec3;

namespace {

// 3x3 symmetric solve via cofactor inverse; the inertia tensor of any
// non-degenerate voxelization is well-conditioned at this scale.
Vec3 solve3(const Mat3& a, const Vec3& b) {
  const auto& m = a.m;
  const double det =
      m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
      m[2] * (m[3] * m[7] - m[4] * m[6]);
  if (std::abs(det) < 1e-18)
    throw std::runtime_error("simulation diverged");
  Mat3 inv;
  inv.m = {(m[4] * m[8] - m[5] * m[7]) / det, (m[2] * m[7] - m[1] * m[8]) / det,
           (m[1] * m[5] - m[2] * m[4]) / det, (m[5] * m[6] - m[3] * m[8]) / det,
           (m[0] * m[8] - m[2] * m[6]) / det, (m[2] * m[3] - m[0] * m[5]) / det,
           (m[3] * m[7] - m[4] * m[6]) / det, (m[1] * m[6] - m[0] * m[7]) / det,
           (m[0] * m[4] - m[1] * m[3]) / det};
  return inv.apply(b);
}

struct Body {
  double mass = 0;
  Vec3 com;     // rest-frame center of mass
  Mat3 inertia; // body-frame inertia about the COM
};

Body body_from_mesh(const TriMesh& object) {
  Aabb box = object.bounds();
  box.pad(2 * config::kVoxelSize);
  const auto grid = geometry::voxelize(object, config::kVoxelSize, box);
  const double cell_mass =
      config::kSimDensity * std::pow(config::kVoxelSize, 3);
  Body b;
  Vec3 acc;
  std::vector<Vec3> cells;
  for (int iz = 0; iz < grid.dims[2]; ++iz)
    for (int iy = 0; iy < grid.dims[1]; ++iy)
      for (int ix = 0; ix < grid.dims[0]; ++ix) {
        const std::size_t idx =
            std::size_t(iz) * grid.dims[0] * grid.dims[1] +
            std::size_t(iy) * grid.dims[0] + ix;
        if (!grid.occupancy[idx]) continue;
        const Vec3 c = grid.center(ix, iy, iz);
        cells.push_back(c);
        acc += c;
      }
  if (cells.empty()) throw std::runtime_error("simulate: object has no volume");
  b.mass = cell_mass * double(cells.size());
  b.com = acc / double(cells.size());
  Mat3 inertia;
  inertia.m = {0, 0, 0, 0, 0, 0, 0, 0, 0};
  for (const auto& c : cells) {
    const Vec3 r = c - b.com;
    const double r2 = r.dot(r);
    inertia.m[0] += cell_mass * (r2 - r.x * r.x);
    inertia.m[1] += cell_mass * (-r.x * r.y);
    inertia.m[2] += cell_mass * (-r.x * r.z);
    inertia.m[4] += cell_mass * (r2 - r.y * r.y);
    inertia.m[5] += cell_mass * (-r.y * r.z);
    inertia.m[8] += cell_mass * (r2 - r.z * r.z);
  }
  inertia.m[3] = inertia.m[1];
  inertia.m[6] = inertia.m[2];
  inertia.m[7] = inertia.m[5];
  b.inertia = inertia;
  return b;
}

}  // namespace

double simulate_displacement(const hand::HandMesh& hand_mesh,
                             const TriMesh& object, double duration,
                             double gravity) {
  const Body body = body_from_mesh(object);
  const TriMesh hand_tri = hand_mesh.as_mesh();
  Aabb hand_box = hand_tri.bounds();
  hand_box.pad(0.01);  // contact candidates only near the hand

  // Rest-frame vertex offsets from the COM.
  std::vector<Vec3> rest;
  rest.reserve(object.vertices.size());
  for (const auto& v : object.vertices) rest.push_back(v - body.com);

  Vec3 x = body.com, vel, omega;
  Mat3 rot = Mat3::identity();
  const double dt = config::kSimDt;
  const int steps = int(std::round(duration / dt));

  for (int s = 0; s < steps; ++s) {
    // Symplectic Euler: gravity first, then contact impulses against the
    // updated velocity, then the position/orientation step.
    vel.z += gravity * dt;
    const Mat3 i_world = rot * body.inertia * rot.transposed();

    // Collect penalty contacts at object vertices near the hand.
    std::vector<Vec3> candidates;
    for (std::size_t i = 0; i < rest.size(); ++i) {
      const Vec3 p = x + rot.apply(rest[i]);
      if (hand_box.contains(p)) candidates.push_back(p);
    }
    if (!candidates.empty()) {
      std::vector<double> sd;
      std::vector<Vec3> closest;
      geometry::signed_distance_with_closest(hand_tri, candidates, &sd,
                                             &closest);
      // Sequential impulses: each contact sees the velocity left by its
      // predecessors, which keeps the damped springs stable at any contact
      // count where naive force accumulation would explode. A few passes
      // tighten convergence of the coupled contacts.
      for (int pass = 0; pass < 4; ++pass)
      for (std::size_t k = 0; k < candidates.size(); ++k) {
        if (sd[k] >= 0) continue;
        const double depth = -sd[k];
        const Vec3 p = candidates[k];
        Vec3 n = closest[k] - p;  // escape direction out of the hand
        const double nn = n.norm();
        if (nn < 1e-12) continue;
        n = n / nn;
        const Vec3 r = p - x;
        const Vec3 v_point = vel + omega.cross(r);
        const double vn = v_point.dot(n);
        const Vec3 rxn = r.cross(n);
        const double m_n =
            1.0 / (1.0 / body.mass + rxn.dot(solve3(i_world, rxn)));
        // Damped penalty spring as an impulse, bounded by zero-restitution
        // resolution (cancel the approach speed, bias out 20% of the depth
        // per step) so a stiff spring cannot inject energy.
        const double j_spring =
            (config::kSimSpringK * depth - config::kSimDampingC * vn) * dt;
        const double j_cap = m_n * (std::max(0.0, -vn) + 0.1 * depth / dt);
        double j_n = std::max(0.0, std::min(j_spring, j_cap));
        // Viscous damping of the tangential contact velocity, likewise
        // bounded by the impulse that stops the point (stick).
        Vec3 j = n * j_n;
        const Vec3 v_t = v_point - n * vn;
        const double vt = v_t.norm();
        if (vt > 1e-12) {
          const Vec3 t = v_t / vt;
          const Vec3 rxt = r.cross(t);
          const double m_t =
              1.0 / (1.0 / body.mass + rxt.dot(solve3(i_world, rxt)));
          j = j - t * (std::min(config::kSimDampingC * dt, m_t) * vt);
        }
        vel += j / body.mass;
        omega += solve3(i_world, r.cross(j));
      }
    }

    x += vel * dt;
    const double w = omega.norm();
    if (w > 0) rot = geometry::rodrigues(omega * dt) * rot;

    if (!std::isfinite(x.x) || !std::isfinite(x.y) || !std::isfinite(x.z) ||
        !std::isfinite(omega.x))
      throw std::runtime_error("simulation diverged");
  }

  return (x - body.com).norm() * 100.0;
}

}  // namespace c2g::metrics
