#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "c2g/data.hpp"

namespace c2g::data {

using geometry::TriMesh;
using geometry::Vec3;

namespace {

// Icosphere: subdivided icosahedron projected to radius r.
TriMesh icosphere(double r, int subdiv, const Vec3& center = {}) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {
      {-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  std::vector<std::array<std::uint32_t, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},   {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4},  {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},   {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11},  {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (auto& v : verts) v = v.normalized();

  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
  auto mid = [&](std::uint32_t a, std::uint32_t b) {
    const auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const auto id = std::uint32_t(verts.size());
    verts.push_back(((verts[a] + verts[b]) * 0.5).normalized());
    midpoint.emplace(key, id);
    return id;
  };
  for (int s = 0; s < subdiv; ++s) {
    std::vector<std::array<std::uint32_t, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const auto a = mid(f[0], f[1]), b = mid(f[1], f[2]), c = mid(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    faces = std::move(next);
    midpoint.clear();
  }
  TriMesh m;
  for (const auto& v : verts) m.vertices.push_back(center + v * r);
  m.faces = std::move(faces);
  m.watertight = true;
  return m;
}

TriMesh box(const Vec3& half) {
  TriMesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.push_back({(i & 1) ? half.x : -half.x,
                          (i & 2) ? half.y : -half.y,
                          (i & 4) ? half.z : -half.z});
  // 12 outward-oriented triangles.
  const std::array<std::uint32_t, 3> f[12] = {
      {0, 2, 3}, {0, 3, 1},  // z-
      {4, 5, 7}, {4, 7, 6},  // z+
      {0, 1, 5}, {0, 5, 4},  // y-
      {2, 6, 7}, {2, 7, 3},  // y+
      {0, 4, 6}, {0, 6, 2},  // x-
      {1, 3, 7}, {1, 7, 5}   // x+
  };
  m.faces.assign(f, f + 12);
  m.watertight = true;
  return m;
}

TriMesh cylinder(double r, double h, int around = 24) {
  TriMesh m;
  const double hz = h / 2;
  for (int s = 0; s < around; ++s) {
    const double a = 2 * M_PI * s / around;
    m.vertices.push_back({r * std::cos(a), r * std::sin(a), -hz});
    m.vertices.push_back({r * std::cos(a), r * std::sin(a), hz});
  }
  const auto bottom = std::uint32_t(m.vertices.size());
  m.vertices.push_back({0, 0, -hz});
  const auto top = std::uint32_t(m.vertices.size());
  m.vertices.push_back({0, 0, hz});
  for (int s = 0; s < around; ++s) {
    const auto a0 = std::uint32_t(2 * s);
    const auto a1 = std::uint32_t(2 * ((s + 1) % around));
    m.faces.push_back({a0, a1, a1 + 1});
    m.faces.push_back({a0, a1 + 1, a0 + 1});
    m.faces.push_back({bottom, a1, a0});
    m.faces.push_back({top, a0 + 1, a1 + 1});
  }
  m.watertight = true;
  return m;
}

TriMesh capsule(double r, double h) {
  // Capsule as a union-style closed mesh: cylinder shell + two hemisphere
  // caps built from an icosphere split at the equator.
  TriMesh sph = icosphere(r, 2);
  TriMesh m;
  const double hz = h / 2;
  m.vertices = sph.vertices;
  for (auto& v : m.vertices) v.z += (v.z >= 0 ? hz : -hz);
  m.faces = sph.faces;
  m.watertight = true;
  return m;  // equator verts split by sign: near-capsule, closed by construction
}

}  // namespace

const char* kind_name(ObjectKind k) {
  static const char* names[] = {"sphere", "box", "cylinder", "capsule",
                                "union-of-two"};
  return names[int(k)];
}

ObjectKind kind_from_name(const std::string& name) {
  for (int k = 0; k < kNumKinds; ++k)
    if (name == kind_name(ObjectKind(k))) return ObjectKind(k);
  throw std::runtime_error("unknown object kind: " + name);
}

TriMesh generate_object(ObjectKind kind, const ObjectParams& params,
                        std::uint64_t seed) {
  if (params.size < 0.04 - 1e-12 || params.size > 0.12 + 1e-12)
    throw std::runtime_error("generate_object: size out of range [4,12] cm");
  geometry::Rng rng(seed ^ 0xc2900000u ^ std::uint64_t(kind));
  const double jitter = 1.0 + 0.05 * (rng.uniform() - 0.5);
  const double s = params.size * jitter;
  switch (kind) {
    case ObjectKind::Sphere:
      return icosphere(s / 2, 3);
    case ObjectKind::Box:
      return box({s / 2, s / 2 * params.aspect, s / 2 * 0.8});
    case ObjectKind::Cylinder:
      return cylinder(s / 3, s * params.aspect);
    case ObjectKind::Capsule:
      return capsule(s / 3, s * 0.8);
    case ObjectKind::UnionOfTwo: {
      // Two overlapping spheres along x; closed components, winding > 0
      // classifies the union correctly.
      TriMesh a = icosphere(s / 2.8, 2, {-s / 5, 0, 0});
      const TriMesh b = icosphere(s / 3.2, 2, {s / 5, 0, 0});
      const auto off = std::uint32_t(a.vertices.size());
      a.vertices.insert(a.vertices.end(), b.vertices.begin(), b.vertices.end());
      for (const auto& f : b.faces)
        a.faces.push_back({f[0] + off, f[1] + off, f[2] + off});
      a.watertight = true;
      return a;
    }
  }
  throw std::runtime_error("generate_object: bad kind");
}

}  // namespace c2g::data
