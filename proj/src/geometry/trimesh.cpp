#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "c2g/geometry.hpp"

namespace c2g::geometry {

Mat3 rodrigues(const Vec3& w) {
  const double th = w.norm();
  Mat3 r;
  if (th < 1e-12) {
    // First-order term keeps the map exact enough near identity.
    r.m = {1, -w.z, w.y, w.z, 1, -w.x, -w.y, w.x, 1};
    return r;
  }
  const Vec3 a = w / th;
  const double c = std::cos(th), s = std::sin(th), t = 1 - c;
  r.m = {c + a.x * a.x * t,       a.x * a.y * t - a.z * s, a.x * a.z * t + a.y * s,
         a.y * a.x * t + a.z * s, c + a.y * a.y * t,       a.y * a.z * t - a.x * s,
         a.z * a.x * t - a.y * s, a.z * a.y * t + a.x * s, c + a.z * a.z * t};
  return r;
}

Vec3 log_rotation(const Mat3& r) {
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double th = std::acos(c);
  if (th < 1e-9) return {0, 0, 0};
  if (th > M_PI - 1e-6) {
    // Near-antipodal: extract the axis from the symmetric part.
    const double xx = std::sqrt(std::max(0.0, (r.m[0] + 1) / 2));
    const double yy = std::sqrt(std::max(0.0, (r.m[4] + 1) / 2));
    const double zz = std::sqrt(std::max(0.0, (r.m[8] + 1) / 2));
    Vec3 axis{xx, r.m[1] + r.m[3] >= 0 ? yy : -yy,
              r.m[2] + r.m[6] >= 0 ? zz : -zz};
    return axis.normalized() * th;
  }
  const double s = 0.5 / std::sin(th);
  return Vec3{(r.m[7] - r.m[5]) * s, (r.m[2] - r.m[6]) * s,
              (r.m[3] - r.m[1]) * s} * th;
}

void Aabb::expand(const Vec3& p) {
  lo.x = std::min(lo.x, p.x); lo.y = std::min(lo.y, p.y); lo.z = std::min(lo.z, p.z);
  hi.x = std::max(hi.x, p.x); hi.y = std::max(hi.y, p.y); hi.z = std::max(hi.z, p.z);
}

void Aabb::pad(double d) {
  lo.x -= d; lo.y -= d; lo.z -= d;
  hi.x += d; hi.y += d; hi.z += d;
}

bool Aabb::contains(const Vec3& p) const {
  return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y &&
         p.z >= lo.z && p.z <= hi.z;
}

Aabb Aabb::merged(const Aabb& o) const {
  Aabb r = *this;
  r.expand(o.lo);
  r.expand(o.hi);
  return r;
}

void TriMesh::validate() const {
  for (const auto& f : faces)
    for (auto idx : f)
      if (idx >= vertices.size())
        throw std::runtime_error("TriMesh: face index out of range");
}

Aabb TriMesh::bounds() const {
  Aabb b;
  for (const auto& v : vertices) b.expand(v);
  return b;
}

double TriMesh::area() const {
  double a = 0;
  for (const auto& f : faces) {
    const Vec3 e1 = vertices[f[1]] - vertices[f[0]];
    const Vec3 e2 = vertices[f[2]] - vertices[f[0]];
    a += 0.5 * e1.cross(e2).norm();
  }
  return a;
}

Vec3 TriMesh::centroid_of_face(std::size_t f) const {
  const auto& t = faces[f];
  return (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
}

std::size_t VoxelGrid::count_occupied() const {
  std::size_t c = 0;
  for (auto o : occupancy) c += o != 0;
  return c;
}

double VoxelGrid::volume_m3() const {
  return double(count_occupied()) * voxel_size * voxel_size * voxel_size;
}

Vec3 VoxelGrid::center(int ix, int iy, int iz) const {
  return {origin.x + (ix + 0.5) * voxel_size, origin.y + (iy + 0.5) * voxel_size,
          origin.z + (iz + 0.5) * voxel_size};
}

std::uint64_t Rng::next() {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double Rng::uniform() { return double(next() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  // Box-Muller; one value per call keeps replay simple.
  double u1 = uniform(), u2 = uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace c2g::geometry
