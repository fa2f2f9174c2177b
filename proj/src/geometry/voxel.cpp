#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "c2g/geometry.hpp"

namespace c2g::geometry {
namespace {

struct Crossing {
  double x;
  int sign;  // +1 entering the solid, -1 leaving (ray along +x)
};

}  // namespace

VoxelGrid voxelize(const TriMesh& mesh, double voxel_size, const Aabb& bounds) {
  if (voxel_size <= 0) throw std::runtime_error("voxelize: voxel_size <= 0");
  if (!mesh.watertight) throw std::runtime_error("voxelize: mesh not watertight");
  mesh.validate();

  VoxelGrid g;
  g.origin = bounds.lo;
  g.voxel_size = voxel_size;
  for (int a = 0; a < 3; ++a) {
    const double ext = (a == 0 ? bounds.hi.x - bounds.lo.x
                       : a == 1 ? bounds.hi.y - bounds.lo.y
                                : bounds.hi.z - bounds.lo.z);
    g.dims[a] = std::max(1, int(std::ceil(ext / voxel_size - 1e-9)));
  }
  g.occupancy.assign(std::size_t(g.dims[0]) * g.dims[1] * g.dims[2], 0);

  // Tiny fixed jitter keeps scan rays off triangle edges.
  const double jy = 1.2345e-9, jz = 2.6789e-9;

  std::vector<Crossing> xs;
  for (int iz = 0; iz < g.dims[2]; ++iz) {
    for (int iy = 0; iy < g.dims[1]; ++iy) {
      const double cy = g.origin.y + (iy + 0.5) * voxel_size + jy;
      const double cz = g.origin.z + (iz + 0.5) * voxel_size + jz;
      xs.clear();
      for (const auto& f : mesh.faces) {
        const Vec3& a = mesh.vertices[f[0]];
        const Vec3& b = mesh.vertices[f[1]];
        const Vec3& c = mesh.vertices[f[2]];
        // 2D edge functions in the (y,z) plane.
        const double e0 = (b.y - a.y) * (cz - a.z) - (b.z - a.z) * (cy - a.y);
        const double e1 = (c.y - b.y) * (cz - b.z) - (c.z - b.z) * (cy - b.y);
        const double e2 = (a.y - c.y) * (cz - c.z) - (a.z - c.z) * (cy - c.y);
        const bool pos = e0 > 0 && e1 > 0 && e2 > 0;
        const bool neg = e0 < 0 && e1 < 0 && e2 < 0;
        if (!pos && !neg) continue;
        const Vec3 n = (b - a).cross(c - a);
        if (std::abs(n.x) < 1e-18) continue;
        // Plane: n . (p - a) = 0, solve for x at (cy, cz).
        const double x =
            a.x - (n.y * (cy - a.y) + n.z * (cz - a.z)) / n.x;
        xs.push_back({x, n.x < 0 ? +1 : -1});
      }
      if (xs.empty()) continue;
      std::sort(xs.begin(), xs.end(),
                [](const Crossing& l, const Crossing& r) { return l.x < r.x; });
      std::size_t k = 0;
      int depth = 0;
      for (int ix = 0; ix < g.dims[0]; ++ix) {
        const double cx = g.origin.x + (ix + 0.5) * voxel_size;
        while (k < xs.size() && xs[k].x < cx) depth += xs[k++].sign;
        if (depth > 0)
          g.occupancy[(std::size_t(iz) * g.dims[1] + iy) * g.dims[0] + ix] = 1;
      }
    }
  }
  return g;
}

double intersection_volume_cm3(const VoxelGrid& a, const VoxelGrid& b) {
  const auto near = [](double x, double y) { return std::abs(x - y) < 1e-12; };
  if (a.dims != b.dims || !near(a.voxel_size, b.voxel_size) ||
      !near(a.origin.x, b.origin.x) || !near(a.origin.y, b.origin.y) ||
      !near(a.origin.z, b.origin.z))
    throw std::runtime_error("intersection_volume: grid mismatch");
  std::size_t c = 0;
  for (std::size_t i = 0; i < a.occupancy.size(); ++i)
    c += (a.occupancy[i] & b.occupancy[i]) != 0;
  const double vs_cm = a.voxel_size * 100.0;
  return double(c) * vs_cm * vs_cm * vs_cm;
}

}  // namespace c2g::geometry
