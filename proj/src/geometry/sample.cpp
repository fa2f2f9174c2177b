#include <algorithm>
#include <stdexcept>

#include "c2g/geometry.hpp"

namespace c2g::geometry {

ObjectCloud sample_surface_points(const TriMesh& mesh, std::size_t n,
                                  std::uint64_t seed) {
  if (mesh.faces.empty()) throw std::runtime_error("degenerate mesh");
  if (n < 1) throw std::runtime_error("sample_surface_points: n < 1");
  mesh.validate();

  // Cumulative triangle areas for area-weighted face selection.
  std::vector<double> cum(mesh.faces.size());
  double total = 0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& t = mesh.faces[f];
    const Vec3 e1 = mesh.vertices[t[1]] - mesh.vertices[t[0]];
    const Vec3 e2 = mesh.vertices[t[2]] - mesh.vertices[t[0]];
    total += 0.5 * e1.cross(e2).norm();
    cum[f] = total;
  }
  if (total <= 0) throw std::runtime_error("degenerate mesh");

  ObjectCloud cloud;
  cloud.points.reserve(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = rng.uniform() * total;
    const std::size_t f =
        std::lower_bound(cum.begin(), cum.end(), r) - cum.begin();
    const auto& t = mesh.faces[std::min(f, mesh.faces.size() - 1)];
    double u = rng.uniform(), v = rng.uniform();
    if (u + v > 1) {
      u = 1 - u;
      v = 1 - v;
    }
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    cloud.points.push_back(a + (b - a) * u + (c - a) * v);
  }
  return cloud;
}

}  // namespace c2g::geometry
