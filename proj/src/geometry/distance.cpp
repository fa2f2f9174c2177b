#include <cmath>
#include <stdexcept>

#include "c2g/geometry.hpp"

namespace c2g::geometry {
namespace {

// Closest point on triangle abc to p (Ericson, Real-Time Collision Detection).
Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                         const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + ab * (d1 / (d1 - d3));

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + ac * (d2 / (d2 - d6));

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));

  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

}  // namespace

void closest_surface_points(const TriMesh& mesh, const std::vector<Vec3>& pts,
                            std::vector<double>* dist,
                            std::vector<Vec3>* closest) {
  if (mesh.faces.empty()) throw std::runtime_error("degenerate mesh");
  if (dist) dist->resize(pts.size());
  if (closest) closest->resize(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double best = 1e300;
    Vec3 bc;
    for (const auto& f : mesh.faces) {
      const Vec3 c = closest_on_triangle(pts[i], mesh.vertices[f[0]],
                                         mesh.vertices[f[1]], mesh.vertices[f[2]]);
      const double d = (pts[i] - c).dot(pts[i] - c);
      if (d < best) {
        best = d;
        bc = c;
      }
    }
    if (dist) (*dist)[i] = std::sqrt(best);
    if (closest) (*closest)[i] = bc;
  }
}

std::vector<double> unsigned_distance(const TriMesh& mesh,
                                      const std::vector<Vec3>& pts) {
  std::vector<double> d;
  closest_surface_points(mesh, pts, &d, nullptr);
  return d;
}

double winding_number(const TriMesh& mesh, const Vec3& p) {
  // van Oosterom & Strackee solid angle per triangle, summed / 4pi.
  double total = 0;
  for (const auto& f : mesh.faces) {
    const Vec3 a = mesh.vertices[f[0]] - p;
    const Vec3 b = mesh.vertices[f[1]] - p;
    const Vec3 c = mesh.vertices[f[2]] - p;
    const double la = a.norm(), lb = b.norm(), lc = c.norm();
    const double num = a.dot(b.cross(c));
    const double den =
        la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    total += 2.0 * std::atan2(num, den);
  }
  return total / (4.0 * M_PI);
}

void signed_distance_with_closest(const TriMesh& mesh,
                                  const std::vector<Vec3>& pts,
                                  std::vector<double>* sd,
                                  std::vector<Vec3>* closest) {
  if (!mesh.watertight) throw std::runtime_error("sign undefined");
  closest_surface_points(mesh, pts, sd, closest);
  // Points outside the bounding box cannot be inside; skip the O(faces)
  // winding evaluation for them.
  const Aabb box = mesh.bounds();
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (box.contains(pts[i]) && winding_number(mesh, pts[i]) >= 0.5)
      (*sd)[i] = -(*sd)[i];
}

std::vector<double> signed_distance(const TriMesh& mesh,
                                    const std::vector<Vec3>& pts) {
  std::vector<double> sd;
  signed_distance_with_closest(mesh, pts, &sd, nullptr);
  return sd;
}

}  // namespace c2g::geometry
