#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

// Mesh and point-cloud kernels shared by the losses, the refiner and the
// metric suite. All lengths are meters; the metrics layer converts to cm.
namespace c2g::geometry {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    const double n = norm();
    return n > 0 ? *this / n : Vec3{0, 0, 0};
  }
};

struct Mat3 {
  // Row-major.
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Mat3 identity() { return {}; }
  Vec3 apply(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double a = 0;
        for (int k = 0; k < 3; ++k) a += m[3 * i + k] * o.m[3 * k + j];
        r.m[3 * i + j] = a;
      }
    return r;
  }
  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[3 * i + j] = m[3 * j + i];
    return r;
  }
  double trace() const { return m[0] + m[4] + m[8]; }
};

Mat3 rodrigues(const Vec3& axis_angle);
Vec3 log_rotation(const Mat3& r);  // inverse of rodrigues, angle in [0, pi]

struct Aabb {
  Vec3 lo{1e30, 1e30, 1e30};
  Vec3 hi{-1e30, -1e30, -1e30};

  void expand(const Vec3& p);
  void pad(double d);
  bool contains(const Vec3& p) const;
  Aabb merged(const Aabb& o) const;
};

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;
  bool watertight = false;

  void validate() const;  // throws on out-of-range face indices
  Aabb bounds() const;
  double area() const;
  Vec3 centroid_of_face(std::size_t f) const;
};

struct ObjectCloud {
  std::vector<Vec3> points;
  std::optional<std::vector<double>> contact;  // scores in [0,1]

  std::size_t size() const { return points.size(); }
};

struct VoxelGrid {
  Vec3 origin;
  double voxel_size = 0;
  std::array<int, 3> dims{0, 0, 0};
  std::vector<std::uint8_t> occupancy;  // dims[0]*dims[1]*dims[2], x fastest

  std::size_t count_occupied() const;
  double volume_m3() const;
  Vec3 center(int ix, int iy, int iz) const;
};

// Area-weighted uniform surface sampling, deterministic for a fixed seed.
ObjectCloud sample_surface_points(const TriMesh& mesh, std::size_t n,
                                  std::uint64_t seed);

// Exact min distance to any triangle, plus the closest surface point.
void closest_surface_points(const TriMesh& mesh, const std::vector<Vec3>& pts,
                            std::vector<double>* dist,
                            std::vector<Vec3>* closest);
std::vector<double> unsigned_distance(const TriMesh& mesh,
                                      const std::vector<Vec3>& pts);

// Generalized winding number; >= 0.5 counts as inside.
double winding_number(const TriMesh& mesh, const Vec3& p);

// Negative inside, positive outside. Requires watertight = true.
std::vector<double> signed_distance(const TriMesh& mesh,
                                    const std::vector<Vec3>& pts);
void signed_distance_with_closest(const TriMesh& mesh,
                                  const std::vector<Vec3>& pts,
                                  std::vector<double>* sd,
                                  std::vector<Vec3>* closest);

// Occupancy by voxel-center containment; scanline with signed crossings.
VoxelGrid voxelize(const TriMesh& mesh, double voxel_size, const Aabb& bounds);

// Count of voxels occupied in both grids, in cm^3. Grids must match.
double intersection_volume_cm3(const VoxelGrid& a, const VoxelGrid& b);

// --- file formats ---
TriMesh read_obj(const std::string& path);
void write_obj(const TriMesh& mesh, const std::string& path);

// Binary little-endian PLY with per-vertex color and a float "contact"
// score channel (score 0 -> blue, 1 -> red).
void write_ply(const std::vector<Vec3>& pts, const std::vector<double>& scores,
               const std::string& path);
void write_ply(const TriMesh& mesh, const std::vector<double>& scores,
               const std::string& path);
std::pair<std::vector<Vec3>, std::vector<double>> read_ply_points(
    const std::string& path);

// Column binary cloud format: magic "C2GPC1", u32 N, N x 4 float32.
void write_cloud(const ObjectCloud& cloud, const std::string& path);
ObjectCloud read_cloud(const std::string& path);

// splitmix64; the counter-based RNG used for all geometry sampling.
struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next();
  double uniform();                      // [0,1)
  double uniform(double lo, double hi);  // [lo,hi)
  double normal();
};

}  // namespace c2g::geometry
