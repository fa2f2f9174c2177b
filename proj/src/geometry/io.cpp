#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "c2g/geometry.hpp"

namespace c2g::geometry {
namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::runtime_error(msg);
}

template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

TriMesh read_obj(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open " + path);
  TriMesh mesh;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Vec3 v;
      ls >> v.x >> v.y >> v.z;
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::array<std::uint32_t, 3> f{};
      for (int i = 0; i < 3; ++i) {
        std::string tok;
        ls >> tok;
        // "idx", "idx/..", "idx//.."
        f[i] = std::uint32_t(std::stoul(tok.substr(0, tok.find('/')))) - 1;
      }
      mesh.faces.push_back(f);
    }
  }
  mesh.validate();
  return mesh;
}

void write_obj(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot open " + path);
  char buf[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
    out << buf;
  }
  for (const auto& f : mesh.faces)
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

namespace {

void write_ply_impl(const std::vector<Vec3>& pts,
                    const std::vector<double>& scores,
                    const std::vector<std::array<std::uint32_t, 3>>* faces,
                    const std::string& path) {
  require(scores.empty() || scores.size() == pts.size(),
          "write_ply: score count mismatch");
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open " + path);
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << pts.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "property float contact\n";
  if (faces) {
    out << "element face " << faces->size() << "\n";
    out << "property list uchar uint vertex_indices\n";
  }
  out << "end_header\n";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double s = scores.empty() ? 0.0 : std::clamp(scores[i], 0.0, 1.0);
    write_raw(out, float(pts[i].x));
    write_raw(out, float(pts[i].y));
    write_raw(out, float(pts[i].z));
    write_raw(out, std::uint8_t(std::lround(255.0 * s)));        // red
    write_raw(out, std::uint8_t(0));                             // green
    write_raw(out, std::uint8_t(std::lround(255.0 * (1 - s))));  // blue
    write_raw(out, float(scores.empty() ? 0.0 : scores[i]));
  }
  if (faces)
    for (const auto& f : *faces) {
      write_raw(out, std::uint8_t(3));
      for (auto idx : f) write_raw(out, std::uint32_t(idx));
    }
}

}  // namespace

void write_ply(const std::vector<Vec3>& pts, const std::vector<double>& scores,
               const std::string& path) {
  write_ply_impl(pts, scores, nullptr, path);
}

void write_ply(const TriMesh& mesh, const std::vector<double>& scores,
               const std::string& path) {
  write_ply_impl(mesh.vertices, scores, &mesh.faces, path);
}

std::pair<std::vector<Vec3>, std::vector<double>> read_ply_points(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open " + path);
  std::string line;
  std::size_t nverts = 0;
  bool header_done = false;
  while (!header_done && std::getline(in, line)) {
    if (line.rfind("element vertex", 0) == 0)
      nverts = std::stoul(line.substr(15));
    else if (line == "end_header")
      header_done = true;
  }
  require(header_done, "bad PLY header in " + path);
  std::vector<Vec3> pts(nverts);
  std::vector<double> scores(nverts);
  for (std::size_t i = 0; i < nverts; ++i) {
    pts[i].x = read_raw<float>(in);
    pts[i].y = read_raw<float>(in);
    pts[i].z = read_raw<float>(in);
    read_raw<std::uint8_t>(in);
    read_raw<std::uint8_t>(in);
    read_raw<std::uint8_t>(in);
    scores[i] = read_raw<float>(in);
  }
  require(in.good(), "truncated PLY " + path);
  return {pts, scores};
}

void write_cloud(const ObjectCloud& cloud, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open " + path);
  out.write("C2GPC1", 6);
  write_raw(out, std::uint32_t(cloud.points.size()));
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    write_raw(out, float(cloud.points[i].x));
    write_raw(out, float(cloud.points[i].y));
    write_raw(out, float(cloud.points[i].z));
    write_raw(out, float(cloud.contact ? (*cloud.contact)[i] : 0.0));
  }
}

ObjectCloud read_cloud(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open " + path);
  char magic[6];
  in.read(magic, 6);
  require(std::memcmp(magic, "C2GPC1", 6) == 0, "bad cloud magic in " + path);
  const auto n = read_raw<std::uint32_t>(in);
  ObjectCloud cloud;
  cloud.points.resize(n);
  cloud.contact.emplace(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    cloud.points[i].x = read_raw<float>(in);
    cloud.points[i].y = read_raw<float>(in);
    cloud.points[i].z = read_raw<float>(in);
    (*cloud.contact)[i] = read_raw<float>(in);
  }
  require(in.good(), "truncated cloud " + path);
  return cloud;
}

}  // namespace c2g::geometry
