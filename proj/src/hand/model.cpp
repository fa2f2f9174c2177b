#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "c2g/hand.hpp"

namespace c2g::hand {

using geometry::TriMesh;
using geometry::Vec3;

namespace {

// Grid-subdivided axis-aligned box, welded into a watertight mesh.
void append_box(TriMesh& mesh, std::vector<int>& bones, std::vector<Part>& parts,
                const Vec3& center, const Vec3& half, int n, int bone,
                Part part) {
  std::map<std::array<long long, 3>, std::uint32_t> weld;
  auto key = [](const Vec3& p) {
    return std::array<long long, 3>{llround(p.x * 1e9), llround(p.y * 1e9),
                                    llround(p.z * 1e9)};
  };
  auto vid = [&](const Vec3& p) {
    auto it = weld.find(key(p));
    if (it != weld.end()) return it->second;
    const auto id = std::uint32_t(mesh.vertices.size());
    mesh.vertices.push_back(p);
    bones.push_back(bone);
    parts.push_back(part);
    weld.emplace(key(p), id);
    return id;
  };
  // axis = face normal direction, sign = +-1.
  for (int axis = 0; axis < 3; ++axis) {
    for (int sign = -1; sign <= 1; sign += 2) {
      const int u = (axis + 1) % 3, v = (axis + 2) % 3;
      auto corner = [&](int i, int j) {
        double c[3];
        const double h[3] = {half.x, half.y, half.z};
        c[axis] = sign * h[axis];
        c[u] = -h[u] + 2.0 * h[u] * i / n;
        c[v] = -h[v] + 2.0 * h[v] * j / n;
        return Vec3{center.x + c[0], center.y + c[1], center.z + c[2]};
      };
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const auto a = vid(corner(i, j));
          const auto b = vid(corner(i + 1, j));
          const auto c = vid(corner(i + 1, j + 1));
          const auto d = vid(corner(i, j + 1));
          if (sign > 0) {
            mesh.faces.push_back({a, b, c});
            mesh.faces.push_back({a, c, d});
          } else {
            mesh.faces.push_back({a, c, b});
            mesh.faces.push_back({a, d, c});
          }
        }
    }
  }
}

// Capsule from p0 to p1 with radius r; closed, outward-oriented.
void append_capsule(TriMesh& mesh, std::vector<int>& bones,
                    std::vector<Part>& parts, const Vec3& p0, const Vec3& p1,
                    double r, int bone, Part part) {
  const int around = 8, cap_rings = 2;
  const Vec3 axis = (p1 - p0).normalized();
  // Orthonormal frame (u, w, axis).
  Vec3 ref = std::abs(axis.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
  const Vec3 u = axis.cross(ref).normalized();
  const Vec3 w = axis.cross(u);

  const auto base = std::uint32_t(mesh.vertices.size());
  std::vector<std::uint32_t> ring_start;
  auto push = [&](const Vec3& p) {
    mesh.vertices.push_back(p);
    bones.push_back(bone);
    parts.push_back(part);
  };

  // Bottom pole, bottom cap rings, two cylinder rings, top cap rings, top pole.
  push(p0 - axis * r);
  // Ring latitudes measured from the bottom pole.
  struct Lat { Vec3 c; double rr; };
  std::vector<Lat> lats;
  for (int k = 1; k <= cap_rings; ++k) {
    const double a = M_PI_2 * k / (cap_rings + 1);
    lats.push_back({p0 - axis * (r * std::cos(a)), r * std::sin(a)});
  }
  lats.push_back({p0, r});
  lats.push_back({p1, r});
  for (int k = cap_rings; k >= 1; --k) {
    const double a = M_PI_2 * k / (cap_rings + 1);
    lats.push_back({p1 + axis * (r * std::cos(a)), r * std::sin(a)});
  }
  for (const auto& lat : lats) {
    ring_start.push_back(std::uint32_t(mesh.vertices.size()));
    for (int s = 0; s < around; ++s) {
      const double ph = 2 * M_PI * s / around;
      push(lat.c + u * (lat.rr * std::cos(ph)) + w * (lat.rr * std::sin(ph)));
    }
  }
  const auto top_pole = std::uint32_t(mesh.vertices.size());
  push(p1 + axis * r);

  // Bottom fan (reversed so normals point outward/down).
  for (int s = 0; s < around; ++s)
    mesh.faces.push_back(
        {base, ring_start[0] + std::uint32_t((s + 1) % around),
         ring_start[0] + std::uint32_t(s)});
  for (std::size_t l = 0; l + 1 < ring_start.size(); ++l)
    for (int s = 0; s < around; ++s) {
      const auto a = ring_start[l] + std::uint32_t(s);
      const auto b = ring_start[l] + std::uint32_t((s + 1) % around);
      const auto c = ring_start[l + 1] + std::uint32_t((s + 1) % around);
      const auto d = ring_start[l + 1] + std::uint32_t(s);
      mesh.faces.push_back({a, b, c});
      mesh.faces.push_back({a, c, d});
    }
  for (int s = 0; s < around; ++s)
    mesh.faces.push_back({top_pole, ring_start.back() + std::uint32_t(s),
                          ring_start.back() + std::uint32_t((s + 1) % around)});
}

HandModel build_model() {
  HandModel m;
  TriMesh mesh;

  struct FingerSpec {
    Part part;
    Vec3 base;
    Vec3 dir;
    double len[3];
    double radius[3];
  };
  const Vec3 fwd{0, 1, 0};
  const FingerSpec fingers[5] = {
      {Part::Thumb, {0.042, 0.015, 0}, Vec3{0.8, 0.6, 0}.normalized(),
       {0.034, 0.028, 0.022}, {0.0100, 0.0090, 0.0080}},
      {Part::Index, {0.030, 0.088, 0}, fwd, {0.034, 0.024, 0.018},
       {0.0080, 0.0075, 0.0070}},
      {Part::Middle, {0.010, 0.088, 0}, fwd, {0.038, 0.026, 0.020},
       {0.0080, 0.0075, 0.0070}},
      {Part::Ring, {-0.010, 0.088, 0}, fwd, {0.034, 0.024, 0.018},
       {0.0078, 0.0073, 0.0068}},
      {Part::Little, {-0.030, 0.088, 0}, fwd, {0.026, 0.019, 0.015},
       {0.0070, 0.0066, 0.0062}}};

  m.joint_parent[0] = -1;
  m.joint_rest[0] = {0, 0, 0};
  m.curl_axis[0] = {1, 0, 0};

  // Palm first so vertex blocks stay contiguous per bone.
  append_box(mesh, m.vertex_bone, m.part_label, {0, 0.044, 0},
             {0.040, 0.046, 0.013}, 5, 0, Part::Palm);

  for (int f = 0; f < 5; ++f) {
    const auto& spec = fingers[f];
    const Vec3 curl = spec.dir.cross(Vec3{0, 0, -1}).normalized();
    Vec3 p = spec.base;
    for (int s = 0; s < 3; ++s) {
      const int joint = 1 + 3 * f + s;
      m.joint_parent[joint] = (s == 0) ? 0 : joint - 1;
      m.joint_rest[joint] = p;
      m.curl_axis[joint] = curl;
      const Vec3 tip = p + spec.dir * spec.len[s];
      append_capsule(mesh, m.vertex_bone, m.part_label, p, tip, spec.radius[s],
                     joint, spec.part);
      p = tip;
    }
  }

  m.template_vertices = std::move(mesh.vertices);
  m.faces = std::move(mesh.faces);

  m.param_span[int(Part::Palm)] = {3, 6};
  for (int f = 0; f < 5; ++f)
    m.param_span[1 + f] = {6 + 9 * f, 6 + 9 * (f + 1)};
  return m;
}

}  // namespace

const char* part_name(Part p) {
  static const char* names[] = {"palm", "thumb", "index", "middle", "ring",
                                "little"};
  return names[int(p)];
}

const HandModel& default_model() {
  static const HandModel model = build_model();
  return model;
}

HandPose HandPose::from_theta(const std::vector<double>& theta51) {
  if (theta51.size() != kPoseDim)
    throw std::runtime_error("HandPose: theta must have 51 entries");
  HandPose p;
  for (int i = 0; i < 3; ++i) p.translation[i] = theta51[i];
  for (int j = 0; j < kNumJoints; ++j) {
    Vec3 w{theta51[3 + 3 * j], theta51[4 + 3 * j], theta51[5 + 3 * j]};
    double th = w.norm();
    if (th >= M_PI) {
      // Wrap the angle into (-pi, pi]; same rotation, bounded encoding.
      double wrapped = std::remainder(th, 2 * M_PI);
      w = w * (wrapped / th);
    }
    p.joint_rotations[3 * j] = w.x;
    p.joint_rotations[3 * j + 1] = w.y;
    p.joint_rotations[3 * j + 2] = w.z;
  }
  return p;
}

std::vector<double> HandPose::theta() const {
  std::vector<double> t(kPoseDim);
  for (int i = 0; i < 3; ++i) t[i] = translation[i];
  for (int i = 0; i < 48; ++i) t[3 + i] = joint_rotations[i];
  return t;
}

TriMesh HandModel::as_mesh() const {
  TriMesh mesh;
  mesh.vertices = template_vertices;
  mesh.faces = faces;
  mesh.watertight = true;
  return mesh;
}

TriMesh HandMesh::as_mesh() const {
  TriMesh mesh;
  mesh.vertices = vertices;
  mesh.faces = model->faces;
  mesh.watertight = true;
  return mesh;
}

std::vector<std::uint32_t> part_vertices(const HandModel& model, Part part) {
  std::vector<std::uint32_t> out;
  for (std::size_t v = 0; v < model.part_label.size(); ++v)
    if (model.part_label[v] == part) out.push_back(std::uint32_t(v));
  return out;
}

std::vector<int> part_params(const HandModel& model,
                             const std::vector<Part>& parts) {
  if (parts.empty()) return {};
  for (Part p : parts)
    if (p == Part::Palm) {
      std::vector<int> all(kPoseDim);
      for (int i = 0; i < kPoseDim; ++i) all[i] = i;
      return all;
    }
  std::vector<bool> mask(kPoseDim, false);
  for (Part p : parts) {
    const auto [b, e] = model.param_span[int(p)];
    for (int i = b; i < e; ++i) mask[i] = true;
  }
  std::vector<int> out;
  for (int i = 0; i < kPoseDim; ++i)
    if (mask[i]) out.push_back(i);
  return out;
}

void export_template(const HandModel& model, const std::string& obj_path,
                     const std::string& csv_path) {
  geometry::write_obj(model.as_mesh(), obj_path);
  std::ofstream csv(csv_path);
  if (!csv.good()) throw std::runtime_error("cannot open " + csv_path);
  csv << "vertex_index,part\n";
  for (std::size_t v = 0; v < model.part_label.size(); ++v)
    csv << v << ',' << part_name(model.part_label[v]) << '\n';
}

}  // namespace c2g::hand
