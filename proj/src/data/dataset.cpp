#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "c2g/data.hpp"
#include "c2g/kernels.hpp"

namespace c2g::data {

using geometry::Mat3;
using geometry::TriMesh;
using geometry::Vec3;
using hand::HandPose;
namespace fs = std::filesystem;

namespace {

Mat3 frame_for_approach(const Vec3& a) {
  // Maps hand +z to the approach direction; palm (hand -z) faces the object.
  Vec3 ref = std::abs(a.y) < 0.9 ? Vec3{0, 1, 0} : Vec3{1, 0, 0};
  const Vec3 x = a.cross(ref).normalized();
  const Vec3 y = a.cross(x);  // x cross y = a: right-handed (x, y, z=a)
  Mat3 r;
  r.m = {x.x, y.x, a.x, x.y, y.y, a.y, x.z, y.z, a.z};
  return r;
}

bool finger_contacts(const TriMesh& object, const hand::HandMesh& mesh,
                     const std::vector<std::uint32_t>& verts) {
  std::vector<Vec3> pts;
  pts.reserve(verts.size());
  for (auto v : verts) pts.push_back(mesh.vertices[v]);
  const auto sd = geometry::signed_distance(object, pts);
  for (double d : sd)
    if (d <= 0) return true;
  return false;
}

}  // namespace

HandPose oracle_grasp(const geometry::TriMesh& object, const Vec3& approach,
                      std::uint64_t seed) {
  (void)seed;  // closure is deterministic; kept for interface stability
  const auto& model = hand::default_model();
  const Vec3 a = approach.normalized();
  const auto bounds = object.bounds();
  const Vec3 center = (bounds.lo + bounds.hi) * 0.5;

  double support = 0;
  for (const auto& v : object.vertices)
    support = std::max(support, (v - center).dot(a));

  const Mat3 rot = frame_for_approach(a);
  const Vec3 palm_anchor_local{0, 0.045, -0.016};
  const double clearance = 0.006;
  const Vec3 palm_anchor_world = center + a * (support + clearance);
  const Vec3 wrist = palm_anchor_world - rot.apply(palm_anchor_local);

  HandPose pose;
  pose.translation = {wrist.x, wrist.y, wrist.z};
  const Vec3 waa = geometry::log_rotation(rot);
  pose.joint_rotations[0] = waa.x;
  pose.joint_rotations[1] = waa.y;
  pose.joint_rotations[2] = waa.z;

  bool any_contact = false;
  const hand::Part fingers[5] = {hand::Part::Thumb, hand::Part::Index,
                                 hand::Part::Middle, hand::Part::Ring,
                                 hand::Part::Little};
  for (int f = 0; f < 5; ++f) {
    const auto verts = part_vertices(model, fingers[f]);
    const int base_joint = 1 + 3 * f;
    // Simultaneous flexion, distal joints at reduced rate, until contact.
    const double step = 2.5 * M_PI / 180.0;
    const double rate[3] = {1.0, 0.8, 0.6};
    double angle = 0;
    bool contact = false;
    while (!contact && angle < M_PI / 2) {
      angle += step;
      for (int s = 0; s < 3; ++s) {
        const Vec3 aa = model.curl_axis[base_joint + s] * (angle * rate[s]);
        pose.joint_rotations[3 * (base_joint + s)] = aa.x;
        pose.joint_rotations[3 * (base_joint + s) + 1] = aa.y;
        pose.joint_rotations[3 * (base_joint + s) + 2] = aa.z;
      }
      const auto mesh = hand::forward(model, pose);
      contact = finger_contacts(object, mesh, verts);
    }
    if (!contact) {
      // Leave the finger at the limit; an unreachable finger is fine as
      // long as some finger makes contact.
      continue;
    }
    any_contact = true;
  }
  if (!any_contact) throw std::runtime_error("object unreachable");
  return pose;
}

losses::ContactMap derive_gt_contact(const geometry::ObjectCloud& cloud,
                                     const hand::HandMesh& hand_mesh,
                                     double threshold) {
  if (threshold <= 0) throw std::runtime_error("derive_gt_contact: threshold <= 0");
  std::vector<double> flat(hand_mesh.vertices.size() * 3);
  for (std::size_t v = 0; v < hand_mesh.vertices.size(); ++v) {
    flat[3 * v] = hand_mesh.vertices[v].x;
    flat[3 * v + 1] = hand_mesh.vertices[v].y;
    flat[3 * v + 2] = hand_mesh.vertices[v].z;
  }
  losses::ContactMap map;
  map.scores.resize(cloud.points.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const double q[3] = {cloud.points[i].x, cloud.points[i].y, cloud.points[i].z};
    double sq;
    kernels::nearest3(flat.data(), hand_mesh.vertices.size(), q, &sq);
    map.scores[i] = std::sqrt(sq) < threshold ? 1.0 : 0.0;
  }
  return map;
}

GraspSample augment(const GraspSample& sample, std::uint64_t seed,
                    double trans_range, double rot_range_deg) {
  geometry::Rng rng(seed ^ 0xa46u);
  const Vec3 t{rng.uniform(-trans_range, trans_range),
               rng.uniform(-trans_range, trans_range),
               rng.uniform(-trans_range, trans_range)};
  const double d2r = M_PI / 180.0;
  const Vec3 e{rng.uniform(-rot_range_deg, rot_range_deg) * d2r,
               rng.uniform(-rot_range_deg, rot_range_deg) * d2r,
               rng.uniform(-rot_range_deg, rot_range_deg) * d2r};
  const Mat3 r = geometry::rodrigues({e.x, 0, 0}) *
                 geometry::rodrigues({0, e.y, 0}) *
                 geometry::rodrigues({0, 0, e.z});

  GraspSample out = sample;
  for (auto& p : out.object_mesh.vertices) p = r.apply(p) + t;
  for (auto& p : out.cloud.points) p = r.apply(p) + t;
  if (out.gt_pose) {
    auto& pose = *out.gt_pose;
    const Vec3 old_t{pose.translation[0], pose.translation[1],
                     pose.translation[2]};
    const Vec3 new_t = r.apply(old_t) + t;
    pose.translation = {new_t.x, new_t.y, new_t.z};
    const Mat3 wrist = geometry::rodrigues(pose.joint_axis_angle(0));
    const Vec3 waa = geometry::log_rotation(r * wrist);
    pose.joint_rotations[0] = waa.x;
    pose.joint_rotations[1] = waa.y;
    pose.joint_rotations[2] = waa.z;
  }
  // gt_contact is rigid-invariant and left untouched.
  return out;
}

Dataset build_dataset(int n_objects, int grasps_per_object, std::uint64_t seed,
                      int cloud_points) {
  if (n_objects < 1 || grasps_per_object < 1)
    throw std::runtime_error("build_dataset: counts must be >= 1");
  Dataset ds;
  ds.test_kinds = {ObjectKind::Capsule};

  geometry::Rng rng(seed);
  for (int i = 0; i < n_objects; ++i) {
    const auto kind = ObjectKind(i % kNumKinds);
    ObjectParams params;
    params.size = rng.uniform(0.045, 0.075);
    params.aspect = rng.uniform(0.85, 1.15);
    const auto mesh = generate_object(kind, params, seed ^ (0x0b1ec7ull + i));
    const auto cloud =
        geometry::sample_surface_points(mesh, cloud_points, seed ^ (0xc10dull + i));

    int made = 0, attempts = 0;
    while (made < grasps_per_object && attempts < grasps_per_object * 4) {
      ++attempts;
      const Vec3 approach =
          Vec3{rng.normal(), rng.normal(), rng.normal()}.normalized();
      HandPose pose;
      try {
        pose = oracle_grasp(mesh, approach, seed);
      } catch (const std::runtime_error&) {
        continue;
      }
      const auto hmesh = hand::forward(hand::default_model(), pose);
      auto contact = derive_gt_contact(cloud, hmesh);
      if (std::none_of(contact.scores.begin(), contact.scores.end(),
                       [](double s) { return s > 0.5; }))
        continue;
      GraspSample s;
      s.object_mesh = mesh;
      s.cloud = cloud;
      s.gt_contact = std::move(contact);
      s.gt_pose = pose;
      s.kind = kind;
      s.id = "sample_" + std::to_string(i) + "_" + std::to_string(made);
      ds.samples.push_back(std::move(s));
      ++made;
    }
  }
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const bool is_test =
        std::find(ds.test_kinds.begin(), ds.test_kinds.end(),
                  ds.samples[i].kind) != ds.test_kinds.end();
    (is_test ? ds.test_indices : ds.train_indices).push_back(i);
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "objects");
  fs::create_directories(fs::path(dir) / "clouds");
  fs::create_directories(fs::path(dir) / "poses");
  nlohmann::json split;
  split["test_kinds"] = nlohmann::json::array();
  for (auto k : ds.test_kinds) split["test_kinds"].push_back(kind_name(k));
  split["train"] = nlohmann::json::array();
  split["test"] = nlohmann::json::array();

  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& s = ds.samples[i];
    geometry::write_obj(s.object_mesh,
                        (fs::path(dir) / "objects" / (s.id + ".obj")).string());
    auto cloud = s.cloud;
    cloud.contact = s.gt_contact.scores;
    geometry::write_cloud(cloud,
                          (fs::path(dir) / "clouds" / (s.id + ".c2gpc")).string());
    nlohmann::json pj;
    pj["kind"] = kind_name(s.kind);
    pj["provenance"] = s.provenance;
    if (s.gt_pose) pj["theta"] = s.gt_pose->theta();
    std::ofstream pf(fs::path(dir) / "poses" / (s.id + ".json"));
    pf << pj.dump(2) << '\n';
    const bool is_test = std::find(ds.test_indices.begin(), ds.test_indices.end(),
                                   i) != ds.test_indices.end();
    split[is_test ? "test" : "train"].push_back(s.id);
  }
  std::ofstream sf(fs::path(dir) / "split.json");
  sf << split.dump(2) << '\n';
}

Dataset load_dataset(const std::string& dir) {
  std::ifstream sf(fs::path(dir) / "split.json");
  if (!sf.good()) throw std::runtime_error("missing split.json in " + dir);
  nlohmann::json split;
  sf >> split;

  Dataset ds;
  for (const auto& k : split.at("test_kinds"))
    ds.test_kinds.push_back(kind_from_name(k.get<std::string>()));

  auto load_one = [&](const std::string& id, bool is_test) {
    GraspSample s;
    s.id = id;
    s.object_mesh =
        geometry::read_obj((fs::path(dir) / "objects" / (id + ".obj")).string());
    s.object_mesh.watertight = true;
    auto cloud =
        geometry::read_cloud((fs::path(dir) / "clouds" / (id + ".c2gpc")).string());
    s.gt_contact = losses::ContactMap::clamped(*cloud.contact);
    cloud.contact.reset();
    s.cloud = std::move(cloud);
    std::ifstream pf(fs::path(dir) / "poses" / (id + ".json"));
    if (pf.good()) {
      nlohmann::json pj;
      pf >> pj;
      s.kind = kind_from_name(pj.value("kind", "sphere"));
      s.provenance = pj.value("provenance", "external");
      if (pj.contains("theta"))
        s.gt_pose = HandPose::from_theta(pj["theta"].get<std::vector<double>>());
    }
    const auto idx = ds.samples.size();
    ds.samples.push_back(std::move(s));
    (is_test ? ds.test_indices : ds.train_indices).push_back(idx);
  };
  for (const auto& id : split.at("train")) load_one(id.get<std::string>(), false);
  for (const auto& id : split.at("test")) load_one(id.get<std::string>(), true);
  return ds;
}

}  // namespace c2g::data
