#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "c2g/geometry.hpp"
#include "c2g/hand.hpp"
#include "c2g/losses.hpp"

// Synthetic dataset generation, ground-truth contact derivation,
// augmentation, and ingestion of external samples.
namespace c2g::data {

enum class ObjectKind : int { Sphere = 0, Box, Cylinder, Capsule, UnionOfTwo };
constexpr int kNumKinds = 5;
const char* kind_name(ObjectKind k);
ObjectKind kind_from_name(const std::string& name);

struct ObjectParams {
  // Characteristic size in meters; documented range 0.04..0.12.
  double size = 0.06;
  double aspect = 1.0;  // secondary dimension ratio where applicable
};

struct GraspSample {
  geometry::TriMesh object_mesh;
  geometry::ObjectCloud cloud;
  losses::ContactMap gt_contact;
  std::optional<hand::HandPose> gt_pose;
  ObjectKind kind = ObjectKind::Sphere;
  std::string provenance = "synthetic";  // or "external"
  std::string id;
};

geometry::TriMesh generate_object(ObjectKind kind, const ObjectParams& params,
                                  std::uint64_t seed);

// Procedural closure grasp: approach along a unit vector, close fingers
// until first contact. Deterministic; throws "object unreachable" when no
// finger can make contact.
hand::HandPose oracle_grasp(const geometry::TriMesh& object,
                            const geometry::Vec3& approach, std::uint64_t seed);

// Binary map: 1 where nearest-hand-vertex distance < threshold.
losses::ContactMap derive_gt_contact(const geometry::ObjectCloud& cloud,
                                     const hand::HandMesh& hand,
                                     double threshold = config::kContactThreshold);

// Rigid +-1 cm / +-1 degree augmentation applied jointly to cloud and pose.
GraspSample augment(const GraspSample& sample, std::uint64_t seed,
                    double trans_range = config::kAugTranslation,
                    double rot_range_deg = config::kAugRotationDeg);

struct Dataset {
  std::vector<GraspSample> samples;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  std::vector<ObjectKind> test_kinds;
};

Dataset build_dataset(int n_objects, int grasps_per_object, std::uint64_t seed,
                      int cloud_points = config::kCloudPoints);

// Directory layout: objects/*.obj, clouds/*.c2gpc, poses/*.json, split.json.
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace c2g::data
