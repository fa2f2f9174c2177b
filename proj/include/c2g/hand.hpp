#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "c2g/autodiff.hpp"
#include "c2g/geometry.hpp"

// Procedural articulated hand with the 51-D pose interface: 3 global
// translation + 16 axis-angle joint rotations (wrist + 3 per finger).
// Rigid skinning, one bone per vertex; six-part vertex segmentation.
namespace c2g::hand {

enum class Part : int { Palm = 0, Thumb, Index, Middle, Ring, Little };
constexpr int kNumParts = 6;
constexpr int kNumJoints = 16;
constexpr int kPoseDim = 51;

const char* part_name(Part p);

struct HandPose {
  std::array<double, 3> translation{0, 0, 0};
  std::array<double, 48> joint_rotations{};  // 16 x axis-angle, wrist first

  HandPose() = default;
  // Wraps each axis-angle to norm < pi.
  static HandPose from_theta(const std::vector<double>& theta51);
  std::vector<double> theta() const;  // length 51
  geometry::Vec3 joint_axis_angle(int j) const {
    return {joint_rotations[3 * j], joint_rotations[3 * j + 1],
            joint_rotations[3 * j + 2]};
  }
};

struct HandModel {
  std::vector<geometry::Vec3> template_vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;
  std::vector<int> vertex_bone;               // joint index per vertex
  std::vector<Part> part_label;               // per vertex
  std::array<int, kNumJoints> joint_parent;   // -1 for wrist
  std::array<geometry::Vec3, kNumJoints> joint_rest;  // absolute rest position
  std::array<geometry::Vec3, kNumJoints> curl_axis;   // flexion axis, unit
  // Parameter spans into theta per part; palm owns [3,6) (wrist rotation).
  std::array<std::pair<int, int>, kNumParts> param_span;

  std::size_t vertex_count() const { return template_vertices.size(); }
  geometry::TriMesh as_mesh() const;
};

struct HandMesh {
  std::vector<geometry::Vec3> vertices;
  const HandModel* model = nullptr;  // topology + labels shared

  geometry::TriMesh as_mesh() const;
};

// Builds the fixed template: box-like palm plus 3 capsule segments per
// finger, ~800 vertices, watertight per part union.
const HandModel& default_model();

// Plain forward kinematics (reference path, no autodiff).
HandMesh forward(const HandModel& model, const HandPose& pose);

// Per-joint global transforms at a pose (posed joint origin + rotation).
void joint_transforms(const HandModel& model, const HandPose& pose,
                      std::array<geometry::Mat3, kNumJoints>* rot,
                      std::array<geometry::Vec3, kNumJoints>* pos);

// Differentiable forward kinematics: theta is a [51] tape variable, the
// result is the posed vertex block [V,3].
autodiff::Var forward_ad(autodiff::Tape& tape, const HandModel& model,
                         autodiff::Var theta);

std::vector<std::uint32_t> part_vertices(const HandModel& model, Part part);
// Union of parameter spans; palm membership selects all 51 indices.
std::vector<int> part_params(const HandModel& model,
                             const std::vector<Part>& parts);

// OBJ template export plus a sidecar CSV (vertex_index, part).
void export_template(const HandModel& model, const std::string& obj_path,
                     const std::string& csv_path);

}  // namespace c2g::hand
