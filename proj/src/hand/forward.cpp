#include <stdexcept>

#include "c2g/hand.hpp"

namespace c2g::hand {

using autodiff::Tape;
using autodiff::Tensor;
using autodiff::Var;
using geometry::Mat3;
using geometry::Vec3;

void joint_transforms(const HandModel& model, const HandPose& pose,
                      std::array<Mat3, kNumJoints>* rot,
                      std::array<Vec3, kNumJoints>* pos) {
  const Vec3 t{pose.translation[0], pose.translation[1], pose.translation[2]};
  for (int j = 0; j < kNumJoints; ++j) {
    const Mat3 local = geometry::rodrigues(pose.joint_axis_angle(j));
    const int q = model.joint_parent[j];
    if (q < 0) {
      (*rot)[j] = local;
      (*pos)[j] = t + model.joint_rest[j];
    } else {
      (*rot)[j] = (*rot)[q] * local;
      (*pos)[j] =
          (*pos)[q] + (*rot)[q].apply(model.joint_rest[j] - model.joint_rest[q]);
    }
  }
}

HandMesh forward(const HandModel& model, const HandPose& pose) {
  std::array<Mat3, kNumJoints> rot;
  std::array<Vec3, kNumJoints> pos;
  joint_transforms(model, pose, &rot, &pos);

  HandMesh mesh;
  mesh.model = &model;
  mesh.vertices.resize(model.vertex_count());
  for (std::size_t v = 0; v < model.vertex_count(); ++v) {
    const int b = model.vertex_bone[v];
    mesh.vertices[v] =
        pos[b] + rot[b].apply(model.template_vertices[v] - model.joint_rest[b]);
  }
  return mesh;
}

Var forward_ad(Tape& tape, const HandModel& model, Var theta) {
  if (tape.val(theta).size() != kPoseDim)
    throw std::runtime_error("forward_ad: theta must have 51 entries");

  const Var tr = autodiff::slice_flat(tape, theta, 0, 3, {3, 1});
  const Var aa = autodiff::slice_flat(tape, theta, 3, 48, {kNumJoints, 3});
  const Var rots = autodiff::axis_angle_to_rotation(tape, aa);  // [16,9]

  std::array<Var, kNumJoints> R;   // [3,3] global rotations
  std::array<Var, kNumJoints> p;   // [3,1] posed joint positions
  for (int j = 0; j < kNumJoints; ++j) {
    const Var local = autodiff::slice_flat(tape, rots, 9 * j, 9, {3, 3});
    const int q = model.joint_parent[j];
    if (q < 0) {
      R[j] = local;
      const Vec3 rest = model.joint_rest[j];
      p[j] = autodiff::add(
          tape, tr, tape.constant(Tensor({3, 1}, {rest.x, rest.y, rest.z})));
    } else {
      R[j] = autodiff::matmul(tape, R[q], local);
      const Vec3 off = model.joint_rest[j] - model.joint_rest[q];
      const Var off_c = tape.constant(Tensor({3, 1}, {off.x, off.y, off.z}));
      p[j] = autodiff::add(tape, p[q], autodiff::matmul(tape, R[q], off_c));
    }
  }

  // Vertices are grouped contiguously per bone by construction.
  std::vector<Var> blocks;
  std::size_t v0 = 0;
  while (v0 < model.vertex_count()) {
    const int b = model.vertex_bone[v0];
    std::size_t v1 = v0;
    while (v1 < model.vertex_count() && model.vertex_bone[v1] == b) ++v1;
    const std::size_t n = v1 - v0;
    std::vector<double> rest(n * 3);
    for (std::size_t v = v0; v < v1; ++v) {
      const Vec3 d = model.template_vertices[v] - model.joint_rest[b];
      rest[3 * (v - v0)] = d.x;
      rest[3 * (v - v0) + 1] = d.y;
      rest[3 * (v - v0) + 2] = d.z;
    }
    const Var rest_c = tape.constant(Tensor({int(n), 3}, std::move(rest)));
    const Var rotated =
        autodiff::matmul(tape, rest_c, autodiff::transpose2d(tape, R[b]));
    const Var p_row = autodiff::broadcast_rows(
        tape, autodiff::transpose2d(tape, p[b]), int(n));
    blocks.push_back(autodiff::add(tape, rotated, p_row));
    v0 = v1;
  }
  return autodiff::concat_rows(tape, blocks);
}

}  // namespace c2g::hand
