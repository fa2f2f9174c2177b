#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "c2g/losses.hpp"
#include "c2g/refine.hpp"

namespace c2g::refine {

using autodiff::Tape;
using autodiff::Tensor;
using autodiff::Var;

std::vector<hand::Part> detect_penetrating_parts(
    const hand::HandMesh& hand_mesh, const geometry::TriMesh& object,
    double depth_threshold) {
  const auto sd = geometry::signed_distance(object, hand_mesh.vertices);
  const auto& model = *hand_mesh.model;
  bool hit[hand::kNumParts] = {};
  for (std::size_t v = 0; v < sd.size(); ++v)
    if (sd[v] < -depth_threshold) hit[int(model.part_label[v])] = true;
  std::vector<hand::Part> parts;
  for (int p = 0; p < hand::kNumParts; ++p)
    if (hit[p]) parts.push_back(hand::Part(p));
  return parts;
}

std::vector<int> select_adjustable(const std::vector<hand::Part>& parts) {
  return hand::part_params(hand::default_model(), parts);
}

namespace {

RefinementReport run_optimize(const nets::GraspPrediction& pred,
                              const geometry::ObjectCloud& cloud,
                              const geometry::TriMesh& object,
                              std::vector<hand::Part> parts,
                              std::vector<int> indices, int steps) {
  const auto& model = hand::default_model();
  RefinementReport report;
  report.initial_pose = pred.pose;
  report.final_pose = pred.pose;
  report.adjusted_parts = std::move(parts);
  report.adjusted_param_indices = std::move(indices);
  if (report.adjusted_param_indices.empty() || steps == 0) return report;

  const Tensor theta_pred({hand::kPoseDim}, pred.pose.theta());
  Tensor theta = theta_pred;
  Tensor m = Tensor::zeros({hand::kPoseDim});
  Tensor v = Tensor::zeros({hand::kPoseDim});
  std::int64_t t_step = 0;

  for (int s = 0; s < steps; ++s) {
    Tape t;
    const Var th = t.leaf(theta, true);
    const Var verts = hand::forward_ad(t, model, th);
    const Var l_cst =
        losses::consistency_loss_ad(t, pred.source_contact, verts, cloud);
    const Var l_ptr = losses::penetration_loss_ad(t, verts, object);
    const Var dh = autodiff::sub(t, th, t.constant(theta_pred));
    const Var l_h = autodiff::sum_all(t, autodiff::mul(t, dh, dh));
    Var obj = autodiff::smul(t, l_cst, config::kOmega0);
    obj = autodiff::add(t, obj, autodiff::smul(t, l_ptr, config::kOmega1));
    obj = autodiff::add(t, obj, autodiff::smul(t, l_h, config::kOmega2));
    t.backward(obj);
    report.loss_trace.push_back(t.val(obj).v[0]);
    autodiff::adam_step_masked(theta, t.grad(th), m, v, t_step,
                               report.adjusted_param_indices,
                               config::kRefineLr);
  }

  report.steps = steps;
  // Bypass from_theta: wrapping could perturb frozen parameters.
  std::copy_n(theta.v.begin(), 3, report.final_pose.translation.begin());
  std::copy_n(theta.v.begin() + 3, 48, report.final_pose.joint_rotations.begin());
  return report;
}

}  // namespace

RefinementReport partial_optimize(const nets::GraspPrediction& pred,
                                  const geometry::ObjectCloud& cloud,
                                  const geometry::TriMesh& object) {
  auto parts = detect_penetrating_parts(pred.mesh, object);
  auto indices = select_adjustable(parts);
  const int steps = indices.empty() ? 0 : config::kRefineSteps;
  return run_optimize(pred, cloud, object, std::move(parts), std::move(indices),
                      steps);
}

RefinementReport global_optimize(const nets::GraspPrediction& pred,
                                 const geometry::ObjectCloud& cloud,
                                 const geometry::TriMesh& object) {
  std::vector<hand::Part> parts;
  for (int p = 0; p < hand::kNumParts; ++p) parts.push_back(hand::Part(p));
  std::vector<int> indices(hand::kPoseDim);
  std::iota(indices.begin(), indices.end(), 0);
  return run_optimize(pred, cloud, object, std::move(parts), std::move(indices),
                      config::kRefineSteps);
}

std::string RefinementReport::to_json() const {
  nlohmann::json j;
  j["initial_pose"] = initial_pose.theta();
  j["final_pose"] = final_pose.theta();
  std::vector<std::string> part_names;
  for (auto p : adjusted_parts) part_names.push_back(hand::part_name(p));
  j["adjusted_parts"] = part_names;
  j["adjusted_param_indices"] = adjusted_param_indices;
  j["loss_trace"] = loss_trace;
  j["steps"] = steps;
  return j.dump(2);
}

}  // namespace c2g::refine
