#pragma once

#include <string>
#include <vector>

#include "c2g/config.hpp"
#include "c2g/geometry.hpp"
#include "c2g/hand.hpp"
#include "c2g/nets.hpp"

// Stage 3: penetration-aware partial pose refinement and its global
// ablation. Detection runs once; only the offending parts' parameters are
// optimized (Eq.-5-style objective), the rest stay bit-identical.
namespace c2g::refine {

struct RefinementReport {
  hand::HandPose initial_pose;
  hand::HandPose final_pose;
  std::vector<hand::Part> adjusted_parts;
  std::vector<int> adjusted_param_indices;
  std::vector<double> loss_trace;  // objective per step
  int steps = 0;

  std::string to_json() const;
};

// Part p is included iff one of its vertices lies deeper than the
// threshold inside the object.
std::vector<hand::Part> detect_penetrating_parts(
    const hand::HandMesh& hand, const geometry::TriMesh& object,
    double depth_threshold = config::kPenetrationDetect);

// Palm membership selects all 51 indices; otherwise the union of the
// offending fingers' spans. Empty in, empty out.
std::vector<int> select_adjustable(const std::vector<hand::Part>& parts);

RefinementReport partial_optimize(const nets::GraspPrediction& pred,
                                  const geometry::ObjectCloud& cloud,
                                  const geometry::TriMesh& object);

// Same objective and schedule over all 51 parameters, no detection gate.
RefinementReport global_optimize(const nets::GraspPrediction& pred,
                                 const geometry::ObjectCloud& cloud,
                                 const geometry::TriMesh& object);

}  // namespace c2g::refine
