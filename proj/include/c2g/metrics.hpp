#pragma once

#include <string>
#include <vector>

#include "c2g/config.hpp"
#include "c2g/geometry.hpp"
#include "c2g/hand.hpp"

// The evaluation suite: penetration depth/volume, a self-contained
// penalty-based drop simulator, contact/success rates and diversity.
// Lengths returned in cm (geometry works in meters).
namespace c2g::metrics {

struct GraspEvaluation {
  std::string sample_id;
  double depth_max = 0, depth_mean = 0;  // cm
  double volume = 0;                     // cm^3
  double sim_disp = 0;                   // cm
  bool in_contact = false;
  bool success = false;
};

// Max and mean |depth| in cm over penetrating hand vertices; (0,0) if none.
std::pair<double, double> penetration_depth(const hand::HandMesh& hand,
                                            const geometry::TriMesh& object);

// Intersection of the two 0.5cm voxelizations on a shared grid, cm^3.
double penetration_volume(const hand::HandMesh& hand,
                          const geometry::TriMesh& object);
double penetration_volume(const geometry::TriMesh& a,
                          const geometry::TriMesh& b);

// Rigid drop test: hand static, object under gravity with penalty
// contacts; returns center-of-mass displacement in cm after `duration`.
// Throws "simulation diverged" on NaN.
double simulate_displacement(const hand::HandMesh& hand,
                             const geometry::TriMesh& object,
                             double duration = config::kSimDuration,
                             double gravity = config::kSimGravity);

// Percent of samples with at least one touching hand vertex.
double contact_rate(const std::vector<GraspEvaluation>& samples);
// Percent with volume < 5 cm^3 and sim_disp < 2 cm (strict).
double success_rate(const std::vector<GraspEvaluation>& samples);

// Mean pairwise L2 between flattened vertex vectors, in cm.
double diversity(const std::vector<hand::HandMesh>& meshes);

GraspEvaluation evaluate_grasp(const std::string& id,
                               const hand::HandMesh& hand,
                               const geometry::TriMesh& object);

// eval CLI artifacts: per-sample CSV rows + summary JSON mirroring the
// table columns (Dep, Vol, Mean, Var, CR, Div, Sim-SR).
std::string to_csv(const std::vector<GraspEvaluation>& samples);
std::string summary_json(const std::vector<GraspEvaluation>& samples,
                         double diversity_cm);

}  // namespace c2g::metrics
