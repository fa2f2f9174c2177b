#pragma once

#include <vector>

#include "c2g/autodiff.hpp"
#include "c2g/config.hpp"
#include "c2g/geometry.hpp"
#include "c2g/hand.hpp"

// Training and refinement loss terms. Plain f64 entry points serve the
// metrics/evaluation path; *_ad builders assemble the same quantities on
// an autodiff tape for training and refinement.
namespace c2g::losses {

struct ContactMap {
  std::vector<double> scores;  // aligned with a cloud, values in [0,1]

  static ContactMap clamped(std::vector<double> raw);
  std::size_t size() const { return scores.size(); }
};

// --- plain evaluation ---
double bce_loss(const ContactMap& pred, const ContactMap& gt);
double dice_loss(const ContactMap& pred, const ContactMap& gt);
double kl_loss(const std::vector<double>& mu, const std::vector<double>& log_var);
double contact_loss(const ContactMap& pred, const ContactMap& gt,
                    const std::vector<double>& mu,
                    const std::vector<double>& log_var);
double vertex_loss(const hand::HandMesh& pred, const hand::HandMesh& gt);
double chamfer_loss(const hand::HandMesh& hand, const geometry::ObjectCloud& cloud);
double penetration_loss(const hand::HandMesh& hand, const geometry::TriMesh& object);
double translation_loss(const hand::HandPose& pred, const hand::HandPose& gt);
double geodesic_pose_loss(const hand::HandPose& pred, const hand::HandPose& gt);
ContactMap contact_from_mesh(const hand::HandMesh& hand,
                             const geometry::ObjectCloud& cloud,
                             double t = config::kSoftContactT,
                             double s = config::kSoftContactS);
double consistency_loss(const ContactMap& c_in, const hand::HandMesh& hand,
                        const geometry::ObjectCloud& cloud);

struct GraspLossTerms {
  double v = 0, cd = 0, ptr = 0, t = 0, p = 0, cst = 0;
};
double grasp_loss(const GraspLossTerms& terms);

// --- autodiff builders ---
using autodiff::Tape;
using autodiff::Var;

Var bce_loss_ad(Tape& t, Var pred_scores, const ContactMap& gt);
Var dice_loss_ad(Tape& t, Var pred_scores, const ContactMap& gt);
Var kl_loss_ad(Tape& t, Var mu, Var log_var);
Var contact_loss_ad(Tape& t, Var pred_scores, const ContactMap& gt, Var mu,
                    Var log_var);
// verts: [V,3] posed hand vertices.
Var vertex_loss_ad(Tape& t, Var verts, const std::vector<geometry::Vec3>& gt);
Var chamfer_loss_ad(Tape& t, Var verts, const geometry::ObjectCloud& cloud);
Var penetration_loss_ad(Tape& t, Var verts, const geometry::TriMesh& object);
Var translation_loss_ad(Tape& t, Var theta, const hand::HandPose& gt);
Var geodesic_pose_loss_ad(Tape& t, Var theta, const hand::HandPose& gt);
Var contact_from_mesh_ad(Tape& t, Var verts, const geometry::ObjectCloud& cloud,
                         double soft_t = config::kSoftContactT,
                         double soft_s = config::kSoftContactS);
Var consistency_loss_ad(Tape& t, const ContactMap& c_in, Var verts,
                        const geometry::ObjectCloud& cloud);
// Weighted Eq.-4-style sum; every term is a scalar Var.
Var grasp_loss_ad(Tape& t, Var v, Var cd, Var ptr, Var trans, Var pose, Var cst);

}  // namespace c2g::losses
