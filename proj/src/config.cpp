#include <json.hpp>

#include "c2g/config.hpp"

namespace c2g::config {

std::string introspection() {
  nlohmann::json j;
  j["contact_loss"] = {{"gamma0", kGamma0}, {"gamma1", kGamma1}, {"gamma2", kGamma2}};
  j["grasp_loss"] = {{"lambda_v", kLambdaV},   {"lambda_cd", kLambdaCd},
                     {"lambda_ptr", kLambdaPtr}, {"lambda_t", kLambdaT},
                     {"lambda_p", kLambdaP},   {"lambda_cst", kLambdaCst}};
  j["refine"] = {{"omega0", kOmega0},
                 {"omega1", kOmega1},
                 {"omega2", kOmega2},
                 {"lr", kRefineLr},
                 {"steps", kRefineSteps}};
  j["train"] = {{"cloud_points", kCloudPoints},
                {"batch_size", kBatchSize},
                {"lr", kTrainLr},
                {"epochs", kEpochs},
                {"aug_translation_m", kAugTranslation},
                {"aug_rotation_deg", kAugRotationDeg}};
  j["contact"] = {{"threshold_m", kContactThreshold},
                  {"soft_t_m", kSoftContactT},
                  {"soft_s_m", kSoftContactS},
                  {"penetration_detect_m", kPenetrationDetect}};
  j["metrics"] = {{"voxel_size_m", kVoxelSize},
                  {"success_max_vol_cm3", kSuccessMaxVol},
                  {"success_max_disp_cm", kSuccessMaxDisp},
                  {"sim_duration_s", kSimDuration},
                  {"sim_dt_s", kSimDt},
                  {"sim_gravity", kSimGravity},
                  {"sim_spring_k", kSimSpringK},
                  {"sim_damping_c", kSimDampingC},
                  {"sim_density", kSimDensity}};
  j["latent_dim"] = kLatentDim;
  return j.dump(2);
}

}  // namespace c2g::config
