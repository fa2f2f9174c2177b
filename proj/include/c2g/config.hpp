#pragma once

#include <string>

// Pinned pipeline constants, exposed verbatim through introspection()
// (CLI subcommand `config`) so experiments can audit them.
namespace c2g::config {

// Stage-1 contact loss weights.
inline constexpr double kGamma0 = 0.5;    // bce
inline constexpr double kGamma1 = 0.5;    // dice
inline constexpr double kGamma2 = 1e-3;   // kl

// Stage-2 grasp loss weights.
inline constexpr double kLambdaV = 35.0;
inline constexpr double kLambdaCd = 20.0;
inline constexpr double kLambdaPtr = 5.0;
inline constexpr double kLambdaT = 0.1;
inline constexpr double kLambdaP = 0.1;
inline constexpr double kLambdaCst = 0.05;

// Stage-3 refinement objective weights and schedule.
inline constexpr double kOmega0 = 0.01;   // consistency
inline constexpr double kOmega1 = 2.0;    // penetration
inline constexpr double kOmega2 = 0.02;   // stay-close prior
inline constexpr double kRefineLr = 2e-4;
inline constexpr int kRefineSteps = 200;

// Training defaults.
inline constexpr int kCloudPoints = 2048;
inline constexpr int kBatchSize = 32;
inline constexpr double kTrainLr = 1e-4;
inline constexpr int kEpochs = 130;
inline constexpr double kAugTranslation = 0.01;  // +-1 cm per axis
inline constexpr double kAugRotationDeg = 1.0;   // +-1 degree per axis

// Contact derivation and detection.
inline constexpr double kContactThreshold = 0.005;   // 5 mm binarization
inline constexpr double kSoftContactT = 0.005;       // sigmoid midpoint
inline constexpr double kSoftContactS = 0.001;       // sigmoid scale
inline constexpr double kPenetrationDetect = 0.001;  // 1 mm part trigger

// Metrics.
inline constexpr double kVoxelSize = 0.005;       // 0.5 cm
inline constexpr double kSuccessMaxVol = 5.0;     // cm^3, strict <
inline constexpr double kSuccessMaxDisp = 2.0;    // cm, strict <
inline constexpr double kSimDuration = 1.0;       // s
inline constexpr double kSimDt = 1.0 / 250.0;
inline constexpr double kSimGravity = -9.81;
inline constexpr double kSimSpringK = 1e4;   // N/m
inline constexpr double kSimDampingC = 10.0;  // N*s/m
inline constexpr double kSimDensity = 500.0;  // kg/m^3
inline constexpr int kLatentDim = 64;

// JSON document of every constant above.
std::string introspection();

}  // namespace c2g::config
