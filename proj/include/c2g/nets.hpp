#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "c2g/autodiff.hpp"
#include "c2g/config.hpp"
#include "c2g/data.hpp"
#include "c2g/geometry.hpp"
#include "c2g/hand.hpp"
#include "c2g/losses.hpp"

// The two learned stages: ContactCVAE (multi-modal contact-map generation)
// and GraspNet (contact-conditioned pose regression). Both are PointNet-style
// per-point MLPs with a global max pool, built on the autodiff tape.
namespace c2g::nets {

using autodiff::Tape;
using autodiff::Tensor;
using autodiff::Var;

// Flat parameter registry; tensor order is the checkpoint order.
struct Params {
  std::vector<std::string> names;
  std::vector<Tensor> tensors;
  autodiff::AdamState adam;

  int add(std::string name, Tensor t);
  // Leafs every tensor onto the tape (same order).
  std::vector<Var> leaf_all(Tape& t, bool requires_grad) const;
};

// Shared per-point MLP: [n,in] -> [n,out], ReLU between layers, linear last.
struct Mlp {
  struct Layer {
    int w = -1, b = -1;
  };
  std::vector<Layer> layers;
  std::vector<int> widths;

  void init(Params& p, const std::string& prefix, std::vector<int> w,
            geometry::Rng& rng);
  Var apply(Tape& t, const std::vector<Var>& vars, Var x) const;
};

struct ConditionFeatures {
  Tensor f_local;       // [n, local_width]
  Tensor f_global_row;  // [1, global_width]; duplicated per point on use
  int n = 0;
};

struct LatentCode {
  std::vector<double> mu, log_var, z;
};

struct TrainStats {
  double loss = 0, bce = 0, dice = 0, kl = 0;
  int samples = 0;
};

struct CvaeWidths {
  std::vector<int> local{3, 64, 64};
  std::vector<int> global_tail{64, 128, 1024};
  std::vector<int> posterior{4, 64, 128, 1024};
  std::vector<int> decoder_hidden{512, 128};
  int latent = config::kLatentDim;
  // sin/cos octaves appended to the xyz inputs (0 = raw coordinates);
  // local[0]/posterior[0] are widened accordingly on construction.
  int fourier = 0;

  static CvaeWidths defaults() { return {}; }
  static CvaeWidths toy();  // small widths for desk-scale training/tests
  int f_lg_width() const { return local.back() + global_tail.back(); }
};

class ContactCVAE {
 public:
  ContactCVAE(const CvaeWidths& w, std::uint64_t seed);

  ConditionFeatures condition_encode(const geometry::ObjectCloud& cloud) const;
  LatentCode posterior_encode(const geometry::ObjectCloud& cloud,
                              const losses::ContactMap& c,
                              std::uint64_t seed) const;
  losses::ContactMap decode(const geometry::ObjectCloud& cloud,
                            const std::vector<double>& z) const;
  // Posterior z then decode (training-style reconstruction).
  losses::ContactMap reconstruct(const geometry::ObjectCloud& cloud,
                                 const losses::ContactMap& c,
                                 std::uint64_t seed) const;
  // Prior z ~ N(0, I); requires a trained or loaded model.
  losses::ContactMap generate(const geometry::ObjectCloud& cloud,
                              std::uint64_t seed) const;
  std::vector<losses::ContactMap> interpolate(const geometry::ObjectCloud& cloud,
                                              const std::vector<double>& z_a,
                                              const std::vector<double>& z_b,
                                              int steps) const;

  // One pass over the samples in batches of config::kBatchSize; returns
  // mean per-sample loss terms. Augments each sample when enabled.
  TrainStats train_epoch(const std::vector<const data::GraspSample*>& samples,
                         double lr, std::uint64_t seed, bool augment = true,
                         int batch_size = config::kBatchSize);

  void save(const std::string& path) const;
  static ContactCVAE load(const std::string& path);

  const CvaeWidths& widths() const { return widths_; }
  Params& params() { return params_; }
  bool trained() const { return trained_; }

 private:
  Var decode_graph(Tape& t, const std::vector<Var>& vars, Var xyz, Var z_row,
                   int n) const;
  Var local_graph(Tape& t, const std::vector<Var>& vars, Var xyz) const;

  CvaeWidths widths_;
  Params params_;
  Mlp local_, global_tail_, posterior_, decoder_;
  Mlp::Layer mu_head_, lv_head_;
  bool trained_ = false;
};

struct GraspWidths {
  std::vector<int> encoder{4, 64, 128, 1024};
  std::vector<int> head{1024, 512, 256, 128, 64, hand::kPoseDim};

  static GraspWidths defaults() { return {}; }
  static GraspWidths toy();
};

struct GraspPrediction {
  hand::HandPose pose;
  hand::HandMesh mesh;
  losses::ContactMap source_contact;
};

class GraspNet {
 public:
  GraspNet(const GraspWidths& w, std::uint64_t seed);

  GraspPrediction predict(const geometry::ObjectCloud& cloud,
                          const losses::ContactMap& c) const;
  // Differentiable theta (shape [51]) for training graphs.
  Var theta_graph(Tape& t, const std::vector<Var>& vars,
                  const geometry::ObjectCloud& cloud,
                  const losses::ContactMap& c) const;

  // Eq.-4 objective over GT poses; when cvae is non-null, every second
  // sample trains against the CVAE-reconstructed contact map (50/50 mix).
  TrainStats train_epoch(const std::vector<const data::GraspSample*>& samples,
                         const ContactCVAE* cvae, double lr, std::uint64_t seed,
                         int batch_size = config::kBatchSize);

  void save(const std::string& path) const;
  static GraspNet load(const std::string& path);

  const GraspWidths& widths() const { return widths_; }
  Params& params() { return params_; }

 private:
  GraspWidths widths_;
  Params params_;
  Mlp encoder_, head_;
};

}  // namespace c2g::nets
