#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "c2g/nets.hpp"

namespace c2g::nets {

using losses::ContactMap;

namespace {

Tensor cloud_xyzc(const geometry::ObjectCloud& cloud, const ContactMap& c) {
  if (cloud.size() != c.size())
    throw std::runtime_error("contact map and cloud size mismatch");
  const int n = int(cloud.size());
  std::vector<double> v(std::size_t(n) * 4);
  for (int i = 0; i < n; ++i) {
    v[4 * std::size_t(i)] = cloud.points[i].x;
    v[4 * std::size_t(i) + 1] = cloud.points[i].y;
    v[4 * std::size_t(i) + 2] = cloud.points[i].z;
    v[4 * std::size_t(i) + 3] = c.scores[i];
  }
  return Tensor({n, 4}, std::move(v));
}

}  // namespace

GraspWidths GraspWidths::toy() {
  GraspWidths w;
  w.encoder = {4, 32, 64, 128};
  w.head = {128, 64, 64, 64, 64, hand::kPoseDim};
  return w;
}

GraspNet::GraspNet(const GraspWidths& w, std::uint64_t seed) : widths_(w) {
  geometry::Rng rng(seed ^ 0x69a5ull);
  encoder_.init(params_, "encoder", w.encoder, rng);
  head_.init(params_, "head", w.head, rng);
}

Var GraspNet::theta_graph(Tape& t, const std::vector<Var>& vars,
                          const geometry::ObjectCloud& cloud,
                          const ContactMap& c) const {
  const Var x4 = t.constant(cloud_xyzc(cloud, c));
  const Var g = autodiff::max_pool_over_points(t, encoder_.apply(t, vars, x4));
  const Var theta_row = head_.apply(t, vars, g);  // [1,51]
  return autodiff::reshape(t, theta_row, {hand::kPoseDim});
}

GraspPrediction GraspNet::predict(const geometry::ObjectCloud& cloud,
                                  const ContactMap& c) const {
  Tape t;
  const auto vars = params_.leaf_all(t, false);
  const Var theta = theta_graph(t, vars, cloud, c);
  GraspPrediction out;
  out.pose = hand::HandPose::from_theta(t.val(theta).v);
  out.mesh = hand::forward(hand::default_model(), out.pose);
  out.source_contact = c;
  return out;
}

TrainStats GraspNet::train_epoch(
    const std::vector<const data::GraspSample*>& samples,
    const ContactCVAE* cvae, double lr, std::uint64_t seed, int batch_size) {
  if (samples.empty()) throw std::runtime_error("train_epoch: empty dataset");
  if (batch_size < 1) throw std::runtime_error("train_epoch: bad batch size");
  geometry::Rng rng(seed ^ 0x6eb7ull);
  const auto& model = hand::default_model();
  TrainStats stats;

  for (std::size_t start = 0; start < samples.size();
       start += std::size_t(batch_size)) {
    const std::size_t end =
        std::min(samples.size(), start + std::size_t(batch_size));
    std::vector<Tensor> grads;
    grads.reserve(params_.tensors.size());
    for (const auto& p : params_.tensors) grads.push_back(Tensor::zeros(p.shape));

    for (std::size_t i = start; i < end; ++i) {
      const data::GraspSample& s = *samples[i];
      if (!s.gt_pose) throw std::runtime_error("train_epoch: sample lacks pose");
      // 50/50 GT vs CVAE-reconstructed contact conditioning.
      ContactMap c_in = s.gt_contact;
      if (cvae && i % 2 == 1)
        c_in = cvae->reconstruct(s.cloud, s.gt_contact, rng.next());

      const auto gt_mesh = hand::forward(model, *s.gt_pose);

      Tape t;
      const auto vars = params_.leaf_all(t, true);
      const Var theta = theta_graph(t, vars, s.cloud, c_in);
      const Var verts = hand::forward_ad(t, model, theta);
      const Var l_v = losses::vertex_loss_ad(t, verts, gt_mesh.vertices);
      const Var l_cd = losses::chamfer_loss_ad(t, verts, s.cloud);
      const Var l_ptr = losses::penetration_loss_ad(t, verts, s.object_mesh);
      const Var l_t = losses::translation_loss_ad(t, theta, *s.gt_pose);
      const Var l_p = losses::geodesic_pose_loss_ad(t, theta, *s.gt_pose);
      const Var l_cst = losses::consistency_loss_ad(t, c_in, verts, s.cloud);
      const Var loss = losses::grasp_loss_ad(t, l_v, l_cd, l_ptr, l_t, l_p, l_cst);
      t.backward(loss);
      for (std::size_t p = 0; p < vars.size(); ++p) {
        const auto& g = t.grad(vars[p]).v;
        for (std::size_t k = 0; k < g.size(); ++k) grads[p].v[k] += g[k];
      }
      stats.loss += t.val(loss).v[0];
      ++stats.samples;
    }

    const double scale = 1.0 / double(end - start);
    for (auto& g : grads)
      for (auto& x : g.v) x *= scale;
    autodiff::adam_step(params_.tensors, grads, params_.adam, lr);
  }

  stats.loss /= stats.samples;
  return stats;
}

void GraspNet::save(const std::string& path) const {
  nlohmann::json manifest;
  manifest["model_type"] = "graspnet";
  manifest["widths"] = {{"encoder", widths_.encoder}, {"head", widths_.head}};
  manifest["names"] = params_.names;
  auto& shapes = manifest["shapes"];
  for (const auto& p : params_.tensors) shapes.push_back(p.shape);
  autodiff::Checkpoint ck;
  ck.model_type = "graspnet";
  ck.manifest_json = manifest.dump();
  ck.names = params_.names;
  ck.tensors = params_.tensors;
  autodiff::save_checkpoint(ck, path);
}

GraspNet GraspNet::load(const std::string& path) {
  const auto ck = autodiff::load_checkpoint(path);
  if (ck.model_type != "graspnet")
    throw std::runtime_error("checkpoint is not a graspnet model");
  const auto manifest = nlohmann::json::parse(ck.manifest_json);
  GraspWidths w;
  w.encoder = manifest["widths"]["encoder"].get<std::vector<int>>();
  w.head = manifest["widths"]["head"].get<std::vector<int>>();
  GraspNet model(w, 0);
  if (ck.names != model.params_.names)
    throw std::runtime_error("checkpoint parameter names mismatch");
  model.params_.tensors = ck.tensors;
  return model;
}

}  // namespace c2g::nets
