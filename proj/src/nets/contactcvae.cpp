#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "c2g/nets.hpp"

namespace c2g::nets {

using losses::ContactMap;

namespace {

// Octave k contributes sin/cos at wavelength 0.25 m / 2^k per axis; the
// extra features let the per-point MLPs fit sharp contact regions far
// faster than raw coordinates (a desk-scale positional encoding).
void append_fourier(std::vector<double>* v, const geometry::Vec3& p,
                    int octaves) {
  for (int k = 0; k < octaves; ++k) {
    const double w = 2.0 * M_PI * 4.0 * double(1 << k);
    for (const double x : {p.x, p.y, p.z}) {
      v->push_back(std::sin(w * x));
      v->push_back(std::cos(w * x));
    }
  }
}

Tensor cloud_xyz(const geometry::ObjectCloud& cloud, int octaves) {
  const int n = int(cloud.size());
  std::vector<double> v;
  v.reserve(std::size_t(n) * (3 + 6 * std::size_t(octaves)));
  for (int i = 0; i < n; ++i) {
    v.push_back(cloud.points[i].x);
    v.push_back(cloud.points[i].y);
    v.push_back(cloud.points[i].z);
    append_fourier(&v, cloud.points[i], octaves);
  }
  return Tensor({n, 3 + 6 * octaves}, std::move(v));
}

Tensor cloud_xyzc(const geometry::ObjectCloud& cloud, const ContactMap& c,
                  int octaves) {
  if (cloud.size() != c.size())
    throw std::runtime_error("contact map and cloud size mismatch");
  const int n = int(cloud.size());
  std::vector<double> v;
  v.reserve(std::size_t(n) * (4 + 6 * std::size_t(octaves)));
  for (int i = 0; i < n; ++i) {
    v.push_back(cloud.points[i].x);
    v.push_back(cloud.points[i].y);
    v.push_back(cloud.points[i].z);
    append_fourier(&v, cloud.points[i], octaves);
    v.push_back(c.scores[i]);
  }
  return Tensor({n, 4 + 6 * octaves}, std::move(v));
}

Mlp::Layer make_head(Params& p, const std::string& name, int fan_in, int out,
                     geometry::Rng& rng) {
  const double bound = std::sqrt(6.0 / fan_in);
  Tensor w({fan_in, out}, std::vector<double>(std::size_t(fan_in) * out));
  for (auto& x : w.v) x = rng.uniform(-bound, bound);
  Mlp::Layer layer;
  layer.w = p.add(name + ".w", std::move(w));
  layer.b = p.add(name + ".b", Tensor({1, out}, std::vector<double>(out, 0.0)));
  return layer;
}

Var apply_head(Tape& t, const std::vector<Var>& vars, const Mlp::Layer& head,
               Var x) {
  return autodiff::add(t, autodiff::matmul(t, x, vars[head.w]),
                       vars[head.b]);
}

}  // namespace

CvaeWidths CvaeWidths::toy() {
  CvaeWidths w;
  w.local = {3, 32, 32};
  w.global_tail = {32, 64, 128};
  w.posterior = {4, 32, 64, 128};
  w.decoder_hidden = {64, 32};
  w.latent = 16;
  return w;
}

ContactCVAE::ContactCVAE(const CvaeWidths& w, std::uint64_t seed) : widths_(w) {
  widths_.local[0] = 3 + 6 * widths_.fourier;
  widths_.posterior[0] = 4 + 6 * widths_.fourier;
  geometry::Rng rng(seed ^ 0xc7aeull);
  local_.init(params_, "local", widths_.local, rng);
  global_tail_.init(params_, "global_tail", widths_.global_tail, rng);
  posterior_.init(params_, "posterior", widths_.posterior, rng);
  mu_head_ =
      make_head(params_, "mu_head", widths_.posterior.back(), widths_.latent, rng);
  lv_head_ =
      make_head(params_, "lv_head", widths_.posterior.back(), widths_.latent, rng);
  std::vector<int> dec = {widths_.latent + widths_.f_lg_width()};
  dec.insert(dec.end(), widths_.decoder_hidden.begin(), widths_.decoder_hidden.end());
  dec.push_back(1);
  decoder_.init(params_, "decoder", dec, rng);
}

Var ContactCVAE::local_graph(Tape& t, const std::vector<Var>& vars,
                             Var xyz) const {
  return local_.apply(t, vars, xyz);
}

Var ContactCVAE::decode_graph(Tape& t, const std::vector<Var>& vars, Var xyz,
                              Var z_row, int n) const {
  const Var f_local = local_graph(t, vars, xyz);
  const Var g = autodiff::max_pool_over_points(
      t, global_tail_.apply(t, vars, f_local));
  const Var f_lg = autodiff::concat_cols(t, f_local,
                                         autodiff::broadcast_rows(t, g, n));
  const Var dec_in =
      autodiff::concat_cols(t, autodiff::broadcast_rows(t, z_row, n), f_lg);
  return autodiff::sigmoid(t, decoder_.apply(t, vars, dec_in));
}

ConditionFeatures ContactCVAE::condition_encode(
    const geometry::ObjectCloud& cloud) const {
  Tape t;
  const auto vars = params_.leaf_all(t, false);
  const Var xyz = t.constant(cloud_xyz(cloud, widths_.fourier));
  const Var f_local = local_graph(t, vars, xyz);
  const Var g = autodiff::max_pool_over_points(
      t, global_tail_.apply(t, vars, f_local));
  ConditionFeatures f;
  f.f_local = t.val(f_local);
  f.f_global_row = t.val(g);
  f.n = int(cloud.size());
  return f;
}

LatentCode ContactCVAE::posterior_encode(const geometry::ObjectCloud& cloud,
                                         const ContactMap& c,
                                         std::uint64_t seed) const {
  Tape t;
  const auto vars = params_.leaf_all(t, false);
  const Var x4 = t.constant(cloud_xyzc(cloud, c, widths_.fourier));
  const Var h = autodiff::max_pool_over_points(t, posterior_.apply(t, vars, x4));
  const Var mu = apply_head(t, vars, mu_head_, h);
  const Var lv = apply_head(t, vars, lv_head_, h);
  LatentCode code;
  code.mu = t.val(mu).v;
  code.log_var = t.val(lv).v;
  geometry::Rng rng(seed ^ 0x9e75ull);
  code.z.resize(code.mu.size());
  for (std::size_t d = 0; d < code.z.size(); ++d)
    code.z[d] = code.mu[d] + std::exp(0.5 * code.log_var[d]) * rng.normal();
  return code;
}

ContactMap ContactCVAE::decode(const geometry::ObjectCloud& cloud,
                               const std::vector<double>& z) const {
  if (int(z.size()) != widths_.latent)
    throw std::runtime_error("latent size mismatch");
  Tape t;
  const auto vars = params_.leaf_all(t, false);
  const Var xyz = t.constant(cloud_xyz(cloud, widths_.fourier));
  const Var z_row = t.constant(Tensor({1, widths_.latent}, z));
  const Var pred = decode_graph(t, vars, xyz, z_row, int(cloud.size()));
  return ContactMap{t.val(pred).v};
}

ContactMap ContactCVAE::reconstruct(const geometry::ObjectCloud& cloud,
                                    const ContactMap& c,
                                    std::uint64_t seed) const {
  return decode(cloud, posterior_encode(cloud, c, seed).z);
}

ContactMap ContactCVAE::generate(const geometry::ObjectCloud& cloud,
                                 std::uint64_t seed) const {
  if (!trained_)
    throw std::runtime_error("generate requires a trained or loaded model");
  geometry::Rng rng(seed ^ 0x9e75ull);
  std::vector<double> z(widths_.latent);
  for (auto& x : z) x = rng.normal();
  return decode(cloud, z);
}

std::vector<ContactMap> ContactCVAE::interpolate(
    const geometry::ObjectCloud& cloud, const std::vector<double>& z_a,
    const std::vector<double>& z_b, int steps) const {
  if (steps < 2) throw std::runtime_error("interpolate: steps must be >= 2");
  std::vector<ContactMap> maps;
  maps.reserve(steps);
  for (int s = 0; s < steps; ++s) {
    const double u = double(s) / double(steps - 1);
    std::vector<double> z(z_a.size());
    for (std::size_t d = 0; d < z.size(); ++d)
      z[d] = (1 - u) * z_a[d] + u * z_b[d];
    maps.push_back(decode(cloud, z));
  }
  return maps;
}

TrainStats ContactCVAE::train_epoch(
    const std::vector<const data::GraspSample*>& samples, double lr,
    std::uint64_t seed, bool do_augment, int batch_size) {
  if (samples.empty()) throw std::runtime_error("train_epoch: empty dataset");
  if (batch_size < 1) throw std::runtime_error("train_epoch: bad batch size");
  geometry::Rng rng(seed ^ 0x7a41ull);
  TrainStats stats;

  for (std::size_t start = 0; start < samples.size();
       start += std::size_t(batch_size)) {
    const std::size_t end =
        std::min(samples.size(), start + std::size_t(batch_size));
    std::vector<Tensor> grads;
    grads.reserve(params_.tensors.size());
    for (const auto& p : params_.tensors) grads.push_back(Tensor::zeros(p.shape));

    for (std::size_t i = start; i < end; ++i) {
      data::GraspSample aug;
      const data::GraspSample* s = samples[i];
      if (do_augment) {
        aug = data::augment(*s, rng.next());
        s = &aug;
      }
      const int n = int(s->cloud.size());

      Tape t;
      const auto vars = params_.leaf_all(t, true);
      const Var x4 = t.constant(cloud_xyzc(s->cloud, s->gt_contact, widths_.fourier));
      const Var h =
          autodiff::max_pool_over_points(t, posterior_.apply(t, vars, x4));
      const Var mu = apply_head(t, vars, mu_head_, h);
      const Var lv = apply_head(t, vars, lv_head_, h);
      std::vector<double> eps(widths_.latent);
      for (auto& x : eps) x = rng.normal();
      const Var z = autodiff::add(
          t, mu,
          autodiff::mul(t, autodiff::exp_op(t, autodiff::smul(t, lv, 0.5)),
                        t.constant(Tensor({1, widths_.latent}, eps))));
      const Var xyz = t.constant(cloud_xyz(s->cloud, widths_.fourier));
      const Var pred = decode_graph(t, vars, xyz, z, n);
      const Var loss =
          losses::contact_loss_ad(t, pred, s->gt_contact, mu, lv);
      t.backward(loss);
      for (std::size_t p = 0; p < vars.size(); ++p) {
        const auto& g = t.grad(vars[p]).v;
        for (std::size_t k = 0; k < g.size(); ++k) grads[p].v[k] += g[k];
      }

      stats.loss += t.val(loss).v[0];
      const ContactMap pm{t.val(pred).v};
      stats.bce += losses::bce_loss(pm, s->gt_contact);
      stats.dice += losses::dice_loss(pm, s->gt_contact);
      stats.kl += losses::kl_loss(t.val(mu).v, t.val(lv).v);
      ++stats.samples;
    }

    const double scale = 1.0 / double(end - start);
    for (auto& g : grads)
      for (auto& x : g.v) x *= scale;
    autodiff::adam_step(params_.tensors, grads, params_.adam, lr);
  }

  stats.loss /= stats.samples;
  stats.bce /= stats.samples;
  stats.dice /= stats.samples;
  stats.kl /= stats.samples;
  trained_ = true;
  return stats;
}

void ContactCVAE::save(const std::string& path) const {
  nlohmann::json manifest;
  manifest["model_type"] = "contactcvae";
  manifest["widths"] = {{"local", widths_.local},
                        {"global_tail", widths_.global_tail},
                        {"posterior", widths_.posterior},
                        {"decoder_hidden", widths_.decoder_hidden},
                        {"latent", widths_.latent},
                        {"fourier", widths_.fourier}};
  manifest["names"] = params_.names;
  auto& shapes = manifest["shapes"];
  for (const auto& p : params_.tensors) shapes.push_back(p.shape);
  autodiff::Checkpoint ck;
  ck.model_type = "contactcvae";
  ck.manifest_json = manifest.dump();
  ck.names = params_.names;
  ck.tensors = params_.tensors;
  autodiff::save_checkpoint(ck, path);
}

ContactCVAE ContactCVAE::load(const std::string& path) {
  const auto ck = autodiff::load_checkpoint(path);
  if (ck.model_type != "contactcvae")
    throw std::runtime_error("checkpoint is not a contactcvae model");
  const auto manifest = nlohmann::json::parse(ck.manifest_json);
  CvaeWidths w;
  w.local = manifest["widths"]["local"].get<std::vector<int>>();
  w.global_tail = manifest["widths"]["global_tail"].get<std::vector<int>>();
  w.posterior = manifest["widths"]["posterior"].get<std::vector<int>>();
  w.decoder_hidden =
      manifest["widths"]["decoder_hidden"].get<std::vector<int>>();
  w.latent = manifest["widths"]["latent"].get<int>();
  w.fourier = manifest["widths"].value("fourier", 0);
  ContactCVAE model(w, 0);
  if (ck.names != model.params_.names)
    throw std::runtime_error("checkpoint parameter names mismatch");
  model.params_.tensors = ck.tensors;
  model.trained_ = true;
  return model;
}

}  // namespace c2g::nets
