#include <cmath>
#include <stdexcept>

#include "c2g/autodiff.hpp"

namespace c2g::autodiff {

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
               AdamState& state, double lr, double beta1, double beta2,
               double eps) {
  if (params.size() != grads.size())
    throw std::runtime_error("adam_step: param/grad count mismatch");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Tensor::zeros(p.shape));
      state.v.push_back(Tensor::zeros(p.shape));
    }
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, double(state.t));
  const double bc2 = 1.0 - std::pow(beta2, double(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].shape != grads[k].shape)
      throw std::runtime_error("adam_step: shape mismatch");
    auto& p = params[k].v;
    const auto& g = grads[k].v;
    auto& m = state.m[k].v;
    auto& v = state.v[k].v;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1 * m[i] + (1 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1 - beta2) * g[i] * g[i];
      const double mh = m[i] / bc1;
      const double vh = v[i] / bc2;
      p[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
  }
}

void adam_step_masked(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v,
                      std::int64_t& t, const std::vector<int>& indices,
                      double lr, double beta1, double beta2, double eps) {
  t += 1;
  const double bc1 = 1.0 - std::pow(beta1, double(t));
  const double bc2 = 1.0 - std::pow(beta2, double(t));
  for (int i : indices) {
    m.v[i] = beta1 * m.v[i] + (1 - beta1) * grad.v[i];
    v.v[i] = beta2 * v.v[i] + (1 - beta2) * grad.v[i] * grad.v[i];
    param.v[i] -= lr * (m.v[i] / bc1) / (std::sqrt(v.v[i] / bc2) + eps);
  }
}

}  // namespace c2g::autodiff
