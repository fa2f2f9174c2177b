#include <cmath>
#include <stdexcept>

#include "c2g/nets.hpp"

namespace c2g::nets {

int Params::add(std::string name, Tensor t) {
  names.push_back(std::move(name));
  tensors.push_back(std::move(t));
  return int(tensors.size()) - 1;
}

std::vector<Var> Params::leaf_all(Tape& t, bool requires_grad) const {
  std::vector<Var> vars;
  vars.reserve(tensors.size());
  for (const auto& p : tensors) vars.push_back(t.leaf(p, requires_grad));
  return vars;
}

void Mlp::init(Params& p, const std::string& prefix, std::vector<int> w,
               geometry::Rng& rng) {
  if (w.size() < 2) throw std::runtime_error("Mlp: need at least one layer");
  widths = std::move(w);
  layers.clear();
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l], fan_out = widths[l + 1];
    // Kaiming-style uniform fan-in scaling.
    const double bound = std::sqrt(6.0 / fan_in);
    Tensor weight({fan_in, fan_out}, std::vector<double>(
                                         std::size_t(fan_in) * fan_out));
    for (auto& x : weight.v) x = rng.uniform(-bound, bound);
    Tensor bias({1, fan_out}, std::vector<double>(fan_out, 0.0));
    Layer layer;
    layer.w = p.add(prefix + ".w" + std::to_string(l), std::move(weight));
    layer.b = p.add(prefix + ".b" + std::to_string(l), std::move(bias));
    layers.push_back(layer);
  }
}

Var Mlp::apply(Tape& t, const std::vector<Var>& vars, Var x) const {
  const int n = t.val(x).rows();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    x = autodiff::add(t, autodiff::matmul(t, x, vars[layers[l].w]),
                      autodiff::broadcast_rows(t, vars[layers[l].b], n));
    if (l + 1 < layers.size()) x = autodiff::relu(t, x);
  }
  return x;
}

}  // namespace c2g::nets
