#include <stdexcept>

#include "c2g/autodiff.hpp"

namespace c2g::autodiff {

Var Tape::leaf(Tensor t, bool requires_grad) {
  Node n;
  n.grad = Tensor::zeros(t.shape);
  n.val = std::move(t);
  n.needs_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{int(nodes_.size()) - 1};
}

Var Tape::emit(Tensor value, bool needs_grad, std::function<void(Tape&)> back) {
  Node n;
  n.grad = Tensor::zeros(value.shape);
  n.val = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{int(nodes_.size()) - 1};
}

void Tape::backward(Var out) {
  if (!out.valid() || std::size_t(out.id) >= nodes_.size())
    throw std::runtime_error("backward: invalid output node");
  if (nodes_[out.id].val.size() != 1)
    throw std::runtime_error("backward: output is not scalar");
  for (auto& n : nodes_)
    for (auto& g : n.grad.v) g = 0.0;
  nodes_[out.id].grad.v[0] = 1.0;
  for (int i = out.id; i >= 0; --i)
    if (nodes_[i].needs_grad && nodes_[i].back) nodes_[i].back(*this);
}

}  // namespace c2g::autodiff
