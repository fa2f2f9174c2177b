#include <numeric>
#include <stdexcept>

#include "c2g/autodiff.hpp"

namespace c2g::autodiff {

Tensor::Tensor(std::vector<int> s, std::vector<double> vals)
    : shape(std::move(s)), v(std::move(vals)) {
  std::size_t n = 1;
  for (int d : shape) n *= std::size_t(d);
  if (n != v.size())
    throw std::runtime_error("Tensor: values length does not match shape");
}

Tensor Tensor::zeros(std::vector<int> s) {
  std::size_t n = 1;
  for (int d : s) n *= std::size_t(d);
  return Tensor(std::move(s), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(std::vector<int> s, double value) {
  std::size_t n = 1;
  for (int d : s) n *= std::size_t(d);
  return Tensor(std::move(s), std::vector<double>(n, value));
}

}  // namespace c2g::autodiff
