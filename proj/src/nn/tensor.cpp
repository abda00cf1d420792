#include "nn/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace stylenet::nn {

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  Tensor t;
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  t.shape = std::move(shape);
  t.data.assign(n, 0.0);
  return t;
}

Tensor Tensor::row_vector(std::vector<double> values) {
  Tensor t;
  t.shape = {1, values.size()};
  t.data = std::move(values);
  return t;
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace stylenet::nn
