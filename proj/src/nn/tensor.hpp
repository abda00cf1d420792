#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace stylenet::nn {

// Dense row-major tensor of doubles. Rank is the shape length; most of the
// code uses rank 1 (biases) and rank 2 (T x D sequences, weight matrices).
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor row_vector(std::vector<double> values);

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }

  std::size_t rows() const {
    assert(shape.size() == 2);
    return shape[0];
  }
  std::size_t cols() const {
    assert(shape.size() == 2);
    return shape[1];
  }

  double& at(std::size_t r, std::size_t c) {
    assert(shape.size() == 2 && r < shape[0] && c < shape[1]);
    return data[r * shape[1] + c];
  }
  double at(std::size_t r, std::size_t c) const {
    assert(shape.size() == 2 && r < shape[0] && c < shape[1]);
    return data[r * shape[1] + c];
  }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  double* row(std::size_t r) { return data.data() + r * shape[1]; }
  const double* row(std::size_t r) const { return data.data() + r * shape[1]; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  void fill(double v);
  bool all_finite() const;
};

}  // namespace stylenet::nn
