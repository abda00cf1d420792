#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nn/tensor.hpp"

namespace stylenet::nn {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;

  double worst() const;
  bool all_under(double tolerance) const;
};

// Central finite differences against precomputed analytic gradients.
// loss_fn must be a deterministic function of the referenced parameter
// tensors. Relative error is |a - n| / max(|a|, |n|, 1e-8).
GradCheckReport grad_check(const std::function<double()>& loss_fn,
                           const std::vector<std::pair<std::string, Tensor*>>& params,
                           const std::vector<const Tensor*>& analytic,
                           double fd_step = 1e-5);

}  // namespace stylenet::nn
