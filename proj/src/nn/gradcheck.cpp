#include "nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace stylenet::nn {

double GradCheckReport::worst() const {
  double w = 0.0;
  for (const auto& e : entries) w = std::max(w, e.max_rel_err);
  return w;
}

bool GradCheckReport::all_under(double tolerance) const {
  return std::all_of(entries.begin(), entries.end(),
                     [&](const GradCheckEntry& e) { return e.max_rel_err < tolerance; });
}

GradCheckReport grad_check(const std::function<double()>& loss_fn,
                           const std::vector<std::pair<std::string, Tensor*>>& params,
                           const std::vector<const Tensor*>& analytic, double fd_step) {
  if (params.size() != analytic.size()) {
    throw InvalidArgument("grad_check: parameter/gradient count mismatch");
  }
  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k].second;
    const Tensor& a = *analytic[k];
    GradCheckEntry entry{params[k].first, 0.0};
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double original = p[i];
      p[i] = original + fd_step;
      const double up = loss_fn();
      p[i] = original - fd_step;
      const double down = loss_fn();
      p[i] = original;
      const double numeric = (up - down) / (2.0 * fd_step);
      const double denom = std::max({std::abs(a[i]), std::abs(numeric), 1e-8});
      entry.max_rel_err = std::max(entry.max_rel_err, std::abs(a[i] - numeric) / denom);
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace stylenet::nn
