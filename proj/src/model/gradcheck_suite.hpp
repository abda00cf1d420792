#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stylenet::model {

// Finite-difference verification of every backward pass: linear, LSTM,
// BiLSTM, dropout (off), MSE, and a composed desk-scale StyleNet with two
// genre branches. Each component is checked on `num_seeds` random instances
// and reported with its worst relative error.
struct GradCheckSuiteResult {
  struct Line {
    std::string name;
    double max_rel_err = 0.0;
  };
  std::vector<Line> lines;
  double tolerance = 1e-4;
  bool pass = false;

  std::string to_string() const;
};

GradCheckSuiteResult run_gradcheck_suite(std::uint64_t seed, double tolerance,
                                         std::size_t num_seeds = 20);

}  // namespace stylenet::model
