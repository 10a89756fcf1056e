#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rshift/dataset.hpp"
#include "rshift/pipeline.hpp"

namespace rshift {

struct SelectionRound {
  std::vector<std::string> active;
  std::vector<double> p_values;   // aligned with active
  std::vector<bool> degenerate;   // aligned with active
  std::optional<std::string> removed;
};

struct SelectionTrace {
  std::vector<SelectionRound> rounds;
  std::vector<std::string> final_set;
  double alpha = 0.05;
};

struct SelectionConfig {
  TestConfig test{};
  double alpha = 0.05;
  bool classical = false;  // ML t-test p-values instead of shift tests
  std::uint64_t seed = 0;
};

/// Backward elimination: each round tests every active covariate against the
/// others, removes the largest p-value if it exceeds alpha (earliest column on
/// ties) and stops once every p-value is <= alpha or nothing is left.
SelectionTrace backward_select(const SpatialDataset& data, const std::vector<std::string>& candidates,
                               const SelectionConfig& config);

}  // namespace rshift
