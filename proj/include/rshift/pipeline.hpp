#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rshift/dataset.hpp"
#include "rshift/regression.hpp"
#include "rshift/shift_engine.hpp"

namespace rshift {

/// Everything needed to test one covariate of interest.
struct TestConfig {
  regress::FitterKind fitter = regress::FitterKind::gam_l;
  double theta = 1.0;
  std::optional<regress::GFitter> g_fitter;  // default_g_fitter(fitter) when unset
  regress::FitOptions fit{};
  shift::ShiftPlan plan{};

  [[nodiscard]] regress::GFitter effective_g_fitter() const {
    return g_fitter.value_or(regress::default_g_fitter(fitter));
  }
};

/// Residual field e(s) for one interest/nuisance split.
struct ResidualField {
  Eigen::VectorXd residuals;
  regress::Hyperparameters hyper;
  std::vector<std::string> collinear_nuisance;  // nuisance columns that are affine in the interest column
  std::vector<std::string> redundant_nuisance;  // affine in earlier nuisance columns; left out of the fit
  double max_reconstruction_change = 0.0;      // sup |x~ - x| over nuisance columns
};

ResidualField compute_residuals(const SpatialDataset& data, const std::string& interest,
                                const std::vector<std::string>& nuisance, const TestConfig& config);

struct CovariateTest {
  std::string interest;
  std::vector<std::string> nuisance;
  regress::GFitter g_fitter = regress::GFitter::nw;
  shift::ShiftTestResult result;
  regress::Hyperparameters hyper;
  bool degenerate = false;  // DegenerateAux: p forced to 1
  std::string degenerate_reason;

  [[nodiscard]] double p_value() const { return result.p_value; }
};

/// Shift test of `interest` against residuals already computed for it.
CovariateTest test_with_residuals(const SpatialDataset& data, const std::string& interest,
                                  const std::vector<std::string>& nuisance, const ResidualField& field,
                                  const TestConfig& config);

/// reconstruct nuisance -> residualize -> shift test.
CovariateTest test_covariate(const SpatialDataset& data, const std::string& interest,
                             const std::vector<std::string>& nuisance, const TestConfig& config);

}  // namespace rshift
