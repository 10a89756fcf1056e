#include "rshift/pipeline.hpp"

#include "rshift/error.hpp"

namespace rshift {
namespace {

// Greedy left-to-right selection of columns that are not affine in the ones already kept.
std::vector<Eigen::Index> independent_columns(const Eigen::MatrixXd& m) {
  std::vector<Eigen::Index> keep;
  const Eigen::Index n = m.rows();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    Eigen::MatrixXd basis(n, static_cast<Eigen::Index>(keep.size()) + 1);
    basis.col(0).setOnes();
    for (std::size_t k = 0; k < keep.size(); ++k) basis.col(static_cast<Eigen::Index>(k) + 1) = m.col(keep[k]);
    const Eigen::VectorXd col = m.col(j);
    const Eigen::VectorXd res = col - basis * basis.colPivHouseholderQr().solve(col);
    const double spread = (col.array() - col.mean()).matrix().norm();
    if (spread > 0.0 && res.norm() > 1e-10 * spread) keep.push_back(j);
  }
  return keep;
}

}  // namespace

ResidualField compute_residuals(const SpatialDataset& data, const std::string& interest,
                                const std::vector<std::string>& nuisance, const TestConfig& config) {
  data.validate();
  for (const auto& name : nuisance)
    if (name == interest) throw Error(ErrorCode::InvalidParameter, "interest column '" + name + "' listed as nuisance");
  const Eigen::VectorXd x = data.covariates.col(static_cast<Eigen::Index>(data.column_index(interest)));
  const Eigen::MatrixXd raw = data.columns(nuisance);
  const auto recon = regress::reconstruct_nuisance(raw, x, config.theta, config.effective_g_fitter(), config.fit);

  ResidualField field;
  for (std::size_t j = 0; j < nuisance.size(); ++j)
    if (recon.collinear[j]) field.collinear_nuisance.push_back(nuisance[j]);
  if (raw.size() > 0) field.max_reconstruction_change = (recon.reconstructed - raw).cwiseAbs().maxCoeff();

  const auto keep = independent_columns(recon.reconstructed);
  Eigen::MatrixXd used(recon.reconstructed.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) used.col(static_cast<Eigen::Index>(k)) = recon.reconstructed.col(keep[k]);
  for (std::size_t j = 0, k = 0; j < nuisance.size(); ++j) {
    if (k < keep.size() && keep[k] == static_cast<Eigen::Index>(j))
      ++k;
    else
      field.redundant_nuisance.push_back(nuisance[j]);
  }

  regress::FitData fd;
  fd.locations = data.locations;
  fd.window = data.window;
  fd.covariates = std::move(used);
  fd.response = data.response;
  const auto model = regress::residualize(config.fitter, fd, config.fit);
  field.residuals = model.residuals();
  field.hyper = model.hyperparameters();
  return field;
}

CovariateTest test_with_residuals(const SpatialDataset& data, const std::string& interest,
                                  const std::vector<std::string>& nuisance, const ResidualField& field,
                                  const TestConfig& config) {
  CovariateTest out;
  out.interest = interest;
  out.nuisance = nuisance;
  out.g_fitter = config.effective_g_fitter();
  out.hyper = field.hyper;
  out.result.tail = config.plan.tail.value_or(shift::default_tail(config.plan.statistic));
  if (!field.collinear_nuisance.empty()) {
    out.degenerate = true;
    out.degenerate_reason = "nuisance column '" + field.collinear_nuisance.front() + "' is affine in '" + interest +
                            "'; its reconstruction residual is identically zero";
    out.result.p_value = 1.0;
    out.result.degenerate = true;
    return out;
  }
  const Eigen::VectorXd x = data.covariates.col(static_cast<Eigen::Index>(data.column_index(interest)));
  std::span<const double> e(field.residuals.data(), static_cast<std::size_t>(field.residuals.size()));
  std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
  out.result = shift::run_shift_test(e, xs, data.locations, data.window, config.plan);
  if (out.result.degenerate) {
    out.degenerate = true;
    out.degenerate_reason = "observed statistic undefined (constant residuals or covariate)";
  }
  return out;
}

CovariateTest test_covariate(const SpatialDataset& data, const std::string& interest,
                             const std::vector<std::string>& nuisance, const TestConfig& config) {
  const ResidualField field = compute_residuals(data, interest, nuisance, config);
  return test_with_residuals(data, interest, nuisance, field, config);
}

}  // namespace rshift
