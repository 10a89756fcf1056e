#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rshift/dataset.hpp"
#include "rshift/geometry.hpp"
#include "rshift/kernels.hpp"
#include "rshift/optimize.hpp"

namespace rshift::regress {

enum class FitterKind { lm, gls, nw, gam_l, gam_nl };

/// Fitter used for the nuisance-on-interest regressions g_j.
enum class GFitter { linear, nw, spline };

std::string_view to_string(FitterKind k);
std::string_view to_string(GFitter g);
FitterKind parse_fitter(std::string_view name);
GFitter parse_g_fitter(std::string_view name);

/// LM/GLS fitters pair with a linear g, all others with 1-D Nadaraya-Watson.
GFitter default_g_fitter(FitterKind f);

/// Regression problem: response on the given covariate columns at the given sites.
struct FitData {
  std::span<const geom::Point> locations;
  geom::Window window = geom::Window::unit();
  Eigen::MatrixXd covariates;  // n x d, d may be 0
  Eigen::VectorXd response;

  [[nodiscard]] Eigen::Index n() const { return response.size(); }
  [[nodiscard]] Eigen::Index d() const { return covariates.cols(); }
};

struct Hyperparameters {
  Eigen::VectorXd bandwidths;  // NW, one per covariate
  Eigen::VectorXd lambdas;     // GAM, one per smooth term (covariate smooths first, spatial last)
  Eigen::VectorXd beta;        // LM/GLS coefficients, intercept first
  double sigma2 = 0.0, range = 0.0, nugget = 0.0;  // LM/GLS covariance parameters
  double gcv = 0.0;
};

/// Fitted mean trend. residuals = response - fitted_values.
class FittedModel {
 public:
  using Predictor = std::function<Eigen::VectorXd(const Eigen::MatrixXd&, std::span<const geom::Point>)>;

  FittedModel(FitterKind kind, Eigen::VectorXd response, Eigen::VectorXd fitted, Hyperparameters hyper,
              Predictor predictor);

  [[nodiscard]] FitterKind kind() const { return kind_; }
  [[nodiscard]] const Eigen::VectorXd& fitted_values() const { return fitted_; }
  [[nodiscard]] const Eigen::VectorXd& residuals() const { return residuals_; }
  [[nodiscard]] const Hyperparameters& hyperparameters() const { return hyper_; }

  /// Mean trend at new covariate rows / locations.
  [[nodiscard]] Eigen::VectorXd predict(const Eigen::MatrixXd& covariates,
                                        std::span<const geom::Point> locations) const;

 private:
  FitterKind kind_;
  Eigen::VectorXd fitted_;
  Eigen::VectorXd residuals_;
  Hyperparameters hyper_;
  Predictor predictor_;
};

// --- parametric linear model --------------------------------------------

struct LmOptions {
  fields::KernelFamily family = fields::KernelFamily::squared_exponential;
  double matern_smoothness = 2.5;
  std::size_t restarts = 3;
  opt::NelderMeadOptions nelder_mead{};
};

struct ClassicalTestReport {
  Eigen::VectorXd beta;
  Eigen::VectorXd std_errors;
  Eigen::VectorXd t_stats;
  Eigen::VectorXd p_values;
  double sigma2 = 0.0, range = 0.0, nugget = 0.0;
  double dof = 0.0;
  bool ols_fallback = false;  // GLS only: variogram fit failed
};

struct LmFit {
  FittedModel model;
  ClassicalTestReport report;
  double log_likelihood = 0.0;
  double start_log_likelihood = 0.0;
};

/// Gaussian ML fit of y = X beta + eps, eps ~ GP(kernel family). Covariance
/// parameters by Nelder-Mead over log (sigma2, range, nugget); beta by GLS.
LmFit fit_lm_ml(const FitData& data, const LmOptions& options = {});

/// Profile log-likelihood at log (sigma2, range, nugget); -inf when Sigma is not PD.
double lm_profile_loglik(const FitData& data, const Eigen::VectorXd& log_params, const LmOptions& options = {});

struct EmpiricalVariogram {
  std::vector<double> edges;   // bins+1 edges over [0, max_lag]
  std::vector<double> mean_lag;
  std::vector<double> gamma;
  std::vector<std::size_t> counts;
};

/// Matheron estimator over equal-width bins on (0, max_lag].
EmpiricalVariogram empirical_semivariogram(std::span<const geom::Point> locations, std::span<const double> values,
                                           double max_lag, std::size_t bins = 12);

struct GlsFit {
  FittedModel model;
  ClassicalTestReport report;
  EmpiricalVariogram variogram;
};

/// OLS residuals -> semivariogram -> WLS variogram fit -> one GLS solve.
GlsFit fit_gls_variogram(const FitData& data, const LmOptions& options = {});

// --- nonparametric fitters ------------------------------------------------

struct NwOptions {
  std::optional<std::vector<double>> bandwidths;  // fixed; skips cross-validation
  double min_factor = 0.05;
  double max_factor = 3.0;
  int cycles = 2;
};

/// Second-order Epanechnikov kernel 3(1 - u^2/5)/(4 sqrt 5) on u^2 < 5.
double epanechnikov2(double u);

/// Product-kernel Nadaraya-Watson with per-covariate bandwidths picked by
/// leave-one-out least-squares cross-validation.
FittedModel fit_nw(const FitData& data, const NwOptions& options = {});

/// Leave-one-out CV score for fixed bandwidths.
double nw_loo_cv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& bandwidths);

enum class GamMean { linear, nonlinear };

struct GamOptions {
  std::vector<double> lambda_grid = default_lambda_grid();

  static std::vector<double> default_lambda_grid();
};

/// Thin-plate radial basis: eta_{2,2}(r) = r^2 log(r) / (8 pi), eta(0) = 0.
double thin_plate_eta2(double r);
/// Leading constant of eta_{m,d} for even d.
double thin_plate_constant_even(int m, int d);
/// 1-D radial basis, normalised to r^3.
double thin_plate_eta1(double r);

/// y = 1 + (linear covariates | 1-D smooths) + psi(s); full-rank thin-plate
/// bases, smoothing parameters chosen by GCV on `lambda_grid`.
FittedModel fit_gam(const FitData& data, GamMean mean, const GamOptions& options = {});

/// Fit with a single fixed lambda per smooth (no GCV).
FittedModel fit_gam_fixed(const FitData& data, GamMean mean, const std::vector<double>& lambdas);

/// 1-D penalised cubic thin-plate regression of y on x (GCV).
FittedModel fit_spline_1d(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const GamOptions& options = {});

struct FitOptions {
  LmOptions lm{};
  NwOptions nw{};
  GamOptions gam{};
};

FittedModel fit_model(FitterKind kind, const FitData& data, const FitOptions& options = {});

// --- nuisance reconstruction and residuals ----------------------------------

struct ThetaReconstruction {
  double theta = 1.0;
  GFitter g_fitter = GFitter::nw;
  Eigen::MatrixXd g_fitted;       // g_j(x_interest), n x d
  Eigen::MatrixXd delta;          // x_j - g_j(x_interest)
  Eigen::MatrixXd reconstructed;  // theta * g_j + delta
  std::vector<bool> collinear;    // x_j is an exact affine function of x_interest
};

/// x~_j = theta g_j(x_interest) + delta_j, evaluated as x_j - (1 - theta) g_j so that
/// theta = 1 returns x_j and theta = 0 returns delta_j exactly.
ThetaReconstruction reconstruct_nuisance(const Eigen::MatrixXd& nuisance, const Eigen::VectorXd& interest,
                                         double theta, GFitter g_fitter, const FitOptions& options = {});

/// Response on the (reconstructed) nuisance covariates only. With no nuisance
/// columns LM/GLS/NW reduce to y - mean(y); GAM kinds keep the spatial smooth.
FittedModel residualize(FitterKind kind, const FitData& nuisance_data, const FitOptions& options = {});

/// Classical ML t-test of `interest` with all other listed covariates in the model.
ClassicalTestReport classical_test(const SpatialDataset& data, const std::vector<std::string>& covariates,
                                   const LmOptions& options = {});

}  // namespace rshift::regress
