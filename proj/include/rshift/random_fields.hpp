#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <string>
#include <string_view>

#include "rshift/dataset.hpp"
#include "rshift/geometry.hpp"
#include "rshift/kernels.hpp"
#include "rshift/rng.hpp"

namespace rshift::fields {

/// Lower Cholesky factor of `cov`. On failure retries with diagonal jitter
/// 1e-10, 1e-8 and 1e-6 times `scale`; throws NotPositiveDefinite after that.
/// `jitter_used` receives the jitter that succeeded (0 when none was needed).
Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& cov, double scale, double* jitter_used = nullptr);

/// mean + L z with L the Cholesky factor of the kernel matrix and z ~ N(0, I) from rng.
Eigen::VectorXd sample_gp(std::span<const geom::Point> points, const CovarianceKernel& kernel, double mean,
                          SeededStream& rng);
Eigen::VectorXd sample_gp(std::span<const geom::Point> points, const CovarianceKernel& kernel,
                          const Eigen::VectorXd& mean, SeededStream& rng);

/// Draw from N(mean, cov); `scale` sets the jitter magnitude.
Eigen::VectorXd sample_mvn(const Eigen::MatrixXd& cov, const Eigen::VectorXd& mean, double scale, SeededStream& rng);

/// Kernel-convolution nonstationary covariance with anisotropy matrices mixed
/// from four component centres.
struct NonstationaryKernelSpec {
  struct LocalParameters {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double eta = 0.0;  // rotation, radians in [0, pi/2]
  };

  std::array<geom::Point, 4> centers{{{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}}};
  std::array<double, 3> beta_lambda1{-1.3, 0.5, -0.6};
  std::array<double, 3> beta_lambda2{-1.4, -0.1, 0.2};
  std::array<double, 3> beta_eta{0.0, -0.15, 0.15};
  double smoothness = 0.5;  // matern smoothness of the base correlation g
  double variance = 1.0;

  /// (0.5 * |b1 - b2|)^2
  [[nodiscard]] double mixture_bandwidth() const;

  /// Log-linear eigenvalues and logistic rotation evaluated at s.
  [[nodiscard]] LocalParameters local_parameters(geom::Point s) const;

  /// R(eta) diag(lambda1, lambda2) R(eta)^T at component k.
  [[nodiscard]] Eigen::Matrix2d component_matrix(std::size_t k) const;

  /// Normalised mixture weights w_k(s).
  [[nodiscard]] std::array<double, 4> mixture_weights(geom::Point s) const;

  /// Sigma(s) = sum_k w_k(s) Sigma_k.
  [[nodiscard]] Eigen::Matrix2d anisotropy(geom::Point s) const;

  /// C(s_i, s_j) = variance * rho(s_i, s_j) * g(sqrt(Q(s_i, s_j))).
  [[nodiscard]] Eigen::MatrixXd covariance(std::span<const geom::Point> points) const;
};

enum class Scenario { SE1, SE4, E1, N, LN, NS };

std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view tag);

struct ScenarioOptions {
  double e1_variance = 4.0;
  NonstationaryKernelSpec ns{};
};

/// Kernel of the stationary Gaussian part of each scenario (SE1 for N and LN).
CovarianceKernel scenario_kernel(Scenario s, const ScenarioOptions& options = {});

/// Error field epsilon at the given points.
Eigen::VectorXd generate_scenario(Scenario s, std::span<const geom::Point> points, const geom::Window& window,
                                  SeededStream& rng, const ScenarioOptions& options = {});

/// Checkerboard cell (p, q), both in 1..4, of a point in a 4 x 4 partition of the window.
std::pair<int, int> checkerboard_cell(geom::Point s, const geom::Window& window);

enum class Design { single_nuisance, multi_independent, multi_dependent, multi_confounded };
enum class Trend { linear, nonlinear };

std::string_view to_string(Design d);
std::string_view to_string(Trend t);
Design parse_design(std::string_view name);
Trend parse_trend(std::string_view name);

struct DesignOptions {
  Scenario error = Scenario::SE1;
  ScenarioOptions scenario{};
  geom::Window window = geom::Window::unit();
  double dependence_scale = 1.0;  // x4 mean = dependence_scale * x1 (dependent designs)
  double effect = 0.0;            // single_nuisance: adds effect*x2 (linear) or effect*x2^2 (nonlinear)
};

/// Covariate kernels of the multi-covariate designs (x1..x4).
std::array<CovarianceKernel, 4> multi_design_kernels();

/// Simulated dataset: uniform locations, GP covariates, response per trend.
SpatialDataset generate_design(Design design, std::size_t n, Trend trend, SeededStream& rng,
                               const DesignOptions& options = {});

}  // namespace rshift::fields
