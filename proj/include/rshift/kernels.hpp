#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <string_view>

#include "rshift/geometry.hpp"

namespace rshift::fields {

enum class KernelFamily { squared_exponential, exponential, matern, stable, generalized_cauchy };

std::string_view to_string(KernelFamily family);
KernelFamily parse_kernel_family(std::string_view name);

/// Stationary isotropic covariance C(h) = variance * rho(h / range) + nugget * 1{h == 0}.
///
/// Families (r = h / range):
///   squared_exponential  exp(-r^2)
///   exponential          exp(-r)
///   matern               2^(1-nu)/Gamma(nu) (sqrt(2 nu) r)^nu K_nu(sqrt(2 nu) r)
///   stable               exp(-r^shape)
///   generalized_cauchy   (1 + r^alpha)^(-beta/alpha)
struct CovarianceKernel {
  KernelFamily family = KernelFamily::squared_exponential;
  double variance = 1.0;
  double range = 1.0;
  double nugget = 0.0;
  double smoothness = 0.5;  // matern nu
  double shape = 1.0;       // stable exponent
  double alpha = 2.0;       // generalized cauchy
  double beta = 1.0;

  static CovarianceKernel squared_exponential(double variance, double range, double nugget = 0.0);
  static CovarianceKernel exponential(double variance, double range, double nugget = 0.0);
  static CovarianceKernel matern(double variance, double range, double smoothness, double nugget = 0.0);
  static CovarianceKernel stable(double variance, double range, double shape, double nugget = 0.0);
  static CovarianceKernel generalized_cauchy(double variance, double range, double alpha, double beta,
                                             double nugget = 0.0);

  /// Throws InvalidParameter on nonpositive variance/range or bad shape parameters.
  void validate() const;

  /// Correlation part rho(h), without variance or nugget.
  [[nodiscard]] double correlation(double lag) const;
};

/// C(lag); nugget contributes only at lag exactly 0.
double kernel_eval(const CovarianceKernel& kernel, double lag);

/// Matern correlation at scaled distance r for smoothness nu (sqrt(2 nu) scaling).
double matern_correlation(double r, double nu);

/// Pairwise Euclidean distances.
Eigen::MatrixXd distance_matrix(std::span<const geom::Point> points);

/// n x n covariance matrix of the kernel at the given points.
Eigen::MatrixXd covariance_matrix(std::span<const geom::Point> points, const CovarianceKernel& kernel);
Eigen::MatrixXd covariance_matrix(const Eigen::MatrixXd& distances, const CovarianceKernel& kernel);

}  // namespace rshift::fields
