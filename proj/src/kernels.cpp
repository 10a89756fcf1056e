#include "rshift/kernels.hpp"

#include <cmath>

#include "rshift/error.hpp"

namespace rshift::fields {

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::squared_exponential: return "squared_exponential";
    case KernelFamily::exponential: return "exponential";
    case KernelFamily::matern: return "matern";
    case KernelFamily::stable: return "stable";
    case KernelFamily::generalized_cauchy: return "generalized_cauchy";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "squared_exponential" || name == "se" || name == "gaussian") return KernelFamily::squared_exponential;
  if (name == "exponential" || name == "exp") return KernelFamily::exponential;
  if (name == "matern") return KernelFamily::matern;
  if (name == "stable") return KernelFamily::stable;
  if (name == "generalized_cauchy" || name == "gencauchy") return KernelFamily::generalized_cauchy;
  throw Error(ErrorCode::InvalidParameter, "unknown kernel family '" + std::string(name) + "'");
}

CovarianceKernel CovarianceKernel::squared_exponential(double variance, double range, double nugget) {
  CovarianceKernel k;
  k.family = KernelFamily::squared_exponential;
  k.variance = variance;
  k.range = range;
  k.nugget = nugget;
  return k;
}

CovarianceKernel CovarianceKernel::exponential(double variance, double range, double nugget) {
  CovarianceKernel k = squared_exponential(variance, range, nugget);
  k.family = KernelFamily::exponential;
  return k;
}

CovarianceKernel CovarianceKernel::matern(double variance, double range, double smoothness, double nugget) {
  CovarianceKernel k = squared_exponential(variance, range, nugget);
  k.family = KernelFamily::matern;
  k.smoothness = smoothness;
  return k;
}

CovarianceKernel CovarianceKernel::stable(double variance, double range, double shape, double nugget) {
  CovarianceKernel k = squared_exponential(variance, range, nugget);
  k.family = KernelFamily::stable;
  k.shape = shape;
  return k;
}

CovarianceKernel CovarianceKernel::generalized_cauchy(double variance, double range, double alpha, double beta,
                                                      double nugget) {
  CovarianceKernel k = squared_exponential(variance, range, nugget);
  k.family = KernelFamily::generalized_cauchy;
  k.alpha = alpha;
  k.beta = beta;
  return k;
}

void CovarianceKernel::validate() const {
  if (!(variance > 0.0) || !std::isfinite(variance)) throw Error(ErrorCode::InvalidParameter, "kernel variance must be > 0");
  if (!(range > 0.0) || !std::isfinite(range)) throw Error(ErrorCode::InvalidParameter, "kernel range must be > 0");
  if (!(nugget >= 0.0)) throw Error(ErrorCode::InvalidParameter, "kernel nugget must be >= 0");
  switch (family) {
    case KernelFamily::matern:
      if (!(smoothness > 0.0)) throw Error(ErrorCode::InvalidParameter, "matern smoothness must be > 0");
      break;
    case KernelFamily::stable:
      if (!(shape > 0.0 && shape <= 2.0)) throw Error(ErrorCode::InvalidParameter, "stable shape must be in (0, 2]");
      break;
    case KernelFamily::generalized_cauchy:
      if (!(alpha > 0.0 && alpha <= 2.0) || !(beta > 0.0))
        throw Error(ErrorCode::InvalidParameter, "generalized cauchy needs alpha in (0, 2] and beta > 0");
      break;
    default:
      break;
  }
}

double matern_correlation(double r, double nu) {
  if (r <= 0.0) return 1.0;
  if (nu == 0.5) return std::exp(-r);
  const double u = std::sqrt(2.0 * nu) * r;
  if (nu == 1.5) return (1.0 + u) * std::exp(-u);
  if (nu == 2.5) return (1.0 + u + u * u / 3.0) * std::exp(-u);
  if (u > 700.0) return 0.0;
  const double log_scale = (1.0 - nu) * std::log(2.0) - std::lgamma(nu) + nu * std::log(u);
  return std::exp(log_scale) * std::cyl_bessel_k(nu, u);
}

double CovarianceKernel::correlation(double lag) const {
  const double r = lag / range;
  switch (family) {
    case KernelFamily::squared_exponential: return std::exp(-r * r);
    case KernelFamily::exponential: return std::exp(-r);
    case KernelFamily::matern: return matern_correlation(r, smoothness);
    case KernelFamily::stable: return std::exp(-std::pow(r, shape));
    case KernelFamily::generalized_cauchy: return std::pow(1.0 + std::pow(r, alpha), -beta / alpha);
  }
  return 0.0;
}

double kernel_eval(const CovarianceKernel& kernel, double lag) {
  kernel.validate();
  if (!(lag >= 0.0)) throw Error(ErrorCode::InvalidParameter, "lag must be >= 0");
  const double c = kernel.variance * kernel.correlation(lag);
  return lag == 0.0 ? c + kernel.nugget : c;
}

Eigen::MatrixXd distance_matrix(std::span<const geom::Point> points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = std::hypot(points[static_cast<std::size_t>(i)].x - points[static_cast<std::size_t>(j)].x,
                                  points[static_cast<std::size_t>(i)].y - points[static_cast<std::size_t>(j)].y);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

Eigen::MatrixXd covariance_matrix(const Eigen::MatrixXd& distances, const CovarianceKernel& kernel) {
  kernel.validate();
  const Eigen::Index n = distances.rows();
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double h = distances(i, j);
      double v = kernel.variance * kernel.correlation(h);
      if (h == 0.0) v += kernel.nugget;
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

Eigen::MatrixXd covariance_matrix(std::span<const geom::Point> points, const CovarianceKernel& kernel) {
  return covariance_matrix(distance_matrix(points), kernel);
}

}  // namespace rshift::fields
