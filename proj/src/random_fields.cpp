#include "rshift/random_fields.hpp"

#include <cmath>
#include <numbers>

#include "rshift/error.hpp"

namespace rshift::fields {

Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& cov, double scale, double* jitter_used) {
  static constexpr double kJitter[] = {0.0, 1e-10, 1e-8, 1e-6};
  const Eigen::Index n = cov.rows();
  for (double j : kJitter) {
    Eigen::MatrixXd a = cov;
    if (j > 0.0) a.diagonal().array() += j * scale;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      if (jitter_used) *jitter_used = j * scale;
      return llt.matrixL();
    }
  }
  throw Error(ErrorCode::NotPositiveDefinite,
              "Cholesky failed after jitter 1e-6 on a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
}

Eigen::VectorXd sample_mvn(const Eigen::MatrixXd& cov, const Eigen::VectorXd& mean, double scale, SeededStream& rng) {
  const Eigen::MatrixXd L = cholesky_with_jitter(cov, scale);
  Eigen::VectorXd z(cov.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return mean + L * z;
}

Eigen::VectorXd sample_gp(std::span<const geom::Point> points, const CovarianceKernel& kernel,
                          const Eigen::VectorXd& mean, SeededStream& rng) {
  if (points.empty()) throw Error(ErrorCode::TooFewPoints, "sample_gp needs at least one point");
  if (mean.size() != static_cast<Eigen::Index>(points.size()))
    throw Error(ErrorCode::LengthMismatch, "mean length differs from point count");
  return sample_mvn(covariance_matrix(points, kernel), mean, kernel.variance, rng);
}

Eigen::VectorXd sample_gp(std::span<const geom::Point> points, const CovarianceKernel& kernel, double mean,
                          SeededStream& rng) {
  return sample_gp(points, kernel, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(points.size()), mean), rng);
}

// ---------------------------------------------------------------------------
// Nonstationary kernel convolution

double NonstationaryKernelSpec::mixture_bandwidth() const {
  const double d = std::hypot(centers[0].x - centers[1].x, centers[0].y - centers[1].y);
  return 0.25 * d * d;
}

NonstationaryKernelSpec::LocalParameters NonstationaryKernelSpec::local_parameters(geom::Point s) const {
  auto lin = [&](const std::array<double, 3>& b) { return b[0] + b[1] * s.x + b[2] * s.y; };
  LocalParameters p;
  p.lambda1 = std::exp(lin(beta_lambda1));
  p.lambda2 = std::exp(lin(beta_lambda2));
  p.eta = 0.5 * std::numbers::pi / (1.0 + std::exp(-lin(beta_eta)));
  return p;
}

Eigen::Matrix2d NonstationaryKernelSpec::component_matrix(std::size_t k) const {
  const auto p = local_parameters(centers.at(k));
  Eigen::Matrix2d rot;
  rot << std::cos(p.eta), -std::sin(p.eta), std::sin(p.eta), std::cos(p.eta);
  return rot * Eigen::Vector2d(p.lambda1, p.lambda2).asDiagonal() * rot.transpose();
}

std::array<double, 4> NonstationaryKernelSpec::mixture_weights(geom::Point s) const {
  const double lw = mixture_bandwidth();
  std::array<double, 4> w{};
  double total = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const double dx = s.x - centers[k].x, dy = s.y - centers[k].y;
    w[k] = std::exp(-(dx * dx + dy * dy) / (2.0 * lw));
    total += w[k];
  }
  for (auto& v : w) v /= total;
  return w;
}

Eigen::Matrix2d NonstationaryKernelSpec::anisotropy(geom::Point s) const {
  const auto w = mixture_weights(s);
  Eigen::Matrix2d out = Eigen::Matrix2d::Zero();
  for (std::size_t k = 0; k < 4; ++k) out += w[k] * component_matrix(k);
  return out;
}

Eigen::MatrixXd NonstationaryKernelSpec::covariance(std::span<const geom::Point> points) const {
  const auto n = static_cast<Eigen::Index>(points.size());
  std::vector<Eigen::Matrix2d> sigma(points.size());
  std::vector<double> det_quarter(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    sigma[i] = anisotropy(points[i]);
    det_quarter[i] = std::pow(sigma[i].determinant(), 0.25);
  }
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    c(j, j) = variance;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const auto si = static_cast<std::size_t>(i);
      const Eigen::Matrix2d avg = 0.5 * (sigma[si] + sigma[sj]);
      const Eigen::Vector2d h(points[si].x - points[sj].x, points[si].y - points[sj].y);
      const double q = h.dot(avg.inverse() * h);
      const double rho = det_quarter[si] * det_quarter[sj] / std::sqrt(avg.determinant());
      const double v = variance * rho * matern_correlation(std::sqrt(q), smoothness);
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Scenarios

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::SE1: return "SE1";
    case Scenario::SE4: return "SE4";
    case Scenario::E1: return "E1";
    case Scenario::N: return "N";
    case Scenario::LN: return "LN";
    case Scenario::NS: return "NS";
  }
  return "?";
}

Scenario parse_scenario(std::string_view tag) {
  if (tag == "SE1") return Scenario::SE1;
  if (tag == "SE4") return Scenario::SE4;
  if (tag == "E1") return Scenario::E1;
  if (tag == "N") return Scenario::N;
  if (tag == "LN") return Scenario::LN;
  if (tag == "NS") return Scenario::NS;
  throw Error(ErrorCode::InvalidScenario, "unknown scenario tag '" + std::string(tag) + "'");
}

CovarianceKernel scenario_kernel(Scenario s, const ScenarioOptions& options) {
  switch (s) {
    case Scenario::SE4: return CovarianceKernel::squared_exponential(4.0, 0.2, 1.0);
    case Scenario::E1: return CovarianceKernel::exponential(options.e1_variance, 0.2, 1.0);
    case Scenario::NS: return CovarianceKernel::matern(options.ns.variance, 1.0, options.ns.smoothness);
    default: return CovarianceKernel::squared_exponential(1.0, 0.2, 1.0);
  }
}

std::pair<int, int> checkerboard_cell(geom::Point s, const geom::Window& window) {
  auto cell = [](double v, double lo, double side) {
    const int c = static_cast<int>(std::floor(4.0 * (v - lo) / side));
    return std::clamp(c, 0, 3) + 1;
  };
  return {cell(s.x, window.x_min(), window.width()), cell(s.y, window.y_min(), window.height())};
}

Eigen::VectorXd generate_scenario(Scenario s, std::span<const geom::Point> points, const geom::Window& window,
                                  SeededStream& rng, const ScenarioOptions& options) {
  switch (s) {
    case Scenario::SE1:
    case Scenario::SE4:
    case Scenario::E1:
      return sample_gp(points, scenario_kernel(s, options), 0.0, rng);
    case Scenario::N: {
      Eigen::VectorXd eps = sample_gp(points, scenario_kernel(s, options), 0.0, rng);
      for (std::size_t i = 0; i < points.size(); ++i) {
        const auto [p, q] = checkerboard_cell(points[i], window);
        eps(static_cast<Eigen::Index>(i)) += ((p + q) % 2 == 0) ? 0.5 : -0.5;
      }
      return eps;
    }
    case Scenario::LN:
      return sample_gp(points, scenario_kernel(s, options), 0.0, rng).array().exp().matrix();
    case Scenario::NS: {
      const Eigen::MatrixXd cov = options.ns.covariance(points);
      return sample_mvn(cov, Eigen::VectorXd::Zero(cov.rows()), options.ns.variance, rng);
    }
  }
  throw Error(ErrorCode::InvalidScenario, "unhandled scenario");
}

// ---------------------------------------------------------------------------
// Designs

std::string_view to_string(Design d) {
  switch (d) {
    case Design::single_nuisance: return "single_nuisance";
    case Design::multi_independent: return "multi_independent";
    case Design::multi_dependent: return "multi_dependent";
    case Design::multi_confounded: return "multi_confounded";
  }
  return "?";
}

std::string_view to_string(Trend t) { return t == Trend::linear ? "linear" : "nonlinear"; }

Design parse_design(std::string_view name) {
  if (name == "single_nuisance") return Design::single_nuisance;
  if (name == "multi_independent") return Design::multi_independent;
  if (name == "multi_dependent") return Design::multi_dependent;
  if (name == "multi_confounded") return Design::multi_confounded;
  throw Error(ErrorCode::InvalidParameter, "unknown design '" + std::string(name) + "'");
}

Trend parse_trend(std::string_view name) {
  if (name == "linear") return Trend::linear;
  if (name == "nonlinear") return Trend::nonlinear;
  throw Error(ErrorCode::InvalidParameter, "unknown trend '" + std::string(name) + "'");
}

std::array<CovarianceKernel, 4> multi_design_kernels() {
  return {CovarianceKernel::exponential(1.0, 0.2), CovarianceKernel::stable(1.0, 0.1, 0.5),
          CovarianceKernel::matern(1.0, 0.1, 2.0), CovarianceKernel::generalized_cauchy(1.0, 0.1, 2.0, 5.0)};
}

SpatialDataset generate_design(Design design, std::size_t n, Trend trend, SeededStream& rng,
                               const DesignOptions& options) {
  if (n < 5) throw Error(ErrorCode::TooFewPoints, "designs need n >= 5");
  const auto& w = options.window;
  SpatialDataset data;
  data.window = w;
  data.locations.resize(n);
  for (auto& p : data.locations) {
    p.x = rng.uniform(w.x_min(), w.x_max());
    p.y = rng.uniform(w.y_min(), w.y_max());
  }
  const std::span<const geom::Point> pts(data.locations);
  const auto rows = static_cast<Eigen::Index>(n);

  Eigen::VectorXd eps;
  if (design == Design::single_nuisance) {
    const auto k = CovarianceKernel::exponential(1.0, 0.2);
    data.covariate_names = {"x1", "x2"};
    data.covariates.resize(rows, 2);
    data.covariates.col(0) = sample_gp(pts, k, 0.0, rng);
    data.covariates.col(1) = sample_gp(pts, k, 0.0, rng);
    eps = generate_scenario(options.error, pts, w, rng, options.scenario);
    const auto x1 = data.covariates.col(0).array();
    const auto x2 = data.covariates.col(1).array();
    if (trend == Trend::linear)
      data.response = (-0.5 + x1 + options.effect * x2).matrix() + eps;
    else
      data.response = (-0.5 + x1.square() + options.effect * x2.square()).matrix() + eps;
    return data;
  }

  const auto kernels = multi_design_kernels();
  data.covariate_names = {"x1", "x2", "x3", "x4"};
  data.covariates.resize(rows, 4);
  for (Eigen::Index j = 0; j < 3; ++j) data.covariates.col(j) = sample_gp(pts, kernels[static_cast<std::size_t>(j)], 0.0, rng);
  if (design == Design::multi_independent) {
    data.covariates.col(3) = sample_gp(pts, kernels[3], 0.0, rng);
  } else {
    const Eigen::VectorXd mean = options.dependence_scale * data.covariates.col(0);
    data.covariates.col(3) = sample_gp(pts, kernels[3], mean, rng);
  }
  eps = generate_scenario(options.error, pts, w, rng, options.scenario);

  const auto x1 = data.covariates.col(0).array();
  const auto x2 = data.covariates.col(1).array();
  const auto x4 = data.covariates.col(3).array();
  const double x4_weight = design == Design::multi_confounded ? 0.0 : 1.0;
  if (trend == Trend::linear)
    data.response = (-0.5 + x1 + x2 + x4_weight * x4).matrix() + eps;
  else
    data.response = (-0.5 + x1.exp() + x2.square() + x4_weight * x4.cube()).matrix() + eps;
  return data;
}

}  // namespace rshift::fields
