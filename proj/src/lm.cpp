#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "rshift/error.hpp"
#include "rshift/regression.hpp"
#include "rshift/rng.hpp"

namespace rshift::regress {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& covariates, Eigen::Index n) {
  Eigen::MatrixXd x(n, covariates.cols() + 1);
  x.col(0).setOnes();
  if (covariates.cols() > 0) x.rightCols(covariates.cols()) = covariates;
  return x;
}

void check_design(const FitData& data) {
  const Eigen::Index n = data.n();
  if (static_cast<std::size_t>(n) != data.locations.size() || (data.d() > 0 && data.covariates.rows() != n))
    throw Error(ErrorCode::LengthMismatch, "response, covariates and locations must have equal length");
  if (n <= data.d() + 2) throw Error(ErrorCode::TooFewPoints, "need n > d + 2 observations");
  const Eigen::MatrixXd x = with_intercept(data.covariates, n);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols()) throw Error(ErrorCode::RankDeficientDesign, "design matrix is rank deficient");
}

fields::CovarianceKernel make_kernel(const LmOptions& o, double sigma2, double range, double nugget) {
  fields::CovarianceKernel k;
  k.family = o.family;
  k.variance = sigma2;
  k.range = range;
  k.nugget = nugget;
  k.smoothness = o.matern_smoothness;
  return k;
}

Eigen::MatrixXd fast_covariance(const Eigen::MatrixXd& dist, const fields::CovarianceKernel& k) {
  const Eigen::Index n = dist.rows();
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double h = dist(i, j);
      double v = k.variance * k.correlation(h);
      if (h == 0.0) v += k.nugget;
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

struct GlsSolution {
  Eigen::VectorXd beta;
  Eigen::MatrixXd beta_cov;  // (X^T Sigma^-1 X)^-1
  double log_det = 0.0;
  double quad = 0.0;  // r^T Sigma^-1 r
};

// Returns false when Sigma is not numerically PD.
bool gls_solve(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, GlsSolution& out,
               bool want_cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) return false;
  const auto l = llt.matrixL();
  const Eigen::MatrixXd xw = l.solve(x);
  const Eigen::VectorXd yw = l.solve(y);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xw);
  out.beta = qr.solve(yw);
  const Eigen::VectorXd r = yw - xw * out.beta;
  out.quad = r.squaredNorm();
  const Eigen::MatrixXd lm = llt.matrixLLT();
  out.log_det = 2.0 * lm.diagonal().array().log().sum();
  if (!std::isfinite(out.log_det) || !std::isfinite(out.quad)) return false;
  if (want_cov) out.beta_cov = (xw.transpose() * xw).inverse();
  return true;
}

struct Ols {
  Eigen::VectorXd beta;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd beta_cov;
  double s2 = 0.0;
};

Ols ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Ols o;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  o.beta = qr.solve(y);
  o.residuals = y - x * o.beta;
  o.s2 = o.residuals.squaredNorm() / static_cast<double>(x.rows() - x.cols());
  o.beta_cov = o.s2 * (x.transpose() * x).inverse();
  return o;
}

void fill_tests(ClassicalTestReport& rep, const Eigen::VectorXd& beta, const Eigen::MatrixXd& cov, double dof) {
  rep.beta = beta;
  rep.dof = dof;
  const Eigen::Index p = beta.size();
  rep.std_errors.resize(p);
  rep.t_stats.resize(p);
  rep.p_values.resize(p);
  boost::math::students_t dist(dof);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double se = std::sqrt(std::max(cov(i, i), 0.0));
    rep.std_errors(i) = se;
    if (se > 0.0) {
      const double t = beta(i) / se;
      rep.t_stats(i) = t;
      rep.p_values(i) = std::isfinite(t) ? 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))) : 0.0;
    } else {
      rep.t_stats(i) = beta(i) == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
      rep.p_values(i) = beta(i) == 0.0 ? 1.0 : 0.0;
    }
  }
}

FittedModel::Predictor linear_predictor(Eigen::VectorXd beta) {
  return [beta = std::move(beta)](const Eigen::MatrixXd& cov, std::span<const geom::Point> locs) {
    const Eigen::Index m = cov.cols() > 0 ? cov.rows() : static_cast<Eigen::Index>(locs.size());
    if (cov.cols() != beta.size() - 1) throw Error(ErrorCode::LengthMismatch, "predict: wrong covariate count");
    return Eigen::VectorXd(with_intercept(cov, m) * beta);
  };
}

struct LogBox {
  Eigen::Vector3d lo, hi;
  bool inside(const Eigen::VectorXd& p) const {
    for (int i = 0; i < 3; ++i)
      if (!(p(i) >= lo(i) && p(i) <= hi(i))) return false;
    return true;
  }
};

LogBox parameter_box(double scale2, double diag) {
  const double ls = std::log(scale2), ld = std::log(diag);
  LogBox b;
  b.lo << ls - 20.0, ld - 12.0, ls - 25.0;
  b.hi << ls + 8.0, ld + 5.0, ls + 8.0;
  return b;
}

// The empirical variogram only sees lags up to max_lag and semivariances up to
// max(gamma); sills far above that or ranges far beyond it are not identified.
LogBox variogram_box(const EmpiricalVariogram& vg, double max_lag, double scale2) {
  const double top = std::max(*std::max_element(vg.gamma.begin(), vg.gamma.end()), scale2);
  const double ls = std::log(scale2), lt = std::log(4.0 * top), ll = std::log(max_lag);
  LogBox b;
  b.lo << ls - 20.0, ll - 7.0, ls - 25.0;
  b.hi << lt, ll + std::log(2.0), lt;
  return b;
}

double response_scale2(const Eigen::VectorXd& residuals, Eigen::Index dof, const Eigen::VectorXd& y) {
  double s2 = residuals.squaredNorm() / static_cast<double>(dof);
  const double floor = 1e-12 * std::max(1.0, (y.array() - y.mean()).square().mean());
  return std::max(s2, floor);
}

}  // namespace

double lm_profile_loglik(const FitData& data, const Eigen::VectorXd& log_params, const LmOptions& options) {
  const Eigen::MatrixXd dist = fields::distance_matrix(data.locations);
  const Eigen::MatrixXd x = with_intercept(data.covariates, data.n());
  const auto k = make_kernel(options, std::exp(log_params(0)), std::exp(log_params(1)), std::exp(log_params(2)));
  GlsSolution s;
  if (!gls_solve(fast_covariance(dist, k), x, data.response, s, false)) return kNegInf;
  return -0.5 * (static_cast<double>(data.n()) * std::log(2.0 * std::numbers::pi) + s.log_det + s.quad);
}

LmFit fit_lm_ml(const FitData& data, const LmOptions& options) {
  check_design(data);
  const Eigen::Index n = data.n();
  const Eigen::MatrixXd x = with_intercept(data.covariates, n);
  const Eigen::MatrixXd dist = fields::distance_matrix(data.locations);
  const Ols start_fit = ols(x, data.response);
  const double s2 = response_scale2(start_fit.residuals, n - x.cols(), data.response);
  const double diag = data.window.diagonal();
  const LogBox box = parameter_box(s2, diag);
  const double log_two_pi = std::log(2.0 * std::numbers::pi);

  auto negloglik = [&](const Eigen::VectorXd& p) {
    if (!box.inside(p)) return std::numeric_limits<double>::infinity();
    const auto k = make_kernel(options, std::exp(p(0)), std::exp(p(1)), std::exp(p(2)));
    GlsSolution s;
    if (!gls_solve(fast_covariance(dist, k), x, data.response, s, false))
      return std::numeric_limits<double>::infinity();
    return 0.5 * (static_cast<double>(n) * log_two_pi + s.log_det + s.quad);
  };

  Eigen::VectorXd start(3);
  start << std::log(s2 / 2.0), std::log(diag / 10.0), std::log(s2 / 2.0);
  const double start_value = negloglik(start);

  Eigen::VectorXd best = start;
  double best_value = start_value;
  SeededStream jitter(0x6c6d6d6cULL);
  for (std::size_t run = 0; run <= options.restarts; ++run) {
    Eigen::VectorXd from = best;
    if (run > 0)
      for (int i = 0; i < 3; ++i) from(i) += 0.5 * jitter.normal();
    if (!std::isfinite(negloglik(from))) from = best;
    const auto res = opt::nelder_mead(negloglik, from, options.nelder_mead);
    if (res.value < best_value) {
      best_value = res.value;
      best = res.argmin;
    }
  }
  if (!std::isfinite(best_value)) throw Error(ErrorCode::OptimizerDiverged, "no finite likelihood found");

  const auto k = make_kernel(options, std::exp(best(0)), std::exp(best(1)), std::exp(best(2)));
  GlsSolution sol;
  if (!gls_solve(fast_covariance(dist, k), x, data.response, sol, true))
    throw Error(ErrorCode::OptimizerDiverged, "covariance at optimum is not positive definite");

  ClassicalTestReport rep;
  fill_tests(rep, sol.beta, sol.beta_cov, static_cast<double>(n - x.cols()));
  rep.sigma2 = k.variance;
  rep.range = k.range;
  rep.nugget = k.nugget;

  Hyperparameters hyper;
  hyper.beta = sol.beta;
  hyper.sigma2 = k.variance;
  hyper.range = k.range;
  hyper.nugget = k.nugget;
  FittedModel model(FitterKind::lm, data.response, x * sol.beta, hyper, linear_predictor(sol.beta));
  return LmFit{std::move(model), std::move(rep), -best_value,
               std::isfinite(start_value) ? -start_value : kNegInf};
}

EmpiricalVariogram empirical_semivariogram(std::span<const geom::Point> locations, std::span<const double> values,
                                           double max_lag, std::size_t bins) {
  if (locations.size() != values.size()) throw Error(ErrorCode::LengthMismatch, "variogram: length mismatch");
  if (bins == 0 || !(max_lag > 0.0)) throw Error(ErrorCode::InvalidParameter, "variogram: need bins > 0, max_lag > 0");
  EmpiricalVariogram v;
  const double width = max_lag / static_cast<double>(bins);
  v.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) v.edges[b] = width * static_cast<double>(b);
  v.edges[bins] = max_lag;
  std::vector<double> sum_sq(bins, 0.0), sum_h(bins, 0.0);
  v.counts.assign(bins, 0);
  for (std::size_t i = 0; i < locations.size(); ++i) {
    for (std::size_t j = i + 1; j < locations.size(); ++j) {
      const double h = std::hypot(locations[i].x - locations[j].x, locations[i].y - locations[j].y);
      if (h <= 0.0 || h > max_lag) continue;
      auto b = static_cast<std::ptrdiff_t>(std::ceil(h / width)) - 1;
      b = std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1);
      const double diff = values[i] - values[j];
      sum_sq[static_cast<std::size_t>(b)] += diff * diff;
      sum_h[static_cast<std::size_t>(b)] += h;
      ++v.counts[static_cast<std::size_t>(b)];
    }
  }
  v.gamma.resize(bins);
  v.mean_lag.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const auto c = static_cast<double>(v.counts[b]);
    v.gamma[b] = v.counts[b] ? sum_sq[b] / (2.0 * c) : 0.0;
    v.mean_lag[b] = v.counts[b] ? sum_h[b] / c : 0.5 * (v.edges[b] + v.edges[b + 1]);
  }
  return v;
}

GlsFit fit_gls_variogram(const FitData& data, const LmOptions& options) {
  check_design(data);
  const Eigen::Index n = data.n();
  const Eigen::MatrixXd x = with_intercept(data.covariates, n);
  const Ols o = ols(x, data.response);
  const double max_lag = data.window.diagonal() / 2.0;
  std::vector<double> res(o.residuals.data(), o.residuals.data() + n);
  EmpiricalVariogram vg = empirical_semivariogram(data.locations, res, max_lag);

  const double s2 = response_scale2(o.residuals, n - x.cols(), data.response);
  const LogBox box = variogram_box(vg, max_lag, s2);
  std::size_t nonempty = 0;
  for (auto c : vg.counts) nonempty += c > 0;

  auto wls = [&](const Eigen::VectorXd& p) {
    if (!box.inside(p)) return std::numeric_limits<double>::infinity();
    const auto k = make_kernel(options, std::exp(p(0)), std::exp(p(1)), std::exp(p(2)));
    double total = 0.0;
    for (std::size_t b = 0; b < vg.gamma.size(); ++b) {
      if (!vg.counts[b]) continue;
      const double model = k.nugget + k.variance * (1.0 - k.correlation(vg.mean_lag[b]));
      const double e = vg.gamma[b] - model;
      total += static_cast<double>(vg.counts[b]) * e * e;
    }
    return total / (s2 * s2);
  };

  ClassicalTestReport rep;
  Hyperparameters hyper;
  Eigen::VectorXd beta;
  bool fitted = false;
  if (nonempty >= 3) {
    Eigen::VectorXd start(3);
    start << std::log(s2 / 2.0), std::log(max_lag / 3.0), std::log(s2 / 2.0);
    auto r = opt::nelder_mead(wls, start, options.nelder_mead);
    r = opt::nelder_mead(wls, r.argmin, options.nelder_mead);
    if (std::isfinite(r.value)) {
      const auto k = make_kernel(options, std::exp(r.argmin(0)), std::exp(r.argmin(1)), std::exp(r.argmin(2)));
      const Eigen::MatrixXd dist = fields::distance_matrix(data.locations);
      GlsSolution sol;
      if (gls_solve(fast_covariance(dist, k), x, data.response, sol, true)) {
        fill_tests(rep, sol.beta, sol.beta_cov, static_cast<double>(n - x.cols()));
        rep.sigma2 = hyper.sigma2 = k.variance;
        rep.range = hyper.range = k.range;
        rep.nugget = hyper.nugget = k.nugget;
        beta = sol.beta;
        fitted = true;
      }
    }
  }
  if (!fitted) {
    fill_tests(rep, o.beta, o.beta_cov, static_cast<double>(n - x.cols()));
    rep.ols_fallback = true;
    rep.nugget = hyper.nugget = o.s2;
    beta = o.beta;
  }
  hyper.beta = beta;
  FittedModel model(FitterKind::gls, data.response, x * beta, hyper, linear_predictor(beta));
  return GlsFit{std::move(model), std::move(rep), std::move(vg)};
}

ClassicalTestReport classical_test(const SpatialDataset& data, const std::vector<std::string>& covariates,
                                   const LmOptions& options) {
  data.validate();
  FitData fd;
  fd.locations = data.locations;
  fd.window = data.window;
  fd.covariates = data.columns(covariates);
  fd.response = data.response;
  return fit_lm_ml(fd, options).report;
}

}  // namespace rshift::regress
