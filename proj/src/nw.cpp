#include <cmath>

#include "rshift/error.hpp"
#include "rshift/regression.hpp"

namespace rshift::regress {
namespace {

constexpr int kMaxWidenings = 10;
constexpr double kWidenFactor = 1.5;

// Weighted mean of y around q, skipping row `skip` (leave-one-out) when set.
double nw_estimate(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& h,
                   const Eigen::RowVectorXd& q, Eigen::Index skip) {
  const Eigen::Index n = x.rows(), d = x.cols();
  double scale = 1.0;
  for (int attempt = 0; attempt <= kMaxWidenings; ++attempt) {
    double num = 0.0, den = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == skip) continue;
      double w = 1.0;
      for (Eigen::Index k = 0; k < d && w > 0.0; ++k) w *= epanechnikov2((q(k) - x(j, k)) / (h(k) * scale));
      if (w > 0.0) {
        num += w * y(j);
        den += w;
      }
    }
    if (den > 0.0) return num / den;
    scale *= kWidenFactor;
  }
  throw Error(ErrorCode::EmptyNeighborhood, "no observations inside the widened kernel window");
}

double sample_sd(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  return std::sqrt((v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1));
}

}  // namespace

double epanechnikov2(double u) {
  const double u2 = u * u;
  if (u2 >= 5.0) return 0.0;
  return 3.0 * (1.0 - u2 / 5.0) / (4.0 * std::sqrt(5.0));
}

double nw_loo_cv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& bandwidths) {
  const Eigen::Index n = x.rows();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = y(i) - nw_estimate(x, y, bandwidths, x.row(i), i);
    total += e * e;
  }
  return total / static_cast<double>(n);
}

FittedModel fit_nw(const FitData& data, const NwOptions& options) {
  const Eigen::Index n = data.n(), d = data.d();
  if (d > 0 && data.covariates.rows() != n) throw Error(ErrorCode::LengthMismatch, "nw: covariate rows differ");
  if (n < 3) throw Error(ErrorCode::TooFewPoints, "nw: need at least 3 observations");
  const Eigen::MatrixXd x = data.covariates;
  const Eigen::VectorXd y = data.response;

  Hyperparameters hyper;
  if (d == 0) {
    const double mean = y.mean();
    return FittedModel(FitterKind::nw, y, Eigen::VectorXd::Constant(n, mean), hyper,
                       [mean](const Eigen::MatrixXd& c, std::span<const geom::Point> locs) {
                         const Eigen::Index m = c.rows() > 0 ? c.rows() : static_cast<Eigen::Index>(locs.size());
                         return Eigen::VectorXd(Eigen::VectorXd::Constant(m, mean));
                       });
  }

  Eigen::VectorXd h(d);
  if (options.bandwidths) {
    if (static_cast<Eigen::Index>(options.bandwidths->size()) != d)
      throw Error(ErrorCode::InvalidParameter, "nw: one bandwidth per covariate required");
    for (Eigen::Index k = 0; k < d; ++k) {
      h(k) = (*options.bandwidths)[static_cast<std::size_t>(k)];
      if (!(h(k) > 0.0)) throw Error(ErrorCode::InvalidParameter, "nw: bandwidths must be > 0");
    }
  } else {
    Eigen::VectorXd sd(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      sd(k) = sample_sd(x.col(k));
      // constant column: every pair has zero difference, so h is irrelevant
      h(k) = sd(k) > 0.0 ? std::clamp(1.06 * sd(k) * std::pow(static_cast<double>(n), -1.0 / (4.0 + d)),
                                      options.min_factor * sd(k), options.max_factor * sd(k))
                         : 1.0;
    }
    for (int cycle = 0; cycle < options.cycles; ++cycle) {
      for (Eigen::Index k = 0; k < d; ++k) {
        if (!(sd(k) > 0.0)) continue;
        auto score = [&](double hk) {
          Eigen::VectorXd trial = h;
          trial(k) = hk;
          return nw_loo_cv(x, y, trial);
        };
        const double cand = opt::minimize_scalar(score, options.min_factor * sd(k), options.max_factor * sd(k));
        if (score(cand) <= score(h(k))) h(k) = cand;
      }
    }
  }

  Eigen::VectorXd fitted(n);
  for (Eigen::Index i = 0; i < n; ++i) fitted(i) = nw_estimate(x, y, h, x.row(i), -1);
  hyper.bandwidths = h;
  return FittedModel(FitterKind::nw, y, fitted, hyper,
                     [x, y, h](const Eigen::MatrixXd& c, std::span<const geom::Point>) {
                       if (c.cols() != x.cols()) throw Error(ErrorCode::LengthMismatch, "predict: wrong covariate count");
                       Eigen::VectorXd out(c.rows());
                       for (Eigen::Index i = 0; i < c.rows(); ++i) out(i) = nw_estimate(x, y, h, c.row(i), -1);
                       return out;
                     });
}

}  // namespace rshift::regress
