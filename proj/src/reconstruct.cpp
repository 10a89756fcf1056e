#include "rshift/error.hpp"
#include "rshift/regression.hpp"

namespace rshift::regress {
namespace {

Eigen::VectorXd linear_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  Eigen::MatrixXd a(x.size(), 2);
  a.col(0).setOnes();
  a.col(1) = x;
  const Eigen::VectorXd beta = a.colPivHouseholderQr().solve(y);
  return a * beta;
}

Eigen::VectorXd fit_g(GFitter g, const Eigen::VectorXd& interest, const Eigen::VectorXd& target,
                      const FitOptions& options) {
  switch (g) {
    case GFitter::linear: return linear_fit(interest, target);
    case GFitter::nw: {
      FitData fd;
      fd.covariates = interest;
      fd.response = target;
      NwOptions nw = options.nw;
      nw.bandwidths.reset();
      return fit_nw(fd, nw).fitted_values();
    }
    case GFitter::spline: return fit_spline_1d(interest, target, options.gam).fitted_values();
  }
  throw Error(ErrorCode::InvalidParameter, "unknown g fitter");
}

}  // namespace

ThetaReconstruction reconstruct_nuisance(const Eigen::MatrixXd& nuisance, const Eigen::VectorXd& interest,
                                         double theta, GFitter g_fitter, const FitOptions& options) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw Error(ErrorCode::InvalidParameter, "theta must lie in [0, 1]");
  const Eigen::Index n = interest.size(), d = nuisance.cols();
  if (d > 0 && nuisance.rows() != n) throw Error(ErrorCode::LengthMismatch, "nuisance rows differ from interest");
  ThetaReconstruction out;
  out.theta = theta;
  out.g_fitter = g_fitter;
  out.g_fitted = Eigen::MatrixXd::Zero(n, d);
  out.collinear.assign(static_cast<std::size_t>(d), false);
  for (Eigen::Index j = 0; j < d; ++j) {
    const Eigen::VectorXd xj = nuisance.col(j);
    const Eigen::VectorXd lin = linear_fit(interest, xj);
    const double spread = (xj.array() - xj.mean()).matrix().norm();
    out.collinear[static_cast<std::size_t>(j)] = (xj - lin).norm() <= 1e-10 * std::max(spread, 1e-300);
    if (theta < 1.0) out.g_fitted.col(j) = g_fitter == GFitter::linear ? lin : fit_g(g_fitter, interest, xj, options);
  }
  out.delta = nuisance - out.g_fitted;
  out.reconstructed = nuisance - (1.0 - theta) * out.g_fitted;
  return out;
}

FittedModel residualize(FitterKind kind, const FitData& nuisance_data, const FitOptions& options) {
  const bool mean_only = nuisance_data.d() == 0 && (kind == FitterKind::lm || kind == FitterKind::gls ||
                                                    kind == FitterKind::nw);
  if (!mean_only) return fit_model(kind, nuisance_data, options);
  const Eigen::VectorXd& y = nuisance_data.response;
  if (y.size() == 0) throw Error(ErrorCode::TooFewPoints, "residualize: empty response");
  const double mean = y.mean();
  Hyperparameters hyper;
  hyper.beta = Eigen::VectorXd::Constant(1, mean);
  return FittedModel(kind, y, Eigen::VectorXd::Constant(y.size(), mean), hyper,
                     [mean](const Eigen::MatrixXd& c, std::span<const geom::Point> locs) {
                       const Eigen::Index m = c.rows() > 0 ? c.rows() : static_cast<Eigen::Index>(locs.size());
                       return Eigen::VectorXd(Eigen::VectorXd::Constant(m, mean));
                     });
}

}  // namespace rshift::regress
