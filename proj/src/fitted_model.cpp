#include "rshift/error.hpp"
#include "rshift/regression.hpp"

namespace rshift::regress {

std::string_view to_string(FitterKind k) {
  switch (k) {
    case FitterKind::lm: return "lm";
    case FitterKind::gls: return "gls";
    case FitterKind::nw: return "nw";
    case FitterKind::gam_l: return "gam_l";
    case FitterKind::gam_nl: return "gam_nl";
  }
  return "unknown";
}

std::string_view to_string(GFitter g) {
  switch (g) {
    case GFitter::linear: return "linear";
    case GFitter::nw: return "nw";
    case GFitter::spline: return "spline";
  }
  return "unknown";
}

FitterKind parse_fitter(std::string_view name) {
  if (name == "lm") return FitterKind::lm;
  if (name == "gls") return FitterKind::gls;
  if (name == "nw") return FitterKind::nw;
  if (name == "gam_l" || name == "gam-l") return FitterKind::gam_l;
  if (name == "gam_nl" || name == "gam-nl") return FitterKind::gam_nl;
  throw Error(ErrorCode::InvalidParameter, "unknown fitter '" + std::string(name) + "'");
}

GFitter parse_g_fitter(std::string_view name) {
  if (name == "linear") return GFitter::linear;
  if (name == "nw") return GFitter::nw;
  if (name == "spline") return GFitter::spline;
  throw Error(ErrorCode::InvalidParameter, "unknown g_fitter '" + std::string(name) + "'");
}

GFitter default_g_fitter(FitterKind f) {
  return (f == FitterKind::lm || f == FitterKind::gls) ? GFitter::linear : GFitter::nw;
}

FittedModel::FittedModel(FitterKind kind, Eigen::VectorXd response, Eigen::VectorXd fitted, Hyperparameters hyper,
                         Predictor predictor)
    : kind_(kind),
      fitted_(std::move(fitted)),
      residuals_(response - fitted_),
      hyper_(std::move(hyper)),
      predictor_(std::move(predictor)) {}

Eigen::VectorXd FittedModel::predict(const Eigen::MatrixXd& covariates,
                                     std::span<const geom::Point> locations) const {
  if (static_cast<std::size_t>(covariates.rows()) != locations.size() && covariates.cols() > 0 && !locations.empty())
    throw Error(ErrorCode::LengthMismatch, "predict: covariate rows and locations differ");
  return predictor_(covariates, locations);
}

FittedModel fit_model(FitterKind kind, const FitData& data, const FitOptions& options) {
  switch (kind) {
    case FitterKind::lm: return fit_lm_ml(data, options.lm).model;
    case FitterKind::gls: return fit_gls_variogram(data, options.lm).model;
    case FitterKind::nw: return fit_nw(data, options.nw);
    case FitterKind::gam_l: return fit_gam(data, GamMean::linear, options.gam);
    case FitterKind::gam_nl: return fit_gam(data, GamMean::nonlinear, options.gam);
  }
  throw Error(ErrorCode::InvalidParameter, "unknown fitter");
}

}  // namespace rshift::regress
