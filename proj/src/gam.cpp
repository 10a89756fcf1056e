#include <cmath>
#include <limits>
#include <numbers>

#include "rshift/error.hpp"
#include "rshift/regression.hpp"

// Penalised thin-plate fits are solved in the space orthogonal to the
// unpenalised columns N = [1, linear terms, centred coordinates]. With
// Q2 an orthonormal basis of that complement, z = Q2^T y and, for smooth k,
// B_k = Q2^T E_k Z_k, F_k = Z_k^T E_k Z_k, H_k = B_k F_k^-1 B_k^T, the
// penalised least-squares residual is Q2 (M + I)^-1 z with
// M = sum_k H_k / lambda_k, and tr(hat) = q + m - tr((M + I)^-1).

namespace rshift::regress {
namespace {

struct Smooth {
  Eigen::MatrixXd knots;  // n x dim, centred
  double scale = 1.0;     // radial matrix is divided by this
  Eigen::MatrixXd z;      // orthonormal basis of null(T^T)
  Eigen::MatrixXd e;      // scaled radial matrix at the knots
};

double radial(int dim, double r) { return dim == 1 ? thin_plate_eta1(r) : thin_plate_eta2(r); }

Eigen::MatrixXd radial_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& knots, double scale) {
  const int dim = static_cast<int>(knots.cols());
  Eigen::MatrixXd out(a.rows(), knots.rows());
  for (Eigen::Index j = 0; j < knots.rows(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) out(i, j) = radial(dim, (a.row(i) - knots.row(j)).norm()) / scale;
  return out;
}

Smooth make_smooth(const Eigen::MatrixXd& knots) {
  const Eigen::Index n = knots.rows(), dim = knots.cols();
  Smooth s;
  s.knots = knots;
  s.e = radial_matrix(knots, knots, 1.0);
  const double mx = s.e.cwiseAbs().maxCoeff();
  if (mx > 0.0) {
    s.scale = mx;
    s.e /= mx;
  }
  Eigen::MatrixXd t(n, dim + 1);
  t.col(0).setOnes();
  t.rightCols(dim) = knots;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(t);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  s.z = q.rightCols(n - dim - 1);
  return s;
}

struct Problem {
  Eigen::MatrixXd n_cols;  // unpenalised columns
  std::vector<Smooth> smooths;
  Eigen::VectorXd y;
};

class Reduced {
 public:
  explicit Reduced(const Problem& p) : p_(p) {
    const Eigen::Index n = p.y.size(), q = p.n_cols.cols();
    if (n <= q + 1) throw Error(ErrorCode::TooFewPoints, "gam: too few observations for the model");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> rank_check(p.n_cols);
    if (rank_check.rank() < q) throw Error(ErrorCode::RankDeficientDesign, "gam: unpenalised columns are collinear");
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(p.n_cols);
    const Eigen::MatrixXd full_q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    q1_ = full_q.leftCols(q);
    q2_ = full_q.rightCols(n - q);
    r1_ = qr.matrixQR().topLeftCorner(q, q).triangularView<Eigen::Upper>();
    z_ = q2_.transpose() * p.y;
    for (const auto& s : p.smooths) {
      const Eigen::MatrixXd ez = s.e * s.z;
      Eigen::MatrixXd f = s.z.transpose() * ez;
      f = 0.5 * (f + f.transpose());
      Eigen::LLT<Eigen::MatrixXd> llt(f);
      if (llt.info() != Eigen::Success) {
        const double jitter = 1e-10 * std::max(1.0, f.diagonal().cwiseAbs().maxCoeff());
        llt.compute(f + jitter * Eigen::MatrixXd::Identity(f.rows(), f.cols()));
        if (llt.info() != Eigen::Success)
          throw Error(ErrorCode::SingularSystem, "gam: penalty matrix is singular (duplicate knots?)");
      }
      Eigen::MatrixXd b = q2_.transpose() * ez;
      const Eigen::MatrixXd c = llt.matrixL().solve(b.transpose());
      Eigen::MatrixXd h = c.transpose() * c;
      h = 0.5 * (h + h.transpose());
      ez_.push_back(ez);
      b_.push_back(std::move(b));
      f_.push_back(std::move(llt));
      h_.push_back(std::move(h));
    }
    if (h_.size() == 1) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h_[0]);
      mu_ = es.eigenvalues().cwiseMax(0.0);
      u_ = es.eigenvectors();
      uz_ = u_.transpose() * z_;
    }
  }

  [[nodiscard]] double gcv(const std::vector<double>& lambdas) const {
    const double n = static_cast<double>(p_.y.size());
    const double m = static_cast<double>(z_.size());
    double rss = 0.0, tr_inv = 0.0;
    if (h_.size() == 1) {
      const double lam = lambdas[0];
      for (Eigen::Index i = 0; i < mu_.size(); ++i) {
        const double shrink = lam / (lam + mu_(i));
        rss += shrink * shrink * uz_(i) * uz_(i);
        tr_inv += shrink;
      }
    } else {
      Eigen::LLT<Eigen::MatrixXd> llt(system(lambdas));
      if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
      rss = llt.solve(z_).squaredNorm();
      const Eigen::MatrixXd linv = llt.matrixL().solve(Eigen::MatrixXd::Identity(z_.size(), z_.size()));
      tr_inv = linv.squaredNorm();
    }
    const double tr_hat = static_cast<double>(p_.n_cols.cols()) + m - tr_inv;
    const double denom = n - tr_hat;
    if (!(denom > 1e-8 * n)) return std::numeric_limits<double>::infinity();
    return n * rss / (denom * denom);
  }

  struct Coefficients {
    Eigen::VectorXd alpha;
    std::vector<Eigen::VectorXd> radial;  // c_k = Z_k delta_k, one entry per knot
    Eigen::VectorXd fitted;
  };

  [[nodiscard]] Coefficients solve(const std::vector<double>& lambdas) const {
    Eigen::VectorXd w;
    if (h_.size() == 1) {
      const double lam = lambdas[0];
      Eigen::VectorXd shr(mu_.size());
      for (Eigen::Index i = 0; i < mu_.size(); ++i) shr(i) = lam / (lam + mu_(i)) * uz_(i);
      w = u_ * shr;
    } else {
      Eigen::LLT<Eigen::MatrixXd> llt(system(lambdas));
      if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "gam: (M + I) is not positive definite");
      w = llt.solve(z_);
    }
    Coefficients out;
    Eigen::VectorXd smooth_part = Eigen::VectorXd::Zero(p_.y.size());
    for (std::size_t k = 0; k < h_.size(); ++k) {
      const Eigen::VectorXd delta = f_[k].solve(b_[k].transpose() * w) / lambdas[k];
      out.radial.push_back(p_.smooths[k].z * delta);
      smooth_part += ez_[k] * delta;
    }
    out.alpha = r1_.triangularView<Eigen::Upper>().solve(q1_.transpose() * (p_.y - smooth_part));
    out.fitted = p_.n_cols * out.alpha + smooth_part;
    return out;
  }

 private:
  [[nodiscard]] Eigen::MatrixXd system(const std::vector<double>& lambdas) const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(z_.size(), z_.size());
    for (std::size_t k = 0; k < h_.size(); ++k) m += h_[k] / lambdas[k];
    return m;
  }

  const Problem& p_;
  Eigen::MatrixXd q1_, q2_, r1_;
  Eigen::VectorXd z_;
  std::vector<Eigen::MatrixXd> ez_, b_, h_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> f_;
  Eigen::VectorXd mu_, uz_;
  Eigen::MatrixXd u_;
};

// Coordinate search over the grid, all smooths starting at the grid midpoint.
std::vector<double> choose_lambdas(const Reduced& r, std::size_t count, const std::vector<double>& grid,
                                   double* best_gcv) {
  if (grid.empty()) throw Error(ErrorCode::InvalidParameter, "gam: empty lambda grid");
  for (double g : grid)
    if (!(g > 0.0)) throw Error(ErrorCode::InvalidParameter, "gam: lambda grid values must be > 0");
  std::vector<std::size_t> idx(count, grid.size() / 2);
  auto values = [&] {
    std::vector<double> v(count);
    for (std::size_t k = 0; k < count; ++k) v[k] = grid[idx[k]];
    return v;
  };
  double best = r.gcv(values());
  const int max_cycles = count == 1 ? 1 : 5;
  for (int cycle = 0; cycle < max_cycles; ++cycle) {
    bool changed = false;
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t keep = idx[k];
      std::size_t arg = keep;
      for (std::size_t g = 0; g < grid.size(); ++g) {
        if (g == keep) continue;
        idx[k] = g;
        const double v = r.gcv(values());
        if (v < best) {
          best = v;
          arg = g;
        }
      }
      idx[k] = arg;
      changed |= arg != keep;
    }
    if (!changed) break;
  }
  if (!std::isfinite(best)) throw Error(ErrorCode::SingularSystem, "gam: GCV is not finite anywhere on the grid");
  if (best_gcv) *best_gcv = best;
  return values();
}

Eigen::MatrixXd coords_matrix(std::span<const geom::Point> locs) {
  Eigen::MatrixXd s(static_cast<Eigen::Index>(locs.size()), 2);
  for (std::size_t i = 0; i < locs.size(); ++i) {
    s(static_cast<Eigen::Index>(i), 0) = locs[i].x;
    s(static_cast<Eigen::Index>(i), 1) = locs[i].y;
  }
  return s;
}

struct Layout {
  Eigen::RowVectorXd cov_mean;
  Eigen::RowVector2d loc_mean;
  bool spatial = true;
  bool covariate_smooths = false;
};

Eigen::MatrixXd unpenalised(const Layout& l, const Eigen::MatrixXd& cov_c, const Eigen::MatrixXd& loc_c) {
  const Eigen::Index n = std::max(cov_c.rows(), loc_c.rows());
  const Eigen::Index q = 1 + cov_c.cols() + (l.spatial ? 2 : 0);
  Eigen::MatrixXd out(n, q);
  out.col(0).setOnes();
  if (cov_c.cols() > 0) out.middleCols(1, cov_c.cols()) = cov_c;
  if (l.spatial) out.rightCols(2) = loc_c;
  return out;
}

FittedModel assemble(FitterKind kind, const Eigen::VectorXd& y, const Layout& layout, Problem problem,
                     const std::vector<double>& lambdas, double gcv) {
  Reduced reduced(problem);
  auto coef = reduced.solve(lambdas);
  Hyperparameters hyper;
  hyper.lambdas = Eigen::Map<const Eigen::VectorXd>(lambdas.data(), static_cast<Eigen::Index>(lambdas.size()));
  hyper.gcv = gcv;

  std::vector<Smooth> smooths = std::move(problem.smooths);
  for (auto& s : smooths) {
    s.e.resize(0, 0);
    s.z.resize(0, 0);
  }
  auto predictor = [layout, smooths = std::move(smooths), alpha = coef.alpha, radial = coef.radial](
                       const Eigen::MatrixXd& cov, std::span<const geom::Point> locs) {
    const Eigen::Index d = layout.cov_mean.size();
    if (cov.cols() != d) throw Error(ErrorCode::LengthMismatch, "predict: wrong covariate count");
    Eigen::MatrixXd cov_c = cov;
    if (d > 0) cov_c.rowwise() -= layout.cov_mean;
    Eigen::MatrixXd loc_c;
    if (layout.spatial) {
      loc_c = coords_matrix(locs);
      loc_c.rowwise() -= layout.loc_mean;
    }
    Eigen::VectorXd out = unpenalised(layout, cov_c, loc_c) * alpha;
    std::size_t k = 0;
    if (layout.covariate_smooths)
      for (Eigen::Index j = 0; j < d; ++j, ++k)
        out += radial_matrix(cov_c.col(j), smooths[k].knots, smooths[k].scale) * radial[k];
    if (layout.spatial) out += radial_matrix(loc_c, smooths[k].knots, smooths[k].scale) * radial[k];
    return out;
  };
  return FittedModel(kind, y, coef.fitted, hyper, std::move(predictor));
}

struct Built {
  Layout layout;
  Problem problem;
};

Built build_problem(const FitData& data, GamMean mean) {
  const Eigen::Index n = data.n(), d = data.d();
  if (static_cast<std::size_t>(n) != data.locations.size() || (d > 0 && data.covariates.rows() != n))
    throw Error(ErrorCode::LengthMismatch, "gam: response, covariates and locations must have equal length");
  if (n < 20) throw Error(ErrorCode::TooFewPoints, "gam: need at least 20 observations");
  Built b;
  b.layout.covariate_smooths = mean == GamMean::nonlinear;
  Eigen::MatrixXd cov_c = data.covariates;
  b.layout.cov_mean = d > 0 ? Eigen::RowVectorXd(cov_c.colwise().mean()) : Eigen::RowVectorXd(0);
  if (d > 0) cov_c.rowwise() -= b.layout.cov_mean;
  Eigen::MatrixXd loc_c = coords_matrix(data.locations);
  b.layout.loc_mean = loc_c.colwise().mean();
  loc_c.rowwise() -= b.layout.loc_mean;

  b.problem.n_cols = unpenalised(b.layout, cov_c, loc_c);
  if (b.layout.covariate_smooths)
    for (Eigen::Index j = 0; j < d; ++j) b.problem.smooths.push_back(make_smooth(cov_c.col(j)));
  b.problem.smooths.push_back(make_smooth(loc_c));
  b.problem.y = data.response;
  return b;
}

FitterKind kind_of(GamMean mean) { return mean == GamMean::linear ? FitterKind::gam_l : FitterKind::gam_nl; }

}  // namespace

double thin_plate_eta2(double r) {
  if (r <= 0.0) return 0.0;
  return r * r * std::log(r) / (8.0 * std::numbers::pi);
}

double thin_plate_constant_even(int m, int d) {
  if (d % 2 != 0 || 2 * m <= d) throw Error(ErrorCode::InvalidParameter, "thin plate: need even d and 2m > d");
  const double sign = ((m + 1 + d / 2) % 2 == 0) ? 1.0 : -1.0;
  const double denom = std::pow(2.0, 2 * m - 1) * std::pow(std::numbers::pi, d / 2.0) * std::tgamma(m) *
                       std::tgamma(m - d / 2 + 1);
  return sign / denom;
}

double thin_plate_eta1(double r) { return r * r * r; }

std::vector<double> GamOptions::default_lambda_grid() {
  std::vector<double> grid(20);
  for (int i = 0; i < 20; ++i) grid[static_cast<std::size_t>(i)] = std::pow(10.0, -8.0 + 12.0 * i / 19.0);
  return grid;
}

FittedModel fit_gam(const FitData& data, GamMean mean, const GamOptions& options) {
  Built b = build_problem(data, mean);
  double gcv = 0.0;
  std::vector<double> lambdas;
  {
    Reduced r(b.problem);
    lambdas = choose_lambdas(r, b.problem.smooths.size(), options.lambda_grid, &gcv);
  }
  return assemble(kind_of(mean), data.response, b.layout, std::move(b.problem), lambdas, gcv);
}

FittedModel fit_gam_fixed(const FitData& data, GamMean mean, const std::vector<double>& lambdas) {
  Built b = build_problem(data, mean);
  if (lambdas.size() != b.problem.smooths.size())
    throw Error(ErrorCode::InvalidParameter, "gam: one lambda per smooth term required");
  for (double l : lambdas)
    if (!(l > 0.0)) throw Error(ErrorCode::InvalidParameter, "gam: lambda must be > 0");
  double gcv = 0.0;
  {
    Reduced r(b.problem);
    gcv = r.gcv(lambdas);
  }
  return assemble(kind_of(mean), data.response, b.layout, std::move(b.problem), lambdas, gcv);
}

FittedModel fit_spline_1d(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const GamOptions& options) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "spline: length mismatch");
  if (x.size() < 5) throw Error(ErrorCode::TooFewPoints, "spline: need at least 5 observations");
  Layout layout;
  layout.spatial = false;
  layout.covariate_smooths = true;
  layout.cov_mean = Eigen::RowVectorXd::Constant(1, x.mean());
  const Eigen::MatrixXd xc = (x.array() - x.mean()).matrix();
  Problem p;
  p.n_cols = unpenalised(layout, xc, Eigen::MatrixXd());
  p.smooths.push_back(make_smooth(xc));
  p.y = y;
  double gcv = 0.0;
  std::vector<double> lambdas;
  {
    Reduced r(p);
    lambdas = choose_lambdas(r, 1, options.lambda_grid, &gcv);
  }
  return assemble(FitterKind::gam_nl, y, layout, std::move(p), lambdas, gcv);
}

}  // namespace rshift::regress
