// Acceptance checks. Prints one PASS/FAIL line per criterion; exits nonzero if any fail.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "rshift/parallel.hpp"
#include "rshift/pipeline.hpp"
#include "rshift/random_fields.hpp"
#include "rshift/regression.hpp"
#include "rshift/shift_engine.hpp"
#include "rshift/statistics.hpp"
#include "rshift/study.hpp"

using namespace rshift;
using fields::CovarianceKernel;
namespace fs = std::filesystem;

namespace {

// Tolerances
constexpr double kNominalLo = 0.028, kNominalHi = 0.078;  // 99% band at R = 500
constexpr double kKsLevel = 0.01;
constexpr double kRobustGap = 0.02;
constexpr double kThetaTol = 1e-10;
constexpr double kDcovRelTol = 1e-12;
constexpr double kSamplerTol = 0.15;
constexpr double kAffineTol = 1e-6;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::size_t workers() { return std::max<std::size_t>(default_threads(), 1); }

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

study::CellReport only_cell(const study::StudyReport& r, const std::string& method) {
  for (const auto& c : r.cells)
    if (c.method == method) return c;
  throw std::runtime_error("no cell for " + method);
}

Outcome nominal_level() {
  auto s = study::preset("desk-null-se1");
  s.threads = workers();
  const auto c = study::run_study(s).cells.at(0);
  return {c.rate >= kNominalLo && c.rate <= kNominalHi && c.errors == 0,
          "rate=" + fmt(c.rate) + " band=[" + fmt(kNominalLo) + "," + fmt(kNominalHi) + "] errors=" +
              std::to_string(c.errors)};
}

// Asymptotic Kolmogorov tail with Stephens' finite-n correction.
double ks_p_value(double d, std::size_t n) {
  const double rn = std::sqrt(static_cast<double>(n));
  const double lambda = (rn + 0.12 + 0.11 / rn) * d;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) sum += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(sum, 0.0, 1.0);
}

Outcome exactness() {
  constexpr std::size_t R = 2000, n = 50, K = 99;
  const auto kernel = fields::scenario_kernel(fields::Scenario::SE1);
  std::vector<double> p(R);
  parallel_for(R, workers(), [&](std::size_t r) {
    auto rng = SeededStream::derive(2024, {r});
    std::vector<geom::Point> pts(n);
    for (auto& q : pts) q = {rng.uniform(), rng.uniform()};
    const Eigen::VectorXd e = fields::sample_gp(pts, kernel, 0.0, rng);
    const Eigen::VectorXd x = fields::sample_gp(pts, kernel, 0.0, rng);
    shift::ShiftPlan plan;
    plan.replicates = K;
    plan.seed = rng.next_u64();
    p[r] = shift::run_shift_test({e.data(), n}, {x.data(), n}, pts, geom::Window::unit(), plan).p_value;
  });
  std::sort(p.begin(), p.end());
  // p lives on {j / (K + 1)}, where a valid test has P(p <= j / (K + 1)) <= j / (K + 1);
  // compare the two CDFs on that lattice.
  double d = 0.0;
  for (std::size_t j = 1; j <= K + 1; ++j) {
    const double t = static_cast<double>(j) / (K + 1);
    const auto below = std::upper_bound(p.begin(), p.end(), t + 1e-12) - p.begin();
    d = std::max(d, std::abs(static_cast<double>(below) / R - t));
  }
  const double pv = ks_p_value(d, R);
  return {pv > kKsLevel, "D=" + fmt(d) + " KS p=" + fmt(pv) + " level=" + fmt(kKsLevel)};
}

Outcome robustness() {
  auto s = study::preset("desk-ln-nonlinear");
  s.threads = workers();
  const auto r = study::run_study(s);
  const auto classical = only_cell(r, "classical");
  const auto shifted = only_cell(r, "gam_nl:cov:variance:1");
  const double gap = classical.rate - shifted.rate;
  return {gap >= kRobustGap, "classical=" + fmt(classical.rate) + " gam_nl=" + fmt(shifted.rate) + " gap=" + fmt(gap)};
}

Outcome power_ordering() {
  auto s = study::preset("desk-multi-nonlinear");
  s.threads = workers();
  const auto r = study::run_study(s);
  const auto cov = only_cell(r, "gam_l:cov:variance:1");
  const auto dcov = only_cell(r, "gam_l:dcov:variance:1");
  return {dcov.rate >= cov.rate, "dcov=" + fmt(dcov.rate) + " cov=" + fmt(cov.rate)};
}

Outcome theta_identity() {
  SeededStream rng(77);
  const auto d = fields::generate_design(fields::Design::multi_dependent, 60, fields::Trend::nonlinear, rng);
  const std::vector<std::string> nuisance{"x2", "x3", "x4"};
  const Eigen::MatrixXd raw = d.columns(nuisance);
  const Eigen::VectorXd x = d.covariates.col(0);
  double worst = 0.0;
  bool exact = true;
  for (auto g : {regress::GFitter::linear, regress::GFitter::nw, regress::GFitter::spline})
    worst = std::max(worst, (regress::reconstruct_nuisance(raw, x, 1.0, g).reconstructed - raw).cwiseAbs().maxCoeff());
  for (auto k : {regress::FitterKind::lm, regress::FitterKind::gls, regress::FitterKind::nw, regress::FitterKind::gam_l,
                 regress::FitterKind::gam_nl}) {
    TestConfig c;
    c.fitter = k;
    c.plan.replicates = 99;
    c.plan.seed = 31;
    const auto t = test_covariate(d, "x1", nuisance, c);
    regress::FitData fd{d.locations, d.window, raw, d.response};
    const Eigen::VectorXd e = regress::residualize(k, fd, c.fit).residuals();
    const auto direct = shift::run_shift_test({e.data(), d.size()}, {x.data(), d.size()}, d.locations, d.window, c.plan);
    if (t.p_value() != direct.p_value) exact = false;
  }
  return {worst <= kThetaTol && exact, "max|x~-x|=" + fmt(worst) + " p bit-exact=" + (exact ? "yes" : "no")};
}

// Plain n x n double-centring, independent of the library's O(n) memory version.
double dcov_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  auto centred = [n](const std::vector<double>& v) {
    std::vector<std::vector<double>> m(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m[i][j] = std::abs(v[i] - v[j]);
    std::vector<double> row(n, 0.0), col(n, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        row[i] += m[i][j] / n;
        col[j] += m[i][j] / n;
        grand += m[i][j] / (n * n);
      }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m[i][j] += grand - row[i] - col[j];
    return m;
  };
  const auto A = centred(a), B = centred(b);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s += A[i][j] * B[i][j];
  return s / static_cast<double>(n * n);
}

Outcome statistic_oracles() {
  SeededStream rng(606);
  std::size_t kendall_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + rng.next_u64() % 299;
    const bool ties = i % 2 == 1;
    std::vector<double> a(n), b(n);
    for (std::size_t j = 0; j < n; ++j) {
      a[j] = ties ? std::floor(rng.uniform(0.0, 6.0)) : rng.normal();
      b[j] = ties ? std::floor(rng.uniform(0.0, 6.0)) : rng.normal();
    }
    if (stats::kendall_s(a, b) != stats::kendall_s_brute(a, b)) ++kendall_bad;
  }
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 4 + rng.next_u64() % 197;
    std::vector<double> a(n), b(n);
    for (std::size_t j = 0; j < n; ++j) {
      a[j] = rng.normal();
      b[j] = a[j] * a[j] + rng.normal();
    }
    const double ref = dcov_oracle(a, b);
    worst = std::max(worst, std::abs(stats::distance_covariance(a, b).value - ref) / std::abs(ref));
  }
  return {kendall_bad == 0 && worst <= kDcovRelTol,
          "kendall mismatches=" + std::to_string(kendall_bad) + "/1000 dcov max rel=" + fmt(worst)};
}

double sampler_deviation(const CovarianceKernel& k, std::uint64_t seed) {
  std::vector<geom::Point> pts;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) pts.push_back({0.1 + 0.2 * i, 0.1 + 0.2 * j});
  constexpr int draws = 2000;
  Eigen::MatrixXd z(draws, 25);
  SeededStream rng(seed);
  for (int r = 0; r < draws; ++r) z.row(r) = fields::sample_gp(pts, k, 0.0, rng).transpose();
  const Eigen::MatrixXd c = z.rowwise() - z.colwise().mean();
  const Eigen::MatrixXd emp = c.transpose() * c / (draws - 1);
  return (emp - fields::covariance_matrix(pts, k)).cwiseAbs().maxCoeff();
}

Outcome sampler_fidelity() {
  const double se = sampler_deviation(CovarianceKernel::squared_exponential(1.0, 0.2), 1);
  const double ex = sampler_deviation(CovarianceKernel::exponential(1.0, 0.2), 2);
  const double ma = sampler_deviation(CovarianceKernel::matern(1.0, 0.1, 2.0), 3);
  // scenario kernels with nuggets, relative to their total variance; not part of the gate
  auto rel = [](const CovarianceKernel& k, std::uint64_t seed) {
    return sampler_deviation(k, seed) / (k.variance + k.nugget);
  };
  const double se1 = rel(fields::scenario_kernel(fields::Scenario::SE1), 4);
  const double e1 = rel(fields::scenario_kernel(fields::Scenario::E1), 5);
  const double worst = std::max({se, ex, ma});
  return {worst < kSamplerTol, "SE=" + fmt(se) + " Exp=" + fmt(ex) + " Matern2=" + fmt(ma) +
                                   " (scenario SE1 rel=" + fmt(se1) + " E1 rel=" + fmt(e1) + ")"};
}

Outcome affine_reproduction() {
  SeededStream rng(8);
  std::vector<geom::Point> pts(80);
  for (auto& q : pts) q = {rng.uniform(), rng.uniform()};
  Eigen::MatrixXd x(80, 1);
  Eigen::VectorXd y(80);
  for (Eigen::Index i = 0; i < 80; ++i) {
    x(i, 0) = rng.normal();
    y(i) = 0.3 + 1.7 * pts[static_cast<std::size_t>(i)].x - 2.2 * pts[static_cast<std::size_t>(i)].y;
  }
  regress::FitData fd{pts, geom::Window::unit(), x, y};
  double worst = 0.0;
  for (double lambda : regress::GamOptions::default_lambda_grid()) {
    worst = std::max(worst, regress::fit_gam_fixed(fd, regress::GamMean::linear, {lambda}).residuals().cwiseAbs().maxCoeff());
    worst = std::max(worst,
                     regress::fit_gam_fixed(fd, regress::GamMean::nonlinear, {lambda, lambda}).residuals().cwiseAbs().maxCoeff());
  }
  return {worst < kAffineTol, "max residual=" + fmt(worst)};
}

Outcome binomial_bands() {
  const auto a = study::binomial_band(2000, 0.05);
  const auto b = study::binomial_band(1000, 0.05);
  const bool ok = a.first == 0.041 && a.second == 0.060 && b.first == 0.037 && b.second == 0.064;
  return {ok, "R=2000 (" + fmt(a.first) + "," + fmt(a.second) + ") R=1000 (" + fmt(b.first) + "," + fmt(b.second) + ")"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool run_cli(const std::string& args, const fs::path& out) {
  const std::string cmd = std::string(RSHIFT_CLI) + " " + args + " --out " + out.string() + " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) && WEXITSTATUS(rc) == 0;
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / ("rshift_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string data = (dir / "data.csv").string();
  if (!run_cli("simulate --design multi_independent --n 80 --seed 12", data)) return {false, "simulate failed"};
  const std::vector<std::pair<std::string, std::string>> runs{
      {"test", "test --data " + data + " --interest x2 --statistic dcov --K 99 --seed 5 --threads 3"},
      {"select", "select --data " + data + " --fitter lm --K 49 --alpha 0.2 --seed 5"},
      {"study", "study --R 100 --K 19 --n 30 --seed 5 --threads 3 --set methods=lm:kendall:torus,classical"},
  };
  std::string detail;
  bool ok = true;
  for (const auto& [name, args] : runs) {
    const auto a = dir / (name + "_a.json"), b = dir / (name + "_b.json");
    const bool same = run_cli(args, a) && run_cli(args, b) && slurp(a) == slurp(b) && !slurp(a).empty();
    ok = ok && same;
    detail += name + (same ? "=identical " : "=DIFFERENT ");
  }
  fs::remove_all(dir);
  return {ok, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"nominal level", nominal_level},
      {"exactness (KS uniformity)", exactness},
      {"robustness direction", robustness},
      {"power ordering", power_ordering},
      {"theta endpoint identity", theta_identity},
      {"statistic oracles", statistic_oracles},
      {"sampler fidelity", sampler_fidelity},
      {"thin-plate affine reproduction", affine_reproduction},
      {"binomial bands", binomial_bands},
      {"CLI determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail << " ["
              << fmt(secs, 3) << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
