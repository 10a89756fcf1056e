#include <doctest.h>

#include <vector>

#include "rshift/error.hpp"
#include "rshift/pipeline.hpp"
#include "rshift/random_fields.hpp"

using namespace rshift;
using regress::FitterKind;

namespace {

SpatialDataset design(std::uint64_t seed, std::size_t n, double effect = 0.0) {
  SeededStream rng(seed);
  fields::DesignOptions o;
  o.effect = effect;
  return fields::generate_design(fields::Design::single_nuisance, n, fields::Trend::linear, rng, o);
}

}  // namespace

TEST_CASE("theta = 1 leaves residuals equal to the raw-covariate fit") {
  const auto d = design(1, 60);
  for (auto k : {FitterKind::lm, FitterKind::gls, FitterKind::nw, FitterKind::gam_l, FitterKind::gam_nl}) {
    TestConfig c;
    c.fitter = k;
    c.plan.replicates = 19;
    c.plan.seed = 5;
    const auto field = compute_residuals(d, "x2", {"x1"}, c);
    CHECK(field.max_reconstruction_change == 0.0);
    regress::FitData fd{d.locations, d.window, d.columns({"x1"}), d.response};
    const auto direct = regress::residualize(k, fd, c.fit);
    CHECK((field.residuals - direct.residuals()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("theta below 1 changes the nuisance and the residuals") {
  SeededStream rng(2);
  auto d = fields::generate_design(fields::Design::multi_dependent, 60, fields::Trend::linear, rng);
  TestConfig c;
  c.fitter = FitterKind::lm;
  c.theta = 0.0;
  const auto f0 = compute_residuals(d, "x1", {"x2", "x3", "x4"}, c);
  c.theta = 1.0;
  const auto f1 = compute_residuals(d, "x1", {"x2", "x3", "x4"}, c);
  CHECK(f0.max_reconstruction_change > 0.0);
  CHECK((f0.residuals - f1.residuals).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("a strong effect is detected and a null one usually is not") {
  const auto alt = design(3, 100, 2.0);
  TestConfig c;
  c.plan.replicates = 99;
  c.plan.seed = 1;
  const auto t = test_covariate(alt, "x2", {"x1"}, c);
  CHECK(t.p_value() <= 0.02);
  CHECK_FALSE(t.degenerate);
  CHECK(t.g_fitter == regress::GFitter::nw);
  CHECK(t.hyper.lambdas.size() == 1);

  c.plan.statistic = stats::Statistic::dcov;
  CHECK(test_covariate(alt, "x2", {"x1"}, c).p_value() <= 0.05);
  c.plan.statistic = stats::Statistic::kendall;
  c.plan.correction = shift::Correction::torus;
  CHECK(test_covariate(alt, "x2", {"x1"}, c).p_value() <= 0.05);
}

TEST_CASE("duplicated nuisance column is degenerate") {
  auto d = design(4, 50);
  d.covariate_names.push_back("x2copy");
  d.covariates.conservativeResize(Eigen::NoChange, 3);
  d.covariates.col(2) = d.covariates.col(1);
  TestConfig c;
  c.plan.replicates = 19;
  const auto t = test_covariate(d, "x2", {"x1", "x2copy"}, c);
  CHECK(t.degenerate);
  CHECK(t.p_value() == 1.0);
  CHECK(t.degenerate_reason.find("x2copy") != std::string::npos);
}

TEST_CASE("pipeline input errors") {
  const auto d = design(5, 30);
  TestConfig c;
  c.plan.replicates = 19;
  CHECK_THROWS_AS(test_covariate(d, "x2", {"x2"}, c), Error);
  CHECK_THROWS_AS(test_covariate(d, "x9", {"x1"}, c), Error);
  CHECK_THROWS_AS(test_covariate(d, "x2", {"x9"}, c), Error);
  c.theta = -0.1;
  CHECK_THROWS_AS(test_covariate(d, "x2", {"x1"}, c), Error);
  auto bad = d;
  bad.locations[0] = {2.0, 2.0};
  c.theta = 1.0;
  CHECK_THROWS_AS(test_covariate(bad, "x2", {"x1"}, c), Error);
}

TEST_CASE("no nuisance columns") {
  const auto d = design(6, 40);
  TestConfig c;
  c.fitter = FitterKind::lm;
  c.plan.replicates = 19;
  const auto f = compute_residuals(d, "x2", {}, c);
  CHECK((f.residuals.array() - (d.response.array() - d.response.mean())).abs().maxCoeff() < 1e-12);
  CHECK(test_covariate(d, "x2", {}, c).p_value() > 0.0);
}

TEST_CASE("redundant nuisance columns are left out of the fit") {
  auto d = design(7, 50);
  d.covariate_names.push_back("x1scaled");
  d.covariates.conservativeResize(Eigen::NoChange, 3);
  d.covariates.col(2) = 2.0 * d.covariates.col(0).array() + 1.0;
  TestConfig c;
  const auto both = compute_residuals(d, "x2", {"x1", "x1scaled"}, c);
  const auto one = compute_residuals(d, "x2", {"x1"}, c);
  CHECK(both.redundant_nuisance == std::vector<std::string>{"x1scaled"});
  CHECK((both.residuals - one.residuals).cwiseAbs().maxCoeff() == 0.0);
}
