#include <doctest.h>

#include <algorithm>
#include <vector>

#include "rshift/error.hpp"
#include "rshift/random_fields.hpp"
#include "rshift/selection.hpp"

using namespace rshift;

namespace {

SpatialDataset multi(std::uint64_t seed, std::size_t n = 80) {
  SeededStream rng(seed);
  return fields::generate_design(fields::Design::multi_independent, n, fields::Trend::linear, rng);
}

SelectionConfig quick(double alpha = 0.05) {
  SelectionConfig c;
  c.alpha = alpha;
  c.test.plan.replicates = 99;
  c.seed = 7;
  return c;
}

}  // namespace

TEST_CASE("exact linear driver is retained with the smallest p-value") {
  SeededStream rng(1);
  auto d = fields::generate_design(fields::Design::single_nuisance, 60, fields::Trend::linear, rng);
  d.covariate_names = {"x1"};
  d.covariates = d.covariates.col(0).eval();
  d.response = (-0.5 + d.covariates.col(0).array()).matrix();
  auto c = quick();
  c.test.fitter = regress::FitterKind::lm;
  const auto t = backward_select(d, {"x1"}, c);
  REQUIRE(t.rounds.size() == 1);
  CHECK(t.rounds[0].p_values[0] == doctest::Approx(1.0 / 100.0));
  CHECK(t.final_set == std::vector<std::string>{"x1"});
  CHECK_FALSE(t.rounds[0].removed.has_value());
}

TEST_CASE("duplicated covariate is removed first") {
  auto d = multi(2);
  d.covariate_names.push_back("x2dup");
  d.covariates.conservativeResize(Eigen::NoChange, 5);
  d.covariates.col(4) = d.covariates.col(1);
  const auto t = backward_select(d, d.covariate_names, quick());
  REQUIRE_FALSE(t.rounds.empty());
  const auto& r0 = t.rounds[0];
  // both copies are degenerate; ties go to the earlier column
  CHECK(r0.degenerate[1]);
  CHECK(r0.degenerate[4]);
  CHECK(r0.p_values[1] == 1.0);
  REQUIRE(r0.removed.has_value());
  CHECK(*r0.removed == "x2");
  if (t.rounds.size() > 1) CHECK_FALSE(t.rounds[1].degenerate[3]);
}

TEST_CASE("alpha = 1 stops after one round with everything kept") {
  const auto d = multi(3);
  const auto t = backward_select(d, d.covariate_names, quick(1.0));
  CHECK(t.rounds.size() == 1);
  CHECK(t.final_set == d.covariate_names);
}

TEST_CASE("active set shrinks and the trace is reproducible") {
  const auto d = multi(4);
  const auto c = quick(0.2);
  const auto a = backward_select(d, d.covariate_names, c);
  const auto b = backward_select(d, d.covariate_names, c);
  CHECK(a.rounds.size() <= d.covariate_names.size() + 1);
  for (std::size_t r = 1; r < a.rounds.size(); ++r) CHECK(a.rounds[r].active.size() + 1 == a.rounds[r - 1].active.size());
  REQUIRE(a.rounds.size() == b.rounds.size());
  for (std::size_t r = 0; r < a.rounds.size(); ++r) {
    CHECK(a.rounds[r].p_values == b.rounds[r].p_values);
    CHECK(a.rounds[r].removed == b.rounds[r].removed);
  }
  CHECK(a.final_set == b.final_set);
  // the last round either keeps everything at level alpha or empties the set
  const auto& last = a.rounds.back();
  if (!a.final_set.empty())
    for (double p : last.p_values) CHECK(p <= 0.2);
}

TEST_CASE("classical selection uses the ML t-test") {
  const auto d = multi(5, 60);
  auto c = quick();
  c.classical = true;
  const auto t = backward_select(d, d.covariate_names, c);
  CHECK_FALSE(t.rounds.empty());
  for (double p : t.rounds[0].p_values) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
}

TEST_CASE("selection argument checks") {
  const auto d = multi(6, 40);
  CHECK_THROWS_AS(backward_select(d, {}, quick()), Error);
  CHECK_THROWS_AS(backward_select(d, d.covariate_names, quick(0.0)), Error);
  CHECK_THROWS_AS(backward_select(d, d.covariate_names, quick(1.5)), Error);
  CHECK_THROWS_AS(backward_select(d, {"x1", "nope"}, quick()), Error);
}
