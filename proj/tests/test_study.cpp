#include <doctest.h>

#include <vector>

#include "rshift/error.hpp"
#include "rshift/study.hpp"

using namespace rshift;
using namespace rshift::study;

namespace {

StudySpec small_spec() {
  StudySpec s;
  s.replications = 100;
  s.n = 40;
  s.plan.replicates = 19;
  s.seed = 11;
  s.methods = {MethodSpec::parse("lm:cov:variance"), MethodSpec::parse("gam_l:cov:torus:1")};
  return s;
}

}  // namespace

TEST_CASE("binomial bands") {
  CHECK(binomial_band(2000, 0.05) == std::pair<double, double>{0.041, 0.060});
  CHECK(binomial_band(1000, 0.05) == std::pair<double, double>{0.037, 0.064});
  const auto wide = binomial_band(10000000, 0.05);
  CHECK(wide.first == doctest::Approx(0.05));
  CHECK(wide.second == doctest::Approx(0.05));
  const auto narrow = binomial_band(500, 0.05, 0.99);
  CHECK(narrow.first < 0.05);
  CHECK(narrow.second > 0.05);
  CHECK_THROWS_AS(binomial_band(0, 0.05), Error);
  CHECK_THROWS_AS(binomial_band(100, 0.0), Error);
  CHECK_THROWS_AS(binomial_band(100, 0.05, 1.0), Error);
}

TEST_CASE("method strings") {
  const auto m = MethodSpec::parse("gam_nl:dcov:torus:0.25:spline");
  CHECK(m.fitter == regress::FitterKind::gam_nl);
  CHECK(m.statistic == stats::Statistic::dcov);
  CHECK(m.correction == shift::Correction::torus);
  CHECK(m.theta == 0.25);
  CHECK(m.g_fitter == regress::GFitter::spline);
  CHECK(m.label() == "gam_nl:dcov:torus:0.25:spline");
  CHECK(MethodSpec::parse(m.label()).label() == m.label());
  CHECK(MethodSpec::parse("classical").classical);
  CHECK(MethodSpec::parse("lm:kendall:variance").label() == "lm:kendall:variance:1");
  CHECK_THROWS_AS(MethodSpec::parse("lm:cov"), Error);
  CHECK_THROWS_AS(MethodSpec::parse("lm:cov:variance:x"), Error);
  CHECK_THROWS_AS(MethodSpec::parse("lm:cov:mirror"), Error);
}

TEST_CASE("presets") {
  for (const auto& name : preset_names()) {
    const auto s = preset(name);
    CHECK(s.name == name);
    s.validate();
  }
  const auto p51 = preset("paper-5.1");
  CHECK(p51.replications == 2000);
  CHECK(p51.plan.replicates == 499);
  CHECK(p51.scenarios.size() == 6);
  const auto desk = preset("desk-null-se1");
  CHECK(desk.replications == 500);
  CHECK(desk.plan.replicates == 199);
  CHECK(desk.n == 100);
  CHECK(desk.interest == "x2");
  CHECK(desk.methods.size() == 1);
  CHECK(desk.methods[0].label() == "gam_l:cov:variance:1");
  CHECK(preset("supp-n400").window == geom::Window(0.0, 2.0, 0.0, 2.0));
  CHECK_THROWS_AS(preset("paper-9"), Error);
}

TEST_CASE("spec validation") {
  auto s = small_spec();
  s.replications = 99;
  CHECK_THROWS_AS(run_study(s), Error);
  s = small_spec();
  s.interest = "x4";
  CHECK_THROWS_AS(run_study(s), Error);
  s = small_spec();
  s.methods.clear();
  CHECK_THROWS_AS(run_study(s), Error);
}

TEST_CASE("study accounting, determinism and thread independence") {
  auto s = small_spec();
  const auto a = run_study(s);
  s.threads = 4;
  const auto b = run_study(s);
  REQUIRE(a.cells.size() == 2);
  CHECK(a.band_lo == 0.01);
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    const auto& c = a.cells[i];
    CHECK(c.rejections + c.non_rejections + c.errors == c.replications);
    CHECK(c.rejections == b.cells[i].rejections);
    CHECK(c.rate == b.cells[i].rate);
    CHECK(c.method == b.cells[i].method);
    CHECK_FALSE(c.aborted);
  }
}

TEST_CASE("alpha = 1 rejects every replicate") {
  auto s = small_spec();
  s.alpha = 1.0;
  s.methods.push_back(MethodSpec::parse("classical"));
  const auto r = run_study(s);
  for (const auto& c : r.cells) CHECK(c.rate == 1.0);
}

TEST_CASE("select mode reports retention") {
  auto s = small_spec();
  s.design = fields::Design::multi_independent;
  s.mode = StudyMode::select;
  s.methods = {MethodSpec::parse("lm:cov:variance")};
  const auto r = run_study(s);
  REQUIRE(r.cells.size() == 1);
  const auto& c = r.cells[0];
  CHECK(c.retained.size() == 4);
  CHECK(c.retained.at("x2") == c.rejections);
}

TEST_CASE("linear power smoke") {
  auto s = preset("desk-power-linear");
  s.threads = 4;
  const auto r = run_study(s);
  CHECK(r.cells[0].rate > 0.5);
}
