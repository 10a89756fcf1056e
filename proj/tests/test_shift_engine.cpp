#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "rshift/error.hpp"
#include "rshift/random_fields.hpp"
#include "rshift/shift_engine.hpp"

using namespace rshift;
using namespace rshift::shift;
using geom::Point;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no exception");
  return ErrorCode::InvalidParameter;
}

struct Fields {
  std::vector<Point> pts;
  std::vector<double> e, x;
};

Fields independent_fields(std::uint64_t seed, std::size_t n) {
  SeededStream rng(seed);
  Fields f;
  f.pts.resize(n);
  for (auto& p : f.pts) p = {rng.uniform(), rng.uniform()};
  const auto k = fields::CovarianceKernel::squared_exponential(1.0, 0.2, 1.0);
  const auto a = fields::sample_gp(f.pts, k, 0.0, rng);
  const auto b = fields::sample_gp(f.pts, fields::CovarianceKernel::exponential(1.0, 0.2), 0.0, rng);
  f.e.assign(a.data(), a.data() + a.size());
  f.x.assign(b.data(), b.data() + b.size());
  return f;
}

}  // namespace

TEST_CASE("monte carlo p-value arithmetic") {
  std::vector<double> reps(19);
  for (int k = 0; k < 19; ++k) reps[static_cast<std::size_t>(k)] = 0.1 * (k - 9);
  CHECK(monte_carlo_p_value(5.0, reps, Tail::two_sided) == doctest::Approx(0.05));
  CHECK(monte_carlo_p_value(-5.0, reps, Tail::two_sided) == doctest::Approx(0.05));
  CHECK(monte_carlo_p_value(-5.0, reps, Tail::upper) == doctest::Approx(1.0));
  CHECK(monte_carlo_p_value(-5.0, reps, Tail::lower) == doctest::Approx(0.05));
  const std::vector<double> same(19, 0.3);
  CHECK(monte_carlo_p_value(0.3, same, Tail::two_sided) == 1.0);
  CHECK(monte_carlo_p_value(0.3, same, Tail::upper) == 1.0);
  // ties count as extreme
  CHECK(monte_carlo_p_value(0.9, reps, Tail::upper) == doctest::Approx(2.0 / 20.0));
}

TEST_CASE("enum parsing and defaults") {
  CHECK(parse_correction("torus") == Correction::torus);
  CHECK(parse_tail(to_string(Tail::two_sided)) == Tail::two_sided);
  CHECK(parse_pairing("auto") == PairingMode::automatic);
  CHECK(parse_shift_mode("fixed_grid") == ShiftMode::fixed_grid);
  CHECK_THROWS_AS(parse_correction("reflect"), Error);
  CHECK(default_tail(stats::Statistic::dcov) == Tail::upper);
  CHECK(default_tail(stats::Statistic::covariance) == Tail::two_sided);
  CHECK(default_tail(stats::Statistic::kendall) == Tail::two_sided);
}

TEST_CASE("plan validation") {
  ShiftPlan p;
  p.replicates = 18;
  CHECK_THROWS_AS(p.validate(), Error);
  p.replicates = 19;
  p.min_retained = 3;
  CHECK_THROWS_AS(p.validate(), Error);
  p.min_retained = 4;
  p.r_max_x = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p.r_max_x = 0.3;
  p.validate();

  const auto f = independent_fields(1, 30);
  p.r_max_x = 1.0;  // not smaller than the window side
  CHECK_THROWS_AS(run_shift_test(f.e, f.x, f.pts, geom::Window::unit(), p), Error);
  p.r_max_x.reset();
  std::vector<double> shorter(f.e.begin(), f.e.end() - 1);
  CHECK(code_of([&] { (void)run_shift_test(shorter, f.x, f.pts, geom::Window::unit(), p); }) ==
        ErrorCode::LengthMismatch);
}

TEST_CASE("fixed grid shifts") {
  const auto v = fixed_grid_shifts(4, 0.4, 0.5, 0.5);
  REQUIRE(v.size() == 4);
  const std::vector<geom::Shift> expect{{-0.45, -0.45}, {0.45, -0.45}, {-0.45, 0.45}, {0.45, 0.45}};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(v[i].dx == doctest::Approx(expect[i].dx));
    CHECK(v[i].dy == doctest::Approx(expect[i].dy));
  }
  CHECK(code_of([] { (void)fixed_grid_shifts(2, 2.0 * 0.5 * std::sqrt(2.0) + 0.01, 0.5, 0.5); }) ==
        ErrorCode::InfeasibleSeparation);

  for (double sep : {0.0, 0.05, 0.07}) {
    const auto g = fixed_grid_shifts(99, sep, 0.5, 0.4);
    REQUIRE(g.size() >= 99);
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK_FALSE(g[i].is_zero());
      CHECK(std::hypot(g[i].dx, g[i].dy) >= sep);
      CHECK(std::abs(g[i].dx) <= 0.45 + 1e-12);
      CHECK(std::abs(g[i].dy) <= 0.36 + 1e-12);
      for (std::size_t j = 0; j < i; ++j) CHECK(std::hypot(g[i].dx - g[j].dx, g[i].dy - g[j].dy) >= sep);
    }
  }
}

TEST_CASE("determinism, thread independence and p-value lattice") {
  const auto f = independent_fields(3, 80);
  for (auto corr : {Correction::variance, Correction::torus})
    for (auto st : {stats::Statistic::covariance, stats::Statistic::dcov, stats::Statistic::kendall}) {
      ShiftPlan p;
      p.correction = corr;
      p.statistic = st;
      p.replicates = 49;
      p.seed = 42;
      const auto a = run_shift_test(f.e, f.x, f.pts, geom::Window::unit(), p);
      p.threads = 4;
      const auto b = run_shift_test(f.e, f.x, f.pts, geom::Window::unit(), p);
      CHECK(a.p_value == b.p_value);
      REQUIRE(a.replicates.size() == b.replicates.size());
      for (std::size_t k = 0; k < a.replicates.size(); ++k) {
        CHECK(a.replicates[k].shift == b.replicates[k].shift);
        CHECK(a.replicates[k].raw == b.replicates[k].raw);
      }
      const double m = a.p_value * static_cast<double>(a.effective_replicates + 1);
      CHECK(std::abs(m - std::round(m)) < 1e-9);
      CHECK(m >= 1.0);
      for (const auto& r : a.replicates) CHECK_FALSE(r.shift.is_zero());
      if (corr == Correction::torus) {
        for (const auto& r : a.replicates) {
          CHECK(r.retained == 80);
          CHECK(r.shift.dx >= 0.0);
          CHECK(r.shift.dx < 1.0);
        }
      } else {
        for (const auto& r : a.replicates) {
          CHECK(std::abs(r.shift.dx) <= 0.5);
          CHECK(r.retained >= p.min_retained);
        }
      }
    }
}

TEST_CASE("perfectly associated fields give the smallest p-value") {
  // residual equals a smooth function of location, covariate identical: unshifted pairing is the best match
  std::vector<Point> pts;
  std::vector<double> e;
  for (int j = 0; j < 12; ++j)
    for (int i = 0; i < 12; ++i) {
      const Point p{(i + 0.5) / 12, (j + 0.5) / 12};
      pts.push_back(p);
      e.push_back(std::sin(9.0 * p.x) + std::cos(7.0 * p.y) + 0.01 * i * j);
    }
  ShiftPlan p;
  p.replicates = 99;
  p.seed = 1;
  p.pairing = PairingMode::nearest;
  const auto r = run_shift_test(e, e, pts, geom::Window::unit(), p);
  CHECK(r.p_value == doctest::Approx(1.0 / (r.effective_replicates + 1)));
}

TEST_CASE("shift exhaustion and fixed-grid drops") {
  const std::vector<Point> corners{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  const std::vector<double> e{1, 2, 3, 4}, x{4, 1, 3, 2};
  ShiftPlan p;
  p.replicates = 19;
  CHECK(code_of([&] { (void)run_shift_test(e, x, corners, geom::Window::unit(), p); }) == ErrorCode::ShiftExhausted);
  p.mode = ShiftMode::fixed_grid;
  const auto r = run_shift_test(e, x, corners, geom::Window::unit(), p);
  CHECK(r.dropped == 19);
  CHECK(r.effective_replicates == 0);
  CHECK(r.p_value == 1.0);
}

TEST_CASE("degenerate observed dcov gives p = 1") {
  const auto f = independent_fields(4, 40);
  const std::vector<double> flat(40, 2.0);
  ShiftPlan p;
  p.statistic = stats::Statistic::dcov;
  p.replicates = 19;
  const auto r = run_shift_test(flat, f.x, f.pts, geom::Window::unit(), p);
  CHECK(r.degenerate);
  CHECK(r.p_value == 1.0);
}

TEST_CASE("grid data with lattice shifts pair exactly") {
  std::vector<Point> pts;
  std::vector<double> e, x;
  SeededStream rng(6);
  for (int j = 0; j < 10; ++j)
    for (int i = 0; i < 10; ++i) {
      pts.push_back({(i + 0.5) / 10, (j + 0.5) / 10});
      e.push_back(rng.normal());
      x.push_back(rng.normal());
    }
  for (auto corr : {Correction::torus, Correction::variance}) {
    ShiftPlan p;
    p.correction = corr;
    p.replicates = 39;
    p.pairing = PairingMode::grid_exact;
    const auto r = run_shift_test(e, x, pts, geom::Window::unit(), p);
    CHECK(r.grid_pairing);
    for (const auto& rec : r.replicates) {
      const double cx = rec.shift.dx * 10, cy = rec.shift.dy * 10;
      CHECK(std::abs(cx - std::round(cx)) < 1e-9);
      CHECK(std::abs(cy - std::round(cy)) < 1e-9);
      if (corr == Correction::torus) {
        CHECK(rec.retained == 100);
      } else {
        const auto ix = static_cast<std::size_t>(std::lround(std::abs(cx)));
        const auto iy = static_cast<std::size_t>(std::lround(std::abs(cy)));
        CHECK(rec.retained == (10 - ix) * (10 - iy));
      }
    }
    // lattice shifts with plain nearest pairing land on the same sites
    ShiftPlan q = p;
    q.pairing = PairingMode::nearest;
    q.mode = ShiftMode::fixed_grid;
    q.r_max_x = q.r_max_y = 0.5;  // lattice at +-0.45 with spacing 0.1 for m = 10
    p.mode = ShiftMode::fixed_grid;
    p.r_max_x = p.r_max_y = 0.5;
    const auto a = run_shift_test(e, x, pts, geom::Window::unit(), p);
    const auto b = run_shift_test(e, x, pts, geom::Window::unit(), q);
    if (corr == Correction::torus) {
      // nearest pairing on a non-wrapped lattice is not the same as exact index arithmetic,
      // so only compare the observed value here
      CHECK(a.observed.raw == b.observed.raw);
    }
  }
  std::vector<Point> holed(pts.begin(), pts.end() - 1);
  std::vector<double> e2(e.begin(), e.end() - 1), x2(x.begin(), x.end() - 1);
  ShiftPlan p;
  p.replicates = 19;
  p.pairing = PairingMode::grid_exact;
  CHECK_THROWS_AS(run_shift_test(e2, x2, holed, geom::Window::unit(), p), Error);
}

TEST_CASE("standardized covariance variance does not drift with shift size") {
  const auto f = independent_fields(9, 200);
  ShiftPlan p;
  p.replicates = 999;
  p.seed = 3;
  p.threads = 4;
  const auto r = run_shift_test(f.e, f.x, f.pts, geom::Window::unit(), p);
  std::vector<const ReplicateRecord*> recs;
  for (const auto& rec : r.replicates) recs.push_back(&rec);
  std::sort(recs.begin(), recs.end(), [](auto* a, auto* b) { return a->retained > b->retained; });
  auto var = [&](std::size_t lo, std::size_t hi) {
    double s = 0, s2 = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      s += recs[i]->standardized;
      s2 += recs[i]->standardized * recs[i]->standardized;
    }
    const double m = static_cast<double>(hi - lo);
    return (s2 - s * s / m) / (m - 1);
  };
  const double big = var(0, recs.size() / 3), small = var(2 * recs.size() / 3, recs.size());
  CHECK(small / big > 0.7);
  CHECK(small / big < 1.3);
}
