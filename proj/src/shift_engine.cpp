#include "rshift/shift_engine.hpp"

#include <cmath>
#include <string>

#include "rshift/error.hpp"
#include "rshift/parallel.hpp"
#include "rshift/rng.hpp"

namespace rshift::shift {
namespace {

struct Context {
  std::span<const double> e, x;
  std::span<const geom::Point> locs;
  const geom::Window* window;
  const ShiftPlan* plan;
  const geom::GridLayout* grid;  // null unless lattice pairing is used
};

// Paired values for one shift; false when too few residuals are retained.
bool pair_values(const Context& c, geom::Shift v, std::vector<double>& ev, std::vector<double>& xv) {
  ev.clear();
  xv.clear();
  const std::size_t n = c.locs.size();
  const auto& w = *c.window;
  if (c.grid) {
    const auto& g = *c.grid;
    const auto a = static_cast<long>(std::lround(v.dx / g.dx));
    const auto b = static_cast<long>(std::lround(v.dy / g.dy));
    const auto nx = static_cast<long>(g.nx), ny = static_cast<long>(g.ny);
    for (std::size_t i = 0; i < n; ++i) {
      long sx = static_cast<long>(g.ix[i]) - a, sy = static_cast<long>(g.iy[i]) - b;
      if (c.plan->correction == Correction::torus) {
        sx = ((sx % nx) + nx) % nx;
        sy = ((sy % ny) + ny) % ny;
      } else if (sx < 0 || sy < 0 || sx >= nx || sy >= ny) {
        continue;
      }
      ev.push_back(c.e[i]);
      xv.push_back(c.x[g.index_at(static_cast<std::size_t>(sx), static_cast<std::size_t>(sy))]);
    }
  } else if (c.plan->correction == Correction::torus) {
    std::vector<geom::Point> moved(n);
    for (std::size_t j = 0; j < n; ++j) moved[j] = geom::torus_wrap(c.locs[j], v, w);
    const auto pairing = geom::nearest_pairing(c.locs, moved);
    for (const auto& p : pairing.pairs) {
      ev.push_back(c.e[p.residual_index]);
      xv.push_back(c.x[p.covariate_index]);
    }
  } else {
    if (std::abs(v.dx) >= w.width() || std::abs(v.dy) >= w.height()) return false;
    const geom::Window wk = geom::intersect_window(w, v);
    std::vector<std::size_t> targets, sources;
    std::vector<geom::Point> target_pts, source_pts;
    for (std::size_t i = 0; i < n; ++i) {
      if (wk.contains(c.locs[i])) {
        targets.push_back(i);
        target_pts.push_back(c.locs[i]);
      }
      const geom::Point moved = c.locs[i] + v;
      if (wk.contains(moved)) {
        sources.push_back(i);
        source_pts.push_back(moved);
      }
    }
    if (targets.size() < c.plan->min_retained || sources.empty()) return false;
    const auto pairing = geom::nearest_pairing(target_pts, source_pts);
    for (const auto& p : pairing.pairs) {
      ev.push_back(c.e[targets[p.residual_index]]);
      xv.push_back(c.x[sources[p.covariate_index]]);
    }
  }
  return ev.size() >= c.plan->min_retained;
}

void evaluate(const ShiftPlan& plan, const std::vector<double>& ev, const std::vector<double>& xv,
              ReplicateRecord& rec) {
  rec.retained = ev.size();
  const auto s = stats::compute_statistic(plan.statistic, ev, xv);
  rec.raw = s.value;
  rec.mean_dist_residual = s.mean_dist_a;
  rec.mean_dist_covariate = s.mean_dist_b;
  if (plan.statistic == stats::Statistic::dcov && !(s.mean_dist_a > 0.0 && s.mean_dist_b > 0.0)) rec.dropped = true;
}

}  // namespace

std::string_view to_string(Correction c) { return c == Correction::torus ? "torus" : "variance"; }

std::string_view to_string(Tail t) {
  switch (t) {
    case Tail::two_sided: return "two";
    case Tail::upper: return "upper";
    case Tail::lower: return "lower";
  }
  return "unknown";
}

std::string_view to_string(ShiftMode m) { return m == ShiftMode::random ? "random" : "fixed_grid"; }

std::string_view to_string(PairingMode m) {
  switch (m) {
    case PairingMode::automatic: return "auto";
    case PairingMode::nearest: return "nearest";
    case PairingMode::grid_exact: return "grid_exact";
  }
  return "unknown";
}

Correction parse_correction(std::string_view name) {
  if (name == "torus") return Correction::torus;
  if (name == "variance") return Correction::variance;
  throw Error(ErrorCode::InvalidParameter, "unknown correction '" + std::string(name) + "'");
}

Tail parse_tail(std::string_view name) {
  if (name == "two" || name == "two_sided") return Tail::two_sided;
  if (name == "upper") return Tail::upper;
  if (name == "lower") return Tail::lower;
  throw Error(ErrorCode::InvalidParameter, "unknown tail '" + std::string(name) + "'");
}

ShiftMode parse_shift_mode(std::string_view name) {
  if (name == "random") return ShiftMode::random;
  if (name == "fixed_grid") return ShiftMode::fixed_grid;
  throw Error(ErrorCode::InvalidParameter, "unknown shift_mode '" + std::string(name) + "'");
}

PairingMode parse_pairing(std::string_view name) {
  if (name == "auto") return PairingMode::automatic;
  if (name == "nearest") return PairingMode::nearest;
  if (name == "grid_exact") return PairingMode::grid_exact;
  throw Error(ErrorCode::InvalidParameter, "unknown pairing '" + std::string(name) + "'");
}

Tail default_tail(stats::Statistic s) { return s == stats::Statistic::dcov ? Tail::upper : Tail::two_sided; }

void ShiftPlan::validate() const {
  if (replicates < 19) throw Error(ErrorCode::InvalidParameter, "K must be >= 19");
  if (min_retained < 4) throw Error(ErrorCode::InvalidParameter, "min_retained must be >= 4");
  if (max_redraws < 1) throw Error(ErrorCode::InvalidParameter, "max_redraws must be >= 1");
  if (r_max_x && !(*r_max_x > 0.0)) throw Error(ErrorCode::InvalidParameter, "r_max must be > 0");
  if (r_max_y && !(*r_max_y > 0.0)) throw Error(ErrorCode::InvalidParameter, "r_max must be > 0");
  if (!(separation >= 0.0)) throw Error(ErrorCode::InvalidParameter, "separation must be >= 0");
}

double monte_carlo_p_value(double observed, std::span<const double> replicates, Tail tail) {
  std::size_t extreme = 0;
  for (double s : replicates) {
    switch (tail) {
      case Tail::two_sided: extreme += std::abs(s) >= std::abs(observed); break;
      case Tail::upper: extreme += s >= observed; break;
      case Tail::lower: extreme += s <= observed; break;
    }
  }
  return static_cast<double>(1 + extreme) / static_cast<double>(replicates.size() + 1);
}

std::vector<geom::Shift> fixed_grid_shifts(std::size_t count, double separation, double r_max_x, double r_max_y) {
  if (count < 1) throw Error(ErrorCode::InvalidParameter, "fixed grid needs K >= 1");
  if (!(r_max_x > 0.0 && r_max_y > 0.0)) throw Error(ErrorCode::InvalidParameter, "r_max must be > 0");
  if (!(separation >= 0.0)) throw Error(ErrorCode::InvalidParameter, "separation must be >= 0");
  const double ax = 0.9 * r_max_x, ay = 0.9 * r_max_y;
  for (std::size_t m = 2;; ++m) {
    const double hx = 2.0 * ax / static_cast<double>(m - 1), hy = 2.0 * ay / static_cast<double>(m - 1);
    if (std::min(hx, hy) < separation) break;
    std::vector<geom::Shift> out;
    for (std::size_t iy = 0; iy < m && out.size() < count; ++iy) {
      const double y = 2 * iy == m - 1 ? 0.0 : -ay + static_cast<double>(iy) * hy;
      for (std::size_t ix = 0; ix < m && out.size() < count; ++ix) {
        const double x = 2 * ix == m - 1 ? 0.0 : -ax + static_cast<double>(ix) * hx;
        if (x == 0.0 && y == 0.0) continue;
        if (std::hypot(x, y) < separation) continue;
        out.push_back({x, y});
      }
    }
    if (out.size() >= count) return out;
    if (m > 100000) break;
  }
  throw Error(ErrorCode::InfeasibleSeparation,
              "no lattice of " + std::to_string(count) + " shifts with separation " + std::to_string(separation));
}

ShiftTestResult run_shift_test(std::span<const double> residuals, std::span<const double> covariate,
                               std::span<const geom::Point> locations, const geom::Window& window,
                               const ShiftPlan& plan) {
  plan.validate();
  const std::size_t n = locations.size();
  if (residuals.size() != n || covariate.size() != n)
    throw Error(ErrorCode::LengthMismatch, "residuals, covariate and locations must have equal length");
  if (n < plan.min_retained) throw Error(ErrorCode::TooFewPoints, "fewer observations than min_retained");
  for (const auto& p : locations)
    if (!window.contains(p)) throw Error(ErrorCode::DataError, "location outside the window");

  ShiftTestResult result;
  result.tail = plan.tail.value_or(default_tail(plan.statistic));
  const double rx = plan.r_max_x.value_or(window.width() / 2.0);
  const double ry = plan.r_max_y.value_or(window.height() / 2.0);
  if (!(rx < window.width() && ry < window.height()))
    throw Error(ErrorCode::InvalidParameter, "r_max must be smaller than the window side");
  const bool torus = plan.correction == Correction::torus;

  std::optional<geom::GridLayout> grid;
  if (plan.pairing != PairingMode::nearest) {
    grid = geom::detect_grid(locations, window);
    const bool usable = grid && (plan.correction == Correction::variance || grid->torus_compatible);
    if (!usable) {
      if (plan.pairing == PairingMode::grid_exact)
        throw Error(ErrorCode::InvalidParameter, "grid_exact pairing needs a complete lattice design");
      grid.reset();
    }
  }
  result.grid_pairing = grid.has_value();
  const Context ctx{residuals, covariate, locations, &window, &plan, grid ? &*grid : nullptr};

  std::vector<geom::Shift> fixed;
  if (plan.mode == ShiftMode::fixed_grid) fixed = fixed_grid_shifts(plan.replicates, plan.separation, rx, ry);

  {
    std::vector<double> ev(residuals.begin(), residuals.end()), xv(covariate.begin(), covariate.end());
    evaluate(plan, ev, xv, result.observed);
  }
  if (result.observed.dropped) {
    result.degenerate = true;
    result.p_value = 1.0;
    return result;
  }

  result.replicates.resize(plan.replicates);
  std::size_t workers = std::max<std::size_t>(plan.threads, 1);
  if (plan.statistic == stats::Statistic::dcov && plan.max_parallel_dcov > 0)
    workers = std::min(workers, plan.max_parallel_dcov);
  parallel_for(plan.replicates, workers, [&](std::size_t k) {
    ReplicateRecord& rec = result.replicates[k];
    SeededStream rng = SeededStream::derive(plan.seed, {static_cast<std::uint64_t>(k + 1)});
    std::vector<double> ev, xv;
    ev.reserve(n);
    xv.reserve(n);
    for (std::size_t attempt = 0;; ++attempt) {
      geom::Shift v;
      if (!fixed.empty())
        v = fixed[k];
      else if (torus)
        v = {rng.uniform(0.0, window.width()), rng.uniform(0.0, window.height())};
      else
        v = {rng.uniform(-rx, rx), rng.uniform(-ry, ry)};
      if (grid) v = {std::round(v.dx / grid->dx) * grid->dx, std::round(v.dy / grid->dy) * grid->dy};
      rec.shift = v;
      if (!v.is_zero() && pair_values(ctx, v, ev, xv)) {
        evaluate(plan, ev, xv, rec);
        return;
      }
      if (!fixed.empty()) {
        rec.retained = ev.size();
        rec.dropped = true;
        return;
      }
      ++rec.redraws;
      if (attempt + 1 >= plan.max_redraws)
        throw Error(ErrorCode::ShiftExhausted,
                    "replicate " + std::to_string(k + 1) + ": no admissible shift after " +
                        std::to_string(plan.max_redraws) + " draws");
    }
  });

  std::vector<ReplicateRecord*> live;
  live.push_back(&result.observed);
  for (auto& r : result.replicates) {
    result.total_redraws += r.redraws;
    if (r.dropped)
      ++result.dropped;
    else
      live.push_back(&r);
  }
  result.effective_replicates = live.size() - 1;

  if (torus) {
    for (auto* r : live) r->standardized = r->raw;
  } else {
    std::vector<double> raw, da, db;
    std::vector<std::size_t> sizes;
    for (auto* r : live) {
      raw.push_back(r->raw);
      sizes.push_back(r->retained);
      da.push_back(r->mean_dist_residual);
      db.push_back(r->mean_dist_covariate);
    }
    if (live.size() >= 2) {
      const auto st = stats::standardize(plan.statistic, raw, sizes, da, db, plan.dcov_center);
      for (std::size_t i = 0; i < live.size(); ++i) live[i]->standardized = st[i];
    }
  }

  std::vector<double> s;
  s.reserve(live.size() - 1);
  for (std::size_t i = 1; i < live.size(); ++i) s.push_back(live[i]->standardized);
  result.p_value = monte_carlo_p_value(result.observed.standardized, s, result.tail);
  return result;
}

}  // namespace rshift::shift
