#include "rshift/study.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <cmath>
#include <sstream>

#include "rshift/error.hpp"
#include "rshift/parallel.hpp"
#include "rshift/rng.hpp"
#include "rshift/selection.hpp"

namespace rshift::study {
namespace {

struct Outcome {
  bool ok = false;
  double p = 1.0;
  bool degenerate = false;
  std::size_t dropped = 0;
  std::size_t redraws = 0;
  std::string error;
  std::vector<std::string> final_set;
};

std::size_t binomial_quantile(std::size_t trials, double alpha, double prob) {
  const boost::math::binomial_distribution<double> dist(static_cast<double>(trials), alpha);
  std::size_t lo = 0, hi = trials;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (boost::math::cdf(dist, static_cast<double>(mid)) >= prob)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

double round_rate(std::size_t k, std::size_t trials) {
  // k / trials rounded half-up to 3 decimals, in integers
  const std::uint64_t num = 2000ULL * k + trials;
  return static_cast<double>(num / (2ULL * trials)) / 1000.0;
}

std::vector<std::string> design_columns(fields::Design d) {
  if (d == fields::Design::single_nuisance) return {"x1", "x2"};
  return {"x1", "x2", "x3", "x4"};
}

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

struct CacheKey {
  regress::FitterKind fitter;
  double theta;
  regress::GFitter g;
  bool operator<(const CacheKey& o) const {
    return std::tie(fitter, theta, g) < std::tie(o.fitter, o.theta, o.g);
  }
};

TestConfig method_config(const StudySpec& spec, const MethodSpec& m, std::uint64_t shift_seed) {
  TestConfig tc;
  tc.fitter = m.fitter;
  tc.theta = m.theta;
  tc.g_fitter = m.g_fitter;
  tc.fit = spec.fit;
  tc.plan = spec.plan;
  tc.plan.statistic = m.statistic;
  tc.plan.correction = m.correction;
  tc.plan.seed = shift_seed;
  tc.plan.threads = 1;
  return tc;
}

std::vector<Outcome> run_replicate(const StudySpec& spec, fields::Scenario scenario, fields::Trend trend,
                                   std::size_t r) {
  std::vector<Outcome> out(spec.methods.size());
  SpatialDataset data;
  try {
    SeededStream rng = SeededStream::derive(
        spec.seed, {static_cast<std::uint64_t>(scenario), static_cast<std::uint64_t>(trend), r});
    fields::DesignOptions opts;
    opts.error = scenario;
    opts.scenario.e1_variance = spec.e1_variance;
    opts.window = spec.window;
    opts.dependence_scale = spec.dependence_scale;
    opts.effect = spec.effect;
    data = fields::generate_design(spec.design, spec.n, trend, rng, opts);
  } catch (const std::exception& e) {
    for (auto& o : out) o.error = e.what();
    return out;
  }
  const std::uint64_t shift_seed =
      SeededStream::derive(spec.seed, {0x73686966ULL, static_cast<std::uint64_t>(scenario),
                                       static_cast<std::uint64_t>(trend), r})
          .next_u64();
  const auto columns = design_columns(spec.design);
  std::vector<std::string> nuisance;
  for (const auto& c : columns)
    if (c != spec.interest) nuisance.push_back(c);

  std::map<CacheKey, ResidualField> cache;
  for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
    const MethodSpec& m = spec.methods[mi];
    Outcome& o = out[mi];
    try {
      if (spec.mode == StudyMode::select) {
        SelectionConfig sc;
        sc.test = method_config(spec, m, shift_seed);
        sc.alpha = spec.alpha;
        sc.classical = m.classical;
        sc.seed = shift_seed;
        o.final_set = backward_select(data, columns, sc).final_set;
        o.ok = true;
        continue;
      }
      if (m.classical) {
        std::vector<std::string> cols{spec.interest};
        cols.insert(cols.end(), nuisance.begin(), nuisance.end());
        const auto rep = regress::classical_test(data, cols, spec.fit.lm);
        o.p = rep.p_values(1);
        o.ok = true;
        continue;
      }
      const TestConfig tc = method_config(spec, m, shift_seed);
      const CacheKey key{m.fitter, m.theta, tc.effective_g_fitter()};
      auto it = cache.find(key);
      if (it == cache.end()) it = cache.emplace(key, compute_residuals(data, spec.interest, nuisance, tc)).first;
      const auto t = test_with_residuals(data, spec.interest, nuisance, it->second, tc);
      o.p = t.p_value();
      o.degenerate = t.degenerate;
      o.dropped = t.result.dropped;
      o.redraws = t.result.total_redraws;
      o.ok = true;
    } catch (const Error& e) {
      o.error = std::string(to_string(e.code()));
    } catch (const std::exception& e) {
      o.error = e.what();
    }
  }
  return out;
}

}  // namespace

std::pair<double, double> binomial_band(std::size_t trials, double alpha, double coverage) {
  if (trials < 1) throw Error(ErrorCode::InvalidParameter, "binomial band needs R >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidParameter, "binomial band needs alpha in (0, 1)");
  if (!(coverage > 0.0 && coverage < 1.0)) throw Error(ErrorCode::InvalidParameter, "coverage must lie in (0, 1)");
  const double tail = (1.0 - coverage) / 2.0;
  return {round_rate(binomial_quantile(trials, alpha, tail), trials),
          round_rate(binomial_quantile(trials, alpha, 1.0 - tail), trials)};
}

MethodSpec MethodSpec::parse(const std::string& text) {
  MethodSpec m;
  if (text == "classical" || text == "classical_lm") {
    m.classical = true;
    m.fitter = regress::FitterKind::lm;
    return m;
  }
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() < 3 || parts.size() > 5)
    throw Error(ErrorCode::ConfigError, "method '" + text + "' must be fitter:statistic:correction[:theta[:g_fitter]]");
  m.fitter = regress::parse_fitter(parts[0]);
  m.statistic = stats::parse_statistic(parts[1]);
  m.correction = shift::parse_correction(parts[2]);
  if (parts.size() >= 4) {
    try {
      m.theta = std::stod(parts[3]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "method '" + text + "': theta is not a number");
    }
  }
  if (parts.size() == 5) m.g_fitter = regress::parse_g_fitter(parts[4]);
  return m;
}

std::string MethodSpec::label() const {
  if (classical) return "classical";
  std::string s = std::string(regress::to_string(fitter)) + ":" + std::string(stats::to_string(statistic)) + ":" +
                  std::string(shift::to_string(correction)) + ":" + format_number(theta);
  if (g_fitter) s += ":" + std::string(regress::to_string(*g_fitter));
  return s;
}

void StudySpec::validate() const {
  if (replications < 100) throw Error(ErrorCode::InvalidParameter, "R must be >= 100");
  if (n < 5) throw Error(ErrorCode::TooFewPoints, "n must be >= 5");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidParameter, "alpha must lie in (0, 1]");
  if (scenarios.empty() || trends.empty() || methods.empty())
    throw Error(ErrorCode::InvalidParameter, "study needs at least one scenario, trend and method");
  const auto cols = design_columns(design);
  if (mode == StudyMode::test && std::find(cols.begin(), cols.end(), interest) == cols.end())
    throw Error(ErrorCode::InvalidParameter, "interest '" + interest + "' is not a column of the design");
  for (const auto& m : methods)
    if (!(m.theta >= 0.0 && m.theta <= 1.0)) throw Error(ErrorCode::InvalidParameter, "theta must lie in [0, 1]");
  plan.validate();
}

StudySpec preset(const std::string& name) {
  using fields::Scenario;
  using fields::Trend;
  StudySpec s;
  s.name = name;
  s.plan.replicates = 199;
  auto m = [](const char* t) { return MethodSpec::parse(t); };
  const std::vector<Scenario> all{Scenario::SE1, Scenario::SE4, Scenario::E1, Scenario::N, Scenario::LN, Scenario::NS};
  if (name == "desk-null-se1") {
    s.methods = {m("gam_l:cov:variance:1")};
  } else if (name == "desk-power-linear") {
    s.effect = 1.0;
    s.replications = 300;
    s.methods = {m("gam_l:cov:variance:1")};
  } else if (name == "desk-ln-nonlinear") {
    s.scenarios = {Scenario::LN};
    s.trends = {Trend::nonlinear};
    s.methods = {m("classical"), m("gam_nl:cov:variance:1")};
  } else if (name == "desk-multi-nonlinear") {
    s.design = fields::Design::multi_independent;
    s.trends = {Trend::nonlinear};
    s.replications = 300;
    s.methods = {m("gam_l:cov:variance:1"), m("gam_l:dcov:variance:1")};
  } else if (name == "paper-5.1") {
    s.scenarios = all;
    s.trends = {Trend::linear, Trend::nonlinear};
    s.replications = 2000;
    s.plan.replicates = 499;
    s.methods = {m("classical"), m("gam_l:cov:torus:1"), m("gam_l:cov:variance:1"), m("gam_nl:cov:torus:1"),
                 m("gam_nl:cov:variance:1")};
  } else if (name == "paper-5.2") {
    s.design = fields::Design::multi_independent;
    s.mode = StudyMode::select;
    s.trends = {Trend::linear, Trend::nonlinear};
    s.replications = 1000;
    s.plan.replicates = 499;
    s.methods = {m("classical"), m("gam_nl:cov:variance:1"), m("gam_nl:dcov:variance:1"),
                 m("gam_nl:kendall:variance:1")};
  } else if (name == "paper-5.3") {
    s.design = fields::Design::multi_dependent;
    s.mode = StudyMode::select;
    s.trends = {Trend::linear, Trend::nonlinear};
    s.replications = 1000;
    s.plan.replicates = 499;
    s.methods = {m("classical"), m("gam_nl:cov:variance:1"), m("gam_nl:cov:variance:0.5"),
                 m("gam_nl:cov:variance:0")};
  } else if (name == "supp-n25" || name == "supp-n400" || name == "supp-n900") {
    const double side = name == "supp-n25" ? 0.5 : name == "supp-n400" ? 2.0 : 3.0;
    s.n = name == "supp-n25" ? 25 : name == "supp-n400" ? 400 : 900;
    s.window = geom::Window(0.0, side, 0.0, side);
    s.trends = {Trend::linear, Trend::nonlinear};
    s.replications = 2000;
    s.plan.replicates = 499;
    s.methods = {m("classical"), m("gam_l:cov:variance:1"), m("gam_nl:cov:variance:1")};
  } else if (name == "supp-confounded") {
    s.design = fields::Design::multi_confounded;
    s.mode = StudyMode::select;
    s.trends = {Trend::linear, Trend::nonlinear};
    s.replications = 1000;
    s.plan.replicates = 499;
    s.methods = {m("classical"), m("gam_nl:cov:variance:1"), m("gam_nl:cov:variance:0")};
  } else {
    throw Error(ErrorCode::InvalidParameter, "unknown preset '" + name + "'");
  }
  return s;
}

std::vector<std::string> preset_names() {
  return {"desk-null-se1", "desk-power-linear", "desk-ln-nonlinear", "desk-multi-nonlinear",
          "paper-5.1",     "paper-5.2",         "paper-5.3",         "supp-n25",
          "supp-n400",     "supp-n900",         "supp-confounded"};
}

StudyReport run_study(const StudySpec& spec) {
  spec.validate();
  StudyReport report;
  report.spec = spec;
  std::tie(report.band_lo, report.band_hi) = binomial_band(spec.replications, std::min(spec.alpha, 0.999999),
                                                           spec.band_coverage);
  const std::size_t R = spec.replications;
  for (auto scenario : spec.scenarios) {
    for (auto trend : spec.trends) {
      std::vector<std::vector<Outcome>> outcomes(R);
      parallel_for(R, std::max<std::size_t>(spec.threads, 1),
                   [&](std::size_t r) { outcomes[r] = run_replicate(spec, scenario, trend, r); });
      for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
        CellReport cell;
        cell.scenario = scenario;
        cell.trend = trend;
        cell.method = spec.methods[mi].label();
        cell.replications = R;
        for (std::size_t r = 0; r < R; ++r) {
          const Outcome& o = outcomes[r][mi];
          if (!o.ok) {
            ++cell.errors;
            ++cell.error_codes[o.error];
            continue;
          }
          cell.dropped_replicates += o.dropped;
          cell.redraws += o.redraws;
          cell.degenerate += o.degenerate;
          bool hit;
          if (spec.mode == StudyMode::select) {
            for (const auto& c : o.final_set) ++cell.retained[c];
            hit = std::find(o.final_set.begin(), o.final_set.end(), spec.interest) != o.final_set.end();
          } else {
            hit = o.p <= spec.alpha;
          }
          if (hit)
            ++cell.rejections;
          else
            ++cell.non_rejections;
        }
        const std::size_t valid = cell.rejections + cell.non_rejections;
        cell.rate = valid ? static_cast<double>(cell.rejections) / static_cast<double>(valid) : 0.0;
        cell.mc_se = valid ? std::sqrt(cell.rate * (1.0 - cell.rate) / static_cast<double>(valid)) : 0.0;
        cell.in_band = cell.rate >= report.band_lo && cell.rate <= report.band_hi;
        cell.aborted = 5 * cell.errors > R;
        report.cells.push_back(std::move(cell));
      }
    }
  }
  return report;
}

}  // namespace rshift::study
