#include <cstdio>
#include <ostream>

#include "rshift/io.hpp"

namespace rshift::io {
namespace {

nlohmann::json replicate_json(const shift::ReplicateRecord& r) {
  nlohmann::json j;
  j["shift"] = {r.shift.dx, r.shift.dy};
  j["retained"] = r.retained;
  j["raw"] = r.raw;
  j["standardized"] = r.standardized;
  j["dropped"] = r.dropped;
  if (r.redraws) j["redraws"] = r.redraws;
  return j;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

nlohmann::json to_json(const shift::ShiftTestResult& r) {
  nlohmann::json j;
  j["p_value"] = r.p_value;
  j["tail"] = std::string(shift::to_string(r.tail));
  j["degenerate"] = r.degenerate;
  j["observed"] = replicate_json(r.observed);
  j["effective_replicates"] = r.effective_replicates;
  j["dropped_replicates"] = r.dropped;
  j["total_redraws"] = r.total_redraws;
  j["grid_pairing"] = r.grid_pairing;
  nlohmann::json reps = nlohmann::json::array();
  for (const auto& rec : r.replicates) reps.push_back(replicate_json(rec));
  j["replicates"] = std::move(reps);
  return j;
}

nlohmann::json to_json(const CovariateTest& t, const TestConfig& config) {
  nlohmann::json j;
  j["interest"] = t.interest;
  j["nuisance"] = t.nuisance;
  j["p_value"] = t.result.p_value;
  j["statistic"] = std::string(stats::to_string(config.plan.statistic));
  j["correction"] = std::string(shift::to_string(config.plan.correction));
  j["fitter"] = std::string(regress::to_string(config.fitter));
  j["theta"] = config.theta;
  j["g_fitter"] = std::string(regress::to_string(t.g_fitter));
  j["seed"] = config.plan.seed;
  j["degenerate"] = t.degenerate;
  if (t.degenerate) j["degenerate_reason"] = t.degenerate_reason;
  nlohmann::json hyper;
  if (t.hyper.lambdas.size()) hyper["lambdas"] = vector_json(t.hyper.lambdas);
  if (t.hyper.bandwidths.size()) hyper["bandwidths"] = vector_json(t.hyper.bandwidths);
  if (t.hyper.beta.size()) hyper["beta"] = vector_json(t.hyper.beta);
  if (config.fitter == regress::FitterKind::lm || config.fitter == regress::FitterKind::gls) {
    hyper["sigma2"] = t.hyper.sigma2;
    hyper["range"] = t.hyper.range;
    hyper["nugget"] = t.hyper.nugget;
  }
  j["fit"] = hyper;
  j["test"] = to_json(t.result);
  return j;
}

nlohmann::json to_json(const SelectionTrace& trace) {
  nlohmann::json j;
  j["alpha"] = trace.alpha;
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& r : trace.rounds) {
    nlohmann::json jr;
    jr["active"] = r.active;
    jr["p_values"] = r.p_values;
    jr["degenerate"] = r.degenerate;
    jr["removed"] = r.removed ? nlohmann::json(*r.removed) : nlohmann::json(nullptr);
    rounds.push_back(std::move(jr));
  }
  j["rounds"] = std::move(rounds);
  j["final_set"] = trace.final_set;
  return j;
}

nlohmann::json to_json(const study::StudyReport& report) {
  const auto& s = report.spec;
  nlohmann::json j;
  nlohmann::json spec;
  spec["name"] = s.name;
  spec["design"] = std::string(fields::to_string(s.design));
  nlohmann::json sc = nlohmann::json::array(), tr = nlohmann::json::array(), me = nlohmann::json::array();
  for (auto v : s.scenarios) sc.push_back(std::string(fields::to_string(v)));
  for (auto v : s.trends) tr.push_back(std::string(fields::to_string(v)));
  for (const auto& m : s.methods) me.push_back(m.label());
  spec["scenarios"] = sc;
  spec["trends"] = tr;
  spec["methods"] = me;
  spec["mode"] = s.mode == study::StudyMode::test ? "test" : "select";
  spec["interest"] = s.interest;
  spec["R"] = s.replications;
  spec["K"] = s.plan.replicates;
  spec["n"] = s.n;
  spec["alpha"] = s.alpha;
  spec["seed"] = s.seed;
  spec["window"] = {s.window.x_min(), s.window.x_max(), s.window.y_min(), s.window.y_max()};
  spec["effect"] = s.effect;
  spec["dependence_scale"] = s.dependence_scale;
  spec["e1_variance"] = s.e1_variance;
  spec["min_retained"] = s.plan.min_retained;
  spec["r_max"] = s.plan.r_max_x ? nlohmann::json({*s.plan.r_max_x, *s.plan.r_max_y}) : nlohmann::json("half window");
  spec["scale_R"] = static_cast<double>(s.replications) / 2000.0;
  spec["scale_K"] = static_cast<double>(s.plan.replicates) / 499.0;
  j["spec"] = spec;
  j["band"] = {report.band_lo, report.band_hi};
  j["band_coverage"] = s.band_coverage;
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : report.cells) {
    nlohmann::json jc;
    jc["scenario"] = std::string(fields::to_string(c.scenario));
    jc["trend"] = std::string(fields::to_string(c.trend));
    jc["method"] = c.method;
    jc["replications"] = c.replications;
    jc["rejections"] = c.rejections;
    jc["non_rejections"] = c.non_rejections;
    jc["errors"] = c.errors;
    jc["rate"] = c.rate;
    jc["mc_se"] = c.mc_se;
    jc["in_band"] = c.in_band;
    jc["aborted"] = c.aborted;
    jc["dropped_replicates"] = c.dropped_replicates;
    jc["redraws"] = c.redraws;
    jc["degenerate"] = c.degenerate;
    jc["error_codes"] = c.error_codes;
    if (s.mode == study::StudyMode::select) jc["retained"] = c.retained;
    cells.push_back(std::move(jc));
  }
  j["cells"] = std::move(cells);
  return j;
}

void write_study_csv(std::ostream& out, const study::StudyReport& report) {
  out << "scenario,trend,method,R,rejections,non_rejections,errors,rate,mc_se,band_lo,band_hi,in_band\n";
  for (const auto& c : report.cells) {
    out << fields::to_string(c.scenario) << ',' << fields::to_string(c.trend) << ',' << c.method << ','
        << c.replications << ',' << c.rejections << ',' << c.non_rejections << ',' << c.errors << ','
        << fixed4(c.rate) << ',' << fixed4(c.mc_se) << ',' << fixed3(report.band_lo) << ','
        << fixed3(report.band_hi) << ',' << (c.in_band ? "yes" : "no") << '\n';
  }
}

void write_selection_table(std::ostream& out, const SelectionTrace& trace) {
  for (std::size_t r = 0; r < trace.rounds.size(); ++r) {
    const auto& round = trace.rounds[r];
    out << "round " << r + 1 << ":";
    for (std::size_t j = 0; j < round.active.size(); ++j)
      out << "  " << round.active[j] << " p=" << fixed4(round.p_values[j]) << (round.degenerate[j] ? "*" : "");
    out << "  -> " << (round.removed ? "remove " + *round.removed : std::string("stop")) << '\n';
  }
  out << "final:";
  for (const auto& c : trace.final_set) out << ' ' << c;
  out << '\n';
}

}  // namespace rshift::io
