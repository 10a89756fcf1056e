#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rshift/pipeline.hpp"
#include "rshift/random_fields.hpp"

namespace rshift::study {

/// Exact binomial band for the rejection rate: the coverage/2 and 1 - coverage/2
/// quantiles of Binomial(R, alpha) divided by R, rounded half-up to 3 decimals.
std::pair<double, double> binomial_band(std::size_t trials, double alpha, double coverage = 0.95);

struct MethodSpec {
  bool classical = false;  // ML t-test of the interest column
  regress::FitterKind fitter = regress::FitterKind::gam_l;
  stats::Statistic statistic = stats::Statistic::covariance;
  shift::Correction correction = shift::Correction::variance;
  double theta = 1.0;
  std::optional<regress::GFitter> g_fitter;

  /// "classical" or "fitter:statistic:correction[:theta[:g_fitter]]".
  static MethodSpec parse(const std::string& text);
  [[nodiscard]] std::string label() const;
};

enum class StudyMode { test, select };

struct StudySpec {
  std::string name = "custom";
  fields::Design design = fields::Design::single_nuisance;
  std::vector<fields::Scenario> scenarios{fields::Scenario::SE1};
  std::vector<fields::Trend> trends{fields::Trend::linear};
  std::vector<MethodSpec> methods{MethodSpec{}};
  StudyMode mode = StudyMode::test;
  std::string interest = "x2";  // test mode; the other design columns are nuisance
  std::size_t replications = 500;
  std::size_t n = 100;
  double alpha = 0.05;
  double band_coverage = 0.95;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  geom::Window window = geom::Window::unit();
  double effect = 0.0;
  double dependence_scale = 1.0;
  double e1_variance = 4.0;
  shift::ShiftPlan plan{};  // K, r_max, min_retained, tail, pairing, ...; statistic/correction come from the method
  regress::FitOptions fit{};

  void validate() const;
};

/// Named presets: desk-null-se1, desk-power-linear, desk-ln-nonlinear,
/// desk-multi-nonlinear, paper-5.1, paper-5.2, paper-5.3, supp-n25,
/// supp-n400, supp-n900, supp-confounded.
StudySpec preset(const std::string& name);
std::vector<std::string> preset_names();

struct CellReport {
  fields::Scenario scenario = fields::Scenario::SE1;
  fields::Trend trend = fields::Trend::linear;
  std::string method;
  std::size_t replications = 0;
  std::size_t rejections = 0;
  std::size_t non_rejections = 0;
  std::size_t errors = 0;
  double rate = 0.0;
  double mc_se = 0.0;
  bool in_band = false;
  bool aborted = false;  // more than 20% of replicates failed
  std::size_t dropped_replicates = 0;
  std::size_t redraws = 0;
  std::size_t degenerate = 0;
  std::map<std::string, std::size_t> error_codes;
  std::map<std::string, std::size_t> retained;  // select mode: covariate -> runs retained
};

struct StudyReport {
  StudySpec spec;
  double band_lo = 0.0, band_hi = 0.0;
  std::vector<CellReport> cells;
};

StudyReport run_study(const StudySpec& spec);

}  // namespace rshift::study
