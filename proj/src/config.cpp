#include <algorithm>
#include <fstream>
#include <sstream>

#include "rshift/error.hpp"
#include "rshift/io.hpp"
#include "rshift/parallel.hpp"

namespace rshift::io {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

const ConfigKey* lookup(const std::string& key) {
  for (const auto& k : config_registry())
    if (key == k.name) return &k;
  return nullptr;
}

std::string scalar_text(const nlohmann::json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer() || v.is_number_unsigned() || v.is_number_float()) return v.dump();
  throw Error(ErrorCode::ConfigError, "config key '" + key + "': unsupported JSON value");
}

std::vector<double> parse_doubles(const Config& c, const std::string& key) {
  std::vector<double> out;
  for (const auto& s : c.get_list(key)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(s, &used));
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "config key '" + key + "': '" + s + "' is not a number");
    }
  }
  return out;
}

void apply_plan(const Config& c, shift::ShiftPlan& plan, bool only_explicit) {
  auto want = [&](const char* k) { return !only_explicit || c.has(k); };
  if (want("statistic")) plan.statistic = stats::parse_statistic(c.get("statistic"));
  if (want("correction")) plan.correction = shift::parse_correction(c.get("correction"));
  if (want("K")) plan.replicates = c.get_uint("K");
  if (want("min_retained")) plan.min_retained = c.get_uint("min_retained");
  if (want("max_redraws")) plan.max_redraws = c.get_uint("max_redraws");
  if (want("shift_mode")) plan.mode = shift::parse_shift_mode(c.get("shift_mode"));
  if (want("separation")) plan.separation = c.get_double("separation");
  if (want("pairing")) plan.pairing = shift::parse_pairing(c.get("pairing"));
  if (want("dcov.center")) plan.dcov_center = c.get_bool("dcov.center");
  if (want("max_parallel_dcov")) plan.max_parallel_dcov = c.get_uint("max_parallel_dcov");
  if (want("threads")) plan.threads = c.get_uint("threads");
  if (want("seed")) plan.seed = c.get_uint("seed");
  if (c.has("tail") && !c.get("tail").empty()) plan.tail = shift::parse_tail(c.get("tail"));
  if (c.has("r_max") && !c.get("r_max").empty()) {
    const auto r = parse_doubles(c, "r_max");
    if (r.empty() || r.size() > 2) throw Error(ErrorCode::ConfigError, "config key 'r_max': give one or two values");
    plan.r_max_x = r[0];
    plan.r_max_y = r.size() == 2 ? r[1] : r[0];
  }
}

void apply_fit(const Config& c, regress::FitOptions& fit) {
  if (c.has("lm.kernel")) fit.lm.family = fields::parse_kernel_family(c.get("lm.kernel"));
  if (c.has("lm.matern_smoothness")) fit.lm.matern_smoothness = c.get_double("lm.matern_smoothness");
  if (c.has("gam.lambda_grid") && !c.get("gam.lambda_grid").empty())
    fit.gam.lambda_grid = parse_doubles(c, "gam.lambda_grid");
  if (c.has("nw.bandwidth") && !c.get("nw.bandwidth").empty()) fit.nw.bandwidths = parse_doubles(c, "nw.bandwidth");
}

std::optional<geom::Window> window_from(const Config& c) {
  if (!c.has("window") || c.get("window").empty()) return std::nullopt;
  const auto w = parse_doubles(c, "window");
  if (w.size() != 4) throw Error(ErrorCode::ConfigError, "config key 'window': expected xmin,xmax,ymin,ymax");
  try {
    return geom::Window(w[0], w[1], w[2], w[3]);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, std::string("config key 'window': ") + e.what());
  }
}

}  // namespace

const std::vector<ConfigKey>& config_registry() {
  static const std::vector<ConfigKey> keys{
      {"fitter", "gam_l", "mean-trend fitter: lm | gls | nw | gam_l | gam_nl"},
      {"theta", "1", "nuisance reconstruction weight in [0, 1]; 1 keeps the raw covariates"},
      {"g_fitter", "", "fitter for nuisance-on-interest regressions: linear | nw | spline (default: linear for lm/gls, nw otherwise)"},
      {"gam.lambda_grid", "", "comma-separated smoothing parameters searched by GCV (default: 20 log-spaced values in [1e-8, 1e4])"},
      {"nw.bandwidth", "", "comma-separated fixed Nadaraya-Watson bandwidths, one per covariate (default: leave-one-out CV)"},
      {"lm.kernel", "squared_exponential", "error covariance family of lm/gls/classical fits"},
      {"lm.matern_smoothness", "2.5", "smoothness when lm.kernel = matern"},
      {"statistic", "cov", "dependence statistic: cov | dcov | kendall"},
      {"correction", "variance", "edge correction: torus | variance"},
      {"K", "199", "number of shift replicates (>= 19)"},
      {"r_max", "", "maximum |shift| per axis for variance correction, one value or x,y (default: half the window sides)"},
      {"min_retained", "4", "minimum retained residuals n_k per variance-correction replicate (>= 4)"},
      {"max_redraws", "100", "shift redraws per replicate before ShiftExhausted"},
      {"tail", "", "two | upper | lower (default: upper for dcov, two otherwise)"},
      {"shift_mode", "random", "random | fixed_grid"},
      {"separation", "0", "minimum separation of fixed_grid shifts"},
      {"pairing", "auto", "auto | nearest | grid_exact"},
      {"dcov.center", "false", "centre standardized dcov replicates"},
      {"max_parallel_dcov", "0", "cap on concurrent dcov evaluations (0: threads)"},
      {"seed", "1", "master seed"},
      {"threads", "1", "worker threads (0: hardware concurrency)"},
      {"alpha", "0.05", "significance level for selection and studies"},
      {"classical", "false", "select: use ML t-test p-values instead of shift tests"},
      {"interest", "", "covariate of interest (test; study default x2)"},
      {"nuisance", "", "comma-separated nuisance covariates (test; default: all other covariates)"},
      {"covariates", "", "comma-separated covariate columns to load (default: all non-coordinate, non-response columns)"},
      {"response", "yresp", "response column"},
      {"x_column", "x", "x coordinate column"},
      {"y_column", "y", "y coordinate column"},
      {"standardize", "false", "standardize response and covariates before testing"},
      {"window", "", "observation window xmin,xmax,ymin,ymax (default: bounding box; unit square for simulate)"},
      {"design", "single_nuisance", "simulation design: single_nuisance | multi_independent | multi_dependent | multi_confounded"},
      {"scenario", "SE1", "error scenario(s): SE1 | SE4 | E1 | N | LN | NS (study: comma list)"},
      {"trend", "linear", "trend(s): linear | nonlinear (study: comma list)"},
      {"n", "100", "number of simulated locations"},
      {"effect", "0", "single_nuisance: coefficient of x2 (or x2^2) in the response"},
      {"dependence_scale", "1", "multi_dependent / multi_confounded: mean of x4 is this times x1"},
      {"e1.variance", "4", "variance of the exponential error scenario E1"},
      {"R", "500", "study replications (>= 100)"},
      {"methods", "gam_l:cov:variance:1", "study methods: classical or fitter:statistic:correction[:theta[:g_fitter]]"},
      {"mode", "test", "study mode: test | select"},
      {"band_coverage", "0.95", "coverage of the binomial band in study reports"},
      {"preset", "", "study preset name"},
  };
  return keys;
}

Config Config::parse(const std::string& text) {
  Config c;
  const std::string body = trim(text);
  if (!body.empty() && body.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ConfigError, std::string("config JSON: ") + e.what());
    }
    const nlohmann::json& obj = j.contains("config") && j["config"].is_object() ? j["config"] : j;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      std::string value;
      if (it.value().is_array()) {
        for (std::size_t i = 0; i < it.value().size(); ++i)
          value += (i ? "," : "") + scalar_text(it.value()[i], it.key());
      } else {
        value = scalar_text(it.value(), it.key());
      }
      c.set(it.key(), value);
    }
    return c;
  }
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ConfigError, "config line " + std::to_string(line_no) + ": expected key = value");
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Config::set(const std::string& key, const std::string& value) {
  if (!lookup(key)) throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
  values_[key] = value;
}

std::string Config::get(const std::string& key) const {
  if (auto it = values_.find(key); it != values_.end()) return it->second;
  const ConfigKey* k = lookup(key);
  if (!k) throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
  return k->default_value;
}

double Config::get_double(const std::string& key) const {
  const std::string v = get(key);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, "config key '" + key + "': '" + v + "' is not a number");
  }
}

std::uint64_t Config::get_uint(const std::string& key) const {
  const std::string v = get(key);
  try {
    if (v.empty() || v.front() == '-') throw std::invalid_argument(v);
    std::size_t used = 0;
    const auto d = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, "config key '" + key + "': '" + v + "' is not a nonnegative integer");
  }
}

bool Config::get_bool(const std::string& key) const {
  const std::string v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no" || v.empty()) return false;
  throw Error(ErrorCode::ConfigError, "config key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  std::vector<std::string> out;
  std::stringstream ss(get(key));
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

nlohmann::json Config::effective() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& k : config_registry()) j[k.name] = get(k.name);
  return j;
}

TestConfig test_config_from(const Config& c) {
  TestConfig t;
  t.fitter = regress::parse_fitter(c.get("fitter"));
  t.theta = c.get_double("theta");
  if (!(t.theta >= 0.0 && t.theta <= 1.0)) throw Error(ErrorCode::ConfigError, "config key 'theta': must lie in [0, 1]");
  if (!c.get("g_fitter").empty()) t.g_fitter = regress::parse_g_fitter(c.get("g_fitter"));
  apply_fit(c, t.fit);
  apply_plan(c, t.plan, false);
  if (t.plan.threads == 0) t.plan.threads = default_threads();
  return t;
}

DatasetSchema schema_from(const Config& c) {
  DatasetSchema s;
  s.x_column = c.get("x_column");
  s.y_column = c.get("y_column");
  s.response = c.get("response");
  s.covariates = c.get_list("covariates");
  s.window = window_from(c);
  return s;
}

study::StudySpec study_spec_from(const Config& c) {
  study::StudySpec s = c.get("preset").empty() ? study::StudySpec{} : study::preset(c.get("preset"));
  if (c.has("design")) s.design = fields::parse_design(c.get("design"));
  if (c.has("scenario")) {
    s.scenarios.clear();
    for (const auto& v : c.get_list("scenario")) s.scenarios.push_back(fields::parse_scenario(v));
  }
  if (c.has("trend")) {
    s.trends.clear();
    for (const auto& v : c.get_list("trend")) s.trends.push_back(fields::parse_trend(v));
  }
  if (c.has("methods")) {
    s.methods.clear();
    for (const auto& v : c.get_list("methods")) s.methods.push_back(study::MethodSpec::parse(v));
  }
  if (c.has("mode")) {
    const std::string m = c.get("mode");
    if (m != "test" && m != "select") throw Error(ErrorCode::ConfigError, "config key 'mode': test | select");
    s.mode = m == "test" ? study::StudyMode::test : study::StudyMode::select;
  }
  if (c.has("interest") && !c.get("interest").empty()) s.interest = c.get("interest");
  if (c.has("R")) s.replications = c.get_uint("R");
  if (c.has("n")) s.n = c.get_uint("n");
  if (c.has("alpha")) s.alpha = c.get_double("alpha");
  if (c.has("band_coverage")) s.band_coverage = c.get_double("band_coverage");
  if (c.has("seed")) s.seed = c.get_uint("seed");
  if (c.has("threads")) s.threads = c.get_uint("threads");
  if (s.threads == 0) s.threads = default_threads();
  if (c.has("effect")) s.effect = c.get_double("effect");
  if (c.has("dependence_scale")) s.dependence_scale = c.get_double("dependence_scale");
  if (c.has("e1.variance")) s.e1_variance = c.get_double("e1.variance");
  if (auto w = window_from(c)) s.window = *w;
  apply_plan(c, s.plan, true);
  apply_fit(c, s.fit);
  return s;
}

}  // namespace rshift::io
