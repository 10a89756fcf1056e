// rshift: random-shift significance tests for spatial regression.
//
// Exit codes: 0 success, 2 validation error (arguments, config, data),
// 3 numerical failure, 1 anything else.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "rshift/error.hpp"
#include "rshift/io.hpp"
#include "rshift/random_fields.hpp"
#include "rshift/rng.hpp"
#include "rshift/selection.hpp"
#include "rshift/study.hpp"

namespace {

using rshift::io::Config;

struct Flag {
  std::string key;
  std::optional<std::string> value;
};

// Registers --name for config key `key`; the value, if given, overrides the config file.
void add_flag(CLI::App* app, std::vector<std::unique_ptr<Flag>>& flags, const std::string& name, const std::string& key,
              const std::string& help) {
  flags.push_back(std::make_unique<Flag>(Flag{key, std::nullopt}));
  app->add_option("--" + name, flags.back()->value, help);
}

void add_test_flags(CLI::App* app, std::vector<std::unique_ptr<Flag>>& f) {
  add_flag(app, f, "fitter", "fitter", "lm | gls | nw | gam_l | gam_nl");
  add_flag(app, f, "theta", "theta", "nuisance reconstruction weight in [0, 1]");
  add_flag(app, f, "g-fitter", "g_fitter", "linear | nw | spline");
  add_flag(app, f, "statistic", "statistic", "cov | dcov | kendall");
  add_flag(app, f, "correction", "correction", "torus | variance");
  add_flag(app, f, "K", "K", "number of shift replicates");
  add_flag(app, f, "seed", "seed", "master seed");
  add_flag(app, f, "r-max", "r_max", "maximum shift per axis (variance correction)");
  add_flag(app, f, "min-retained", "min_retained", "minimum n_k per replicate");
  add_flag(app, f, "tail", "tail", "two | upper | lower");
  add_flag(app, f, "shift-mode", "shift_mode", "random | fixed_grid");
  add_flag(app, f, "separation", "separation", "fixed_grid separation");
  add_flag(app, f, "pairing", "pairing", "auto | nearest | grid_exact");
  add_flag(app, f, "threads", "threads", "worker threads");
  add_flag(app, f, "response", "response", "response column");
  add_flag(app, f, "covariates", "covariates", "comma-separated covariate columns to load");
  add_flag(app, f, "window", "window", "xmin,xmax,ymin,ymax");
}

Config build_config(const std::string& config_path, const std::vector<std::string>& sets,
                    const std::vector<std::unique_ptr<Flag>>& flags) {
  Config c = config_path.empty() ? Config{} : Config::load(config_path);
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw rshift::Error(rshift::ErrorCode::ConfigError, "--set expects key=value, got '" + s + "'");
    c.set(s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& f : flags)
    if (f->value) c.set(f->key, *f->value);
  return c;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rshift::Error(rshift::ErrorCode::InvalidParameter, "cannot write '" + path + "'");
  out << text;
}

rshift::SpatialDataset load_data(const std::string& path, const Config& c) {
  auto data = rshift::io::read_dataset_file(path, rshift::io::schema_from(c));
  if (c.get_bool("standardize")) rshift::io::standardize_columns(data);
  return data;
}

nlohmann::json envelope(const std::string& command, const Config& c) {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = c.effective();
  j["seed"] = c.get_uint("seed");
  return j;
}

int run(int argc, char** argv) {
  CLI::App app{"Random-shift Monte Carlo significance tests for spatial regression"};
  app.require_subcommand(1);
  std::string config_path, out_path, data_path;
  std::vector<std::string> sets;
  std::vector<std::unique_ptr<Flag>> flags;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value or JSON config file");
    sub->add_option("--set", sets, "override a config key (key=value), repeatable");
    sub->add_option("--out", out_path, "output file (default: stdout)");
  };

  CLI::App* test = app.add_subcommand("test", "test one covariate of interest");
  common(test);
  test->add_option("--data", data_path, "CSV dataset")->required();
  add_flag(test, flags, "interest", "interest", "covariate of interest");
  add_flag(test, flags, "nuisance", "nuisance", "comma-separated nuisance covariates");
  add_test_flags(test, flags);
  bool standardize = false;
  test->add_flag("--standardize", standardize, "standardize response and covariates");

  CLI::App* select = app.add_subcommand("select", "backward variable selection");
  common(select);
  select->add_option("--data", data_path, "CSV dataset")->required();
  add_test_flags(select, flags);
  add_flag(select, flags, "alpha", "alpha", "selection level");
  select->add_flag("--standardize", standardize, "standardize response and covariates");
  bool classical = false;
  select->add_flag("--classical", classical, "use ML t-test p-values");
  std::string table_path;
  select->add_option("--table", table_path, "write a human-readable trace table");

  CLI::App* simulate = app.add_subcommand("simulate", "write a simulated dataset as CSV");
  common(simulate);
  add_flag(simulate, flags, "design", "design", "single_nuisance | multi_independent | multi_dependent | multi_confounded");
  add_flag(simulate, flags, "scenario", "scenario", "SE1 | SE4 | E1 | N | LN | NS");
  add_flag(simulate, flags, "trend", "trend", "linear | nonlinear");
  add_flag(simulate, flags, "n", "n", "number of locations");
  add_flag(simulate, flags, "seed", "seed", "seed");
  add_flag(simulate, flags, "effect", "effect", "x2 effect size");
  add_flag(simulate, flags, "window", "window", "xmin,xmax,ymin,ymax");
  bool dump_ns = false;
  simulate->add_flag("--dump-ns-params", dump_ns, "print the nonstationary kernel's local parameters and exit");

  CLI::App* studyc = app.add_subcommand("study", "run a simulation study");
  common(studyc);
  add_flag(studyc, flags, "preset", "preset", "preset name");
  add_flag(studyc, flags, "R", "R", "replications");
  add_flag(studyc, flags, "K", "K", "shift replicates");
  add_flag(studyc, flags, "seed", "seed", "master seed");
  add_flag(studyc, flags, "threads", "threads", "worker threads");
  add_flag(studyc, flags, "n", "n", "locations per dataset");
  std::string csv_path, svg_path;
  studyc->add_option("--csv", csv_path, "write the cell table as CSV");
  studyc->add_option("--svg", svg_path, "write a bar chart as SVG");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  Config c = build_config(config_path, sets, flags);
  if (standardize) c.set("standardize", "true");
  if (classical) c.set("classical", "true");

  if (test->parsed()) {
    const auto data = load_data(data_path, c);
    const std::string interest = c.get("interest");
    if (interest.empty()) throw rshift::Error(rshift::ErrorCode::ConfigError, "config key 'interest' is required");
    (void)data.column_index(interest);
    std::vector<std::string> nuisance = c.get_list("nuisance");
    if (!c.has("nuisance"))
      for (const auto& name : data.covariate_names)
        if (name != interest) nuisance.push_back(name);
    const auto tc = rshift::io::test_config_from(c);
    const auto result = rshift::test_covariate(data, interest, nuisance, tc);
    auto j = envelope("test", c);
    j["result"] = rshift::io::to_json(result, tc);
    j["p_value"] = result.p_value();
    emit(out_path, j.dump(2) + "\n");
    return 0;
  }
  if (select->parsed()) {
    const auto data = load_data(data_path, c);
    rshift::SelectionConfig sc;
    sc.test = rshift::io::test_config_from(c);
    sc.alpha = c.get_double("alpha");
    sc.classical = c.get_bool("classical");
    sc.seed = c.get_uint("seed");
    const auto trace = rshift::backward_select(data, data.covariate_names, sc);
    auto j = envelope("select", c);
    j["trace"] = rshift::io::to_json(trace);
    emit(out_path, j.dump(2) + "\n");
    if (!table_path.empty()) {
      std::ostringstream t;
      rshift::io::write_selection_table(t, trace);
      emit(table_path, t.str());
    }
    return 0;
  }
  if (simulate->parsed()) {
    if (dump_ns) {
      const rshift::fields::NonstationaryKernelSpec ns;
      nlohmann::json j;
      j["mixture_bandwidth"] = ns.mixture_bandwidth();
      nlohmann::json centers = nlohmann::json::array();
      for (const auto& b : ns.centers) {
        const auto p = ns.local_parameters(b);
        centers.push_back({{"center", {b.x, b.y}}, {"lambda1", p.lambda1}, {"lambda2", p.lambda2}, {"eta", p.eta}});
      }
      j["centers"] = centers;
      j["beta_lambda1"] = ns.beta_lambda1;
      j["beta_lambda2"] = ns.beta_lambda2;
      j["beta_eta"] = ns.beta_eta;
      emit(out_path, j.dump(2) + "\n");
      return 0;
    }
    rshift::fields::DesignOptions opts;
    opts.error = rshift::fields::parse_scenario(c.get("scenario"));
    opts.scenario.e1_variance = c.get_double("e1.variance");
    opts.effect = c.get_double("effect");
    opts.dependence_scale = c.get_double("dependence_scale");
    const auto schema = rshift::io::schema_from(c);
    if (schema.window) opts.window = *schema.window;
    rshift::SeededStream rng(c.get_uint("seed"));
    const auto data = rshift::fields::generate_design(rshift::fields::parse_design(c.get("design")), c.get_uint("n"),
                                                      rshift::fields::parse_trend(c.get("trend")), rng, opts);
    std::ostringstream csv;
    rshift::io::write_dataset(csv, data);
    emit(out_path, csv.str());
    return 0;
  }
  // study
  const auto spec = rshift::io::study_spec_from(c);
  const auto report = rshift::study::run_study(spec);
  auto j = envelope("study", c);
  j["report"] = rshift::io::to_json(report);
  emit(out_path, j.dump(2) + "\n");
  if (!csv_path.empty()) {
    std::ostringstream t;
    rshift::io::write_study_csv(t, report);
    emit(csv_path, t.str());
  }
  if (!svg_path.empty()) {
    std::ostringstream t;
    rshift::io::write_study_svg(t, report);
    emit(svg_path, t.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const rshift::Error& e) {
    std::cerr << "error [" << rshift::to_string(e.code()) << "]: " << e.what() << '\n';
    return rshift::is_validation_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
