#pragma once

#include <iosfwd>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "rshift/dataset.hpp"
#include "rshift/pipeline.hpp"
#include "rshift/selection.hpp"
#include "rshift/study.hpp"

namespace rshift::io {

// --- CSV --------------------------------------------------------------------

struct DatasetSchema {
  std::string x_column = "x";
  std::string y_column = "y";
  std::string response = "yresp";
  std::vector<std::string> covariates;  // empty: every other column
  std::optional<geom::Window> window;   // default: bounding box of the locations
};

/// Comma-separated, header required. Rows with missing or non-numeric values in
/// used columns are rejected (DataError naming the rows / column).
SpatialDataset read_dataset(std::istream& in, const DatasetSchema& schema);
SpatialDataset read_dataset_file(const std::string& path, const DatasetSchema& schema);

/// Columns x, y, covariates..., response; values printed with 17 significant digits.
void write_dataset(std::ostream& out, const SpatialDataset& data);

/// (v - mean) / sd for the response and every covariate column.
void standardize_columns(SpatialDataset& data);

// --- configuration ------------------------------------------------------------

struct ConfigKey {
  const char* name;
  const char* default_value;
  const char* description;
};

/// Every accepted configuration key.
const std::vector<ConfigKey>& config_registry();

/// Flat "key = value" settings; unknown keys are ConfigError.
class Config {
 public:
  /// "key = value" lines with '#' comments, or a JSON object (optionally under "config").
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) > 0; }
  [[nodiscard]] std::string get(const std::string& key) const;  // value or registry default
  [[nodiscard]] double get_double(const std::string& key) const;
  [[nodiscard]] std::uint64_t get_uint(const std::string& key) const;
  [[nodiscard]] bool get_bool(const std::string& key) const;
  [[nodiscard]] std::vector<std::string> get_list(const std::string& key) const;  // comma separated
  [[nodiscard]] const std::map<std::string, std::string>& explicit_values() const { return values_; }

  /// Effective configuration: explicit values plus defaults for every key.
  [[nodiscard]] nlohmann::json effective() const;

 private:
  std::map<std::string, std::string> values_;
};

TestConfig test_config_from(const Config& config);
DatasetSchema schema_from(const Config& config);
study::StudySpec study_spec_from(const Config& config);

// --- results ------------------------------------------------------------------

nlohmann::json to_json(const shift::ShiftTestResult& r);
nlohmann::json to_json(const CovariateTest& t, const TestConfig& config);
nlohmann::json to_json(const SelectionTrace& trace);
nlohmann::json to_json(const study::StudyReport& report);

void write_study_csv(std::ostream& out, const study::StudyReport& report);
void write_selection_table(std::ostream& out, const SelectionTrace& trace);

/// Bar chart of per-cell rejection rates with the binomial band as a shaded strip.
void write_study_svg(std::ostream& out, const study::StudyReport& report);

}  // namespace rshift::io
