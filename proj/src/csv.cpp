#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "rshift/error.hpp"
#include "rshift/io.hpp"

namespace rshift::io {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(trim(field));
  return out;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

SpatialDataset read_dataset(std::istream& in, const DatasetSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::DataError, "empty CSV: header row required");
  const auto header = split_row(line);
  auto find = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw Error(ErrorCode::DataError, "missing column '" + name + "'");
  };
  const std::size_t xi = find(schema.x_column), yi = find(schema.y_column), ri = find(schema.response);
  std::vector<std::string> cov_names = schema.covariates;
  if (cov_names.empty())
    for (std::size_t i = 0; i < header.size(); ++i)
      if (i != xi && i != yi && i != ri) cov_names.push_back(header[i]);
  std::vector<std::size_t> cov_idx;
  for (const auto& c : cov_names) cov_idx.push_back(find(c));

  std::vector<std::size_t> used{xi, yi, ri};
  used.insert(used.end(), cov_idx.begin(), cov_idx.end());
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> bad_rows;
  std::string bad_column;
  std::size_t row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    if (trim(line).empty()) continue;
    const auto fields = split_row(line);
    std::vector<double> values;
    bool ok = true;
    for (std::size_t c : used) {
      const auto v = c < fields.size() ? parse_number(fields[c]) : std::nullopt;
      if (!v) {
        ok = false;
        if (bad_column.empty()) bad_column = header[c];
        break;
      }
      values.push_back(*v);
    }
    if (ok)
      rows.push_back(std::move(values));
    else
      bad_rows.push_back(row_number);
  }
  if (!bad_rows.empty()) {
    std::string list;
    for (std::size_t i = 0; i < bad_rows.size() && i < 10; ++i) list += (i ? ", " : "") + std::to_string(bad_rows[i]);
    if (bad_rows.size() > 10) list += ", ...";
    throw Error(ErrorCode::DataError,
                "missing or non-numeric values in rows " + list + " (first in column '" + bad_column + "')");
  }
  if (rows.empty()) throw Error(ErrorCode::DataError, "CSV has no data rows");

  SpatialDataset d;
  const auto n = static_cast<Eigen::Index>(rows.size());
  d.response_name = schema.response;
  d.covariate_names = cov_names;
  d.response.resize(n);
  d.covariates.resize(n, static_cast<Eigen::Index>(cov_names.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    d.locations.push_back({r[0], r[1]});
    d.response(i) = r[2];
    for (std::size_t j = 0; j < cov_names.size(); ++j) d.covariates(i, static_cast<Eigen::Index>(j)) = r[3 + j];
  }
  d.window = schema.window ? *schema.window : geom::Window::bounding(d.locations);
  d.validate();
  return d;
}

SpatialDataset read_dataset_file(const std::string& path, const DatasetSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::DataError, "cannot open '" + path + "'");
  return read_dataset(in, schema);
}

void write_dataset(std::ostream& out, const SpatialDataset& data) {
  out << "x,y";
  for (const auto& c : data.covariate_names) out << ',' << c;
  out << ',' << data.response_name << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    out << format17(data.locations[i].x) << ',' << format17(data.locations[i].y);
    for (Eigen::Index j = 0; j < data.covariates.cols(); ++j) out << ',' << format17(data.covariates(row, j));
    out << ',' << format17(data.response(row)) << '\n';
  }
}

void standardize_columns(SpatialDataset& data) {
  auto scale = [](auto&& col, const std::string& name) {
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(col.size() - 1));
    if (!(sd > 0.0)) throw Error(ErrorCode::DataError, "cannot standardize constant column '" + name + "'");
    col = ((col.array() - mean) / sd).matrix();
  };
  if (data.size() < 2) throw Error(ErrorCode::TooFewPoints, "standardize needs at least 2 rows");
  scale(data.response, data.response_name);
  for (Eigen::Index j = 0; j < data.covariates.cols(); ++j)
    scale(data.covariates.col(j), data.covariate_names[static_cast<std::size_t>(j)]);
}

}  // namespace rshift::io
