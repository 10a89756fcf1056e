#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "rshift/error.hpp"
#include "rshift/geometry.hpp"

namespace rshift {

/// Point-referenced data: locations, a response and named covariate columns.
struct SpatialDataset {
  geom::Window window = geom::Window::unit();
  std::vector<geom::Point> locations;
  std::string response_name = "yresp";
  Eigen::VectorXd response;
  std::vector<std::string> covariate_names;
  Eigen::MatrixXd covariates;  // n x p, column j named covariate_names[j]

  [[nodiscard]] std::size_t size() const { return locations.size(); }

  [[nodiscard]] std::optional<std::size_t> find_column(const std::string& name) const {
    auto it = std::find(covariate_names.begin(), covariate_names.end(), name);
    if (it == covariate_names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - covariate_names.begin());
  }

  [[nodiscard]] std::size_t column_index(const std::string& name) const {
    if (auto idx = find_column(name)) return *idx;
    throw Error(ErrorCode::InvalidParameter, "unknown covariate column '" + name + "'");
  }

  /// Covariate columns in the requested order as an n x k matrix.
  [[nodiscard]] Eigen::MatrixXd columns(const std::vector<std::string>& names) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j)
      out.col(static_cast<Eigen::Index>(j)) = covariates.col(static_cast<Eigen::Index>(column_index(names[j])));
    return out;
  }

  /// Throws DataError when shapes disagree or a location leaves the window.
  void validate() const {
    const auto n = static_cast<Eigen::Index>(size());
    if (response.size() != n) throw Error(ErrorCode::DataError, "response length differs from location count");
    if (covariates.rows() != n && !(covariates.size() == 0 && covariate_names.empty()))
      throw Error(ErrorCode::DataError, "covariate rows differ from location count");
    if (static_cast<std::size_t>(covariates.cols()) != covariate_names.size())
      throw Error(ErrorCode::DataError, "covariate column count differs from names");
    for (std::size_t i = 0; i < size(); ++i)
      if (!window.contains(locations[i]))
        throw Error(ErrorCode::DataError, "location " + std::to_string(i) + " lies outside the window");
  }
};

}  // namespace rshift
