#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>

namespace rshift::opt {

struct NelderMeadOptions {
  double initial_step = 0.5;
  double size_tolerance = 1e-6;  // stop when the simplex characteristic size falls below this
  std::size_t max_iterations = 500;
};

struct NelderMeadResult {
  Eigen::VectorXd argmin;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Derivative-free minimisation (GSL nmsimplex2). Non-finite objective values
/// are treated as +infinity by the caller's function.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& start, const NelderMeadOptions& options = {});

/// 1-D bracketed minimisation on [lo, hi] (Brent: golden section with
/// parabolic steps). Returns the argmin.
double minimize_scalar(const std::function<double(double)>& objective, double lo, double hi, int bits = 20,
                       std::size_t max_iterations = 60);

}  // namespace rshift::opt
