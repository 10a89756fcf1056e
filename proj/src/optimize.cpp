#include "rshift/optimize.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>

namespace rshift::opt {

namespace {

struct Closure {
  const std::function<double(const Eigen::VectorXd&)>* fn;
  Eigen::VectorXd buffer;
};

double trampoline(const gsl_vector* x, void* params) {
  auto* c = static_cast<Closure*>(params);
  for (Eigen::Index i = 0; i < c->buffer.size(); ++i) c->buffer(i) = gsl_vector_get(x, static_cast<std::size_t>(i));
  const double v = (*c->fn)(c->buffer);
  return std::isfinite(v) ? v : std::numeric_limits<double>::max();
}

struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct MinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& start, const NelderMeadOptions& options) {
  gsl_set_error_handler_off();
  const auto dim = static_cast<std::size_t>(start.size());
  Closure closure{&objective, Eigen::VectorXd(start.size())};

  std::unique_ptr<gsl_vector, VectorDeleter> x(gsl_vector_alloc(dim));
  std::unique_ptr<gsl_vector, VectorDeleter> step(gsl_vector_alloc(dim));
  for (std::size_t i = 0; i < dim; ++i) gsl_vector_set(x.get(), i, start(static_cast<Eigen::Index>(i)));
  gsl_vector_set_all(step.get(), options.initial_step);

  gsl_multimin_function f{&trampoline, dim, &closure};
  std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> m(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim));
  gsl_multimin_fminimizer_set(m.get(), &f, x.get(), step.get());

  NelderMeadResult result;
  for (result.iterations = 0; result.iterations < options.max_iterations;) {
    ++result.iterations;
    if (gsl_multimin_fminimizer_iterate(m.get()) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m.get()), options.size_tolerance) == GSL_SUCCESS) {
      result.converged = true;
      break;
    }
  }
  result.argmin.resize(start.size());
  const gsl_vector* best = gsl_multimin_fminimizer_x(m.get());
  for (std::size_t i = 0; i < dim; ++i) result.argmin(static_cast<Eigen::Index>(i)) = gsl_vector_get(best, i);
  result.value = gsl_multimin_fminimizer_minimum(m.get());
  return result;
}

double minimize_scalar(const std::function<double(double)>& objective, double lo, double hi, int bits,
                       std::size_t max_iterations) {
  std::uintmax_t iters = max_iterations;
  return boost::math::tools::brent_find_minima(objective, lo, hi, bits, iters).first;
}

}  // namespace rshift::opt
