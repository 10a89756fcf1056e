#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rshift/geometry.hpp"
#include "rshift/statistics.hpp"

namespace rshift::shift {

enum class Correction { torus, variance };
enum class Tail { two_sided, upper, lower };
enum class ShiftMode { random, fixed_grid };
enum class PairingMode { automatic, nearest, grid_exact };

std::string_view to_string(Correction c);
std::string_view to_string(Tail t);
std::string_view to_string(ShiftMode m);
std::string_view to_string(PairingMode m);
Correction parse_correction(std::string_view name);
Tail parse_tail(std::string_view name);
ShiftMode parse_shift_mode(std::string_view name);
PairingMode parse_pairing(std::string_view name);

/// Default alternative: upper tail for distance covariance, two-sided otherwise.
Tail default_tail(stats::Statistic s);

struct ShiftPlan {
  Correction correction = Correction::variance;
  stats::Statistic statistic = stats::Statistic::covariance;
  std::size_t replicates = 199;         // K
  std::optional<double> r_max_x;        // default: half the window width
  std::optional<double> r_max_y;        // default: half the window height
  std::size_t min_retained = 4;
  std::size_t max_redraws = 100;
  std::optional<Tail> tail;             // default_tail(statistic) when unset
  ShiftMode mode = ShiftMode::random;
  double separation = 0.0;              // fixed_grid only
  PairingMode pairing = PairingMode::automatic;
  bool dcov_center = false;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t max_parallel_dcov = 0;  // 0: no extra cap on workers for dcov

  /// Throws InvalidParameter on inconsistent settings (K >= 19, min_retained >= 4).
  void validate() const;
};

struct ReplicateRecord {
  geom::Shift shift;
  std::size_t retained = 0;  // n_k
  std::size_t redraws = 0;
  double raw = 0.0;
  double standardized = 0.0;
  double mean_dist_residual = 0.0;  // dcov only
  double mean_dist_covariate = 0.0;
  bool dropped = false;
};

struct ShiftTestResult {
  double p_value = 1.0;
  Tail tail = Tail::two_sided;
  ReplicateRecord observed;              // k = 0
  std::vector<ReplicateRecord> replicates;  // k = 1..K
  std::size_t effective_replicates = 0;  // K_eff, non-dropped
  std::size_t dropped = 0;
  std::size_t total_redraws = 0;
  bool degenerate = false;  // observed statistic undefined; p forced to 1
  bool grid_pairing = false;
};

/// Monte Carlo p-value (1 + #{k : S_k at least as extreme as S_0}) / (K + 1);
/// ties count as extreme.
double monte_carlo_p_value(double observed, std::span<const double> replicates, Tail tail);

/// K lattice shifts at least `separation` apart and from the origin, inside
/// 0.9 * r_max per axis. Throws InfeasibleSeparation when no lattice fits.
std::vector<geom::Shift> fixed_grid_shifts(std::size_t count, double separation, double r_max_x, double r_max_y);

/// Random-shift test of association between residuals (at their own sites)
/// and a covariate (moved by each shift). Torus shifts are uniform on
/// [0, width) x [0, height); variance shifts uniform on [-r_max, r_max]^2.
ShiftTestResult run_shift_test(std::span<const double> residuals, std::span<const double> covariate,
                               std::span<const geom::Point> locations, const geom::Window& window,
                               const ShiftPlan& plan);

}  // namespace rshift::shift
