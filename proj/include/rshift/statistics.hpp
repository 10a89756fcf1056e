#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace rshift::stats {

enum class Statistic { covariance, dcov, kendall };

std::string_view to_string(Statistic s);
Statistic parse_statistic(std::string_view name);

/// Sample covariance with divisor n - 1.
double sample_covariance(std::span<const double> a, std::span<const double> b);

struct DcovValue {
  double value = 0.0;      // squared distance covariance (V-statistic, divisor n^2)
  double mean_dist_a = 0.0;  // grand mean of |a_i - a_j|
  double mean_dist_b = 0.0;
};

/// Double-centred distance covariance, O(n^2) time and O(n) memory.
DcovValue distance_covariance(std::span<const double> a, std::span<const double> b);

/// sum_{i<j} sgn(a_i - a_j) sgn(b_i - b_j), merge-sort inversion count (O(n log n)).
std::int64_t kendall_s(std::span<const double> a, std::span<const double> b);
/// Same sum by direct enumeration of all pairs.
std::int64_t kendall_s_brute(std::span<const double> a, std::span<const double> b);

/// 2 S / (n (n - 1)); ties contribute zero.
double kendall_tau(std::span<const double> a, std::span<const double> b);
double kendall_tau_brute(std::span<const double> a, std::span<const double> b);

struct StatValue {
  double value = 0.0;
  double mean_dist_a = 0.0;  // dcov only
  double mean_dist_b = 0.0;
};

StatValue compute_statistic(Statistic s, std::span<const double> a, std::span<const double> b);

/// Variance-correction standardisation of raw values T_0..T_K with sizes n_k.
/// covariance / kendall: (T_k - mean_k T_k) * sqrt(n_k).
/// dcov: n_k T_k / (mean_dist_a_k * mean_dist_b_k), optionally centred afterwards.
/// Throws DegenerateAux when a dcov grand-mean distance is 0.
std::vector<double> standardize(Statistic s, std::span<const double> raw, std::span<const std::size_t> sizes,
                                std::span<const double> mean_dist_a = {}, std::span<const double> mean_dist_b = {},
                                bool center_dcov = false);

}  // namespace rshift::stats
