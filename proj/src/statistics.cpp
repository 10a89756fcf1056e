#include "rshift/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "rshift/error.hpp"

namespace rshift::stats {
namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "statistic inputs differ in length");
  if (a.size() < 2) throw Error(ErrorCode::TooFewPoints, "statistic needs at least 2 pairs");
}

int sgn(double v) { return (v > 0.0) - (v < 0.0); }

// Number of pairs sharing a value, over runs of equal values in sorted order.
template <class Eq>
std::int64_t tied_pairs(const std::vector<std::size_t>& order, Eq eq) {
  std::int64_t total = 0, run = 1;
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (eq(order[i - 1], order[i])) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total + run * (run - 1) / 2;
}

// Stable merge sort of idx by key, counting strict inversions.
std::int64_t merge_count(std::vector<std::size_t>& idx, std::vector<std::size_t>& buf, std::span<const double> key,
                         std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(idx, buf, key, lo, mid) + merge_count(idx, buf, key, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (key[idx[j]] < key[idx[i]]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buf[k++] = idx[j++];
    } else {
      buf[k++] = idx[i++];
    }
  }
  while (i < mid) buf[k++] = idx[i++];
  while (j < hi) buf[k++] = idx[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            idx.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

std::vector<double> row_means_abs(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<double> m(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::abs(v[i] - v[j]);
    m[i] = s / static_cast<double>(n);
  }
  return m;
}

}  // namespace

std::string_view to_string(Statistic s) {
  switch (s) {
    case Statistic::covariance: return "cov";
    case Statistic::dcov: return "dcov";
    case Statistic::kendall: return "kendall";
  }
  return "unknown";
}

Statistic parse_statistic(std::string_view name) {
  if (name == "cov" || name == "covariance") return Statistic::covariance;
  if (name == "dcov") return Statistic::dcov;
  if (name == "kendall" || name == "tau") return Statistic::kendall;
  throw Error(ErrorCode::InvalidParameter, "unknown statistic '" + std::string(name) + "'");
}

double sample_covariance(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b);
  const auto n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / (n - 1.0);
}

DcovValue distance_covariance(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b);
  if (a.size() < 4) throw Error(ErrorCode::TooFewPoints, "distance covariance needs at least 4 pairs");
  const std::size_t n = a.size();
  const std::vector<double> ra = row_means_abs(a), rb = row_means_abs(b);
  const auto nd = static_cast<double>(n);
  const double ga = std::accumulate(ra.begin(), ra.end(), 0.0) / nd;
  const double gb = std::accumulate(rb.begin(), rb.end(), 0.0) / nd;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double da = std::abs(a[i] - a[j]) - ra[i] - ra[j] + ga;
      const double db = std::abs(b[i] - b[j]) - rb[i] - rb[j] + gb;
      s += da * db;
    }
  }
  return {s / (nd * nd), ga, gb};
}

std::int64_t kendall_s(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b);
  const std::size_t n = a.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
    if (a[i] != a[j]) return a[i] < a[j];
    if (b[i] != b[j]) return b[i] < b[j];
    return i < j;
  });
  const auto n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t n1 = tied_pairs(idx, [&](std::size_t i, std::size_t j) { return a[i] == a[j]; });
  const std::int64_t n3 =
      tied_pairs(idx, [&](std::size_t i, std::size_t j) { return a[i] == a[j] && b[i] == b[j]; });
  std::vector<std::size_t> buf(n);
  const std::int64_t swaps = merge_count(idx, buf, b, 0, n);
  const std::int64_t n2 = tied_pairs(idx, [&](std::size_t i, std::size_t j) { return b[i] == b[j]; });
  return n0 - n1 - n2 + n3 - 2 * swaps;
}

std::int64_t kendall_s_brute(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b);
  std::int64_t s = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) s += sgn(a[i] - a[j]) * sgn(b[i] - b[j]);
  return s;
}

double kendall_tau(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<double>(a.size());
  return 2.0 * static_cast<double>(kendall_s(a, b)) / (n * (n - 1.0));
}

double kendall_tau_brute(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<double>(a.size());
  return 2.0 * static_cast<double>(kendall_s_brute(a, b)) / (n * (n - 1.0));
}

StatValue compute_statistic(Statistic s, std::span<const double> a, std::span<const double> b) {
  switch (s) {
    case Statistic::covariance: return {sample_covariance(a, b)};
    case Statistic::kendall: return {kendall_tau(a, b)};
    case Statistic::dcov: {
      const auto d = distance_covariance(a, b);
      return {d.value, d.mean_dist_a, d.mean_dist_b};
    }
  }
  throw Error(ErrorCode::InvalidParameter, "unknown statistic");
}

std::vector<double> standardize(Statistic s, std::span<const double> raw, std::span<const std::size_t> sizes,
                                std::span<const double> mean_dist_a, std::span<const double> mean_dist_b,
                                bool center_dcov) {
  const std::size_t m = raw.size();
  if (m < 2) throw Error(ErrorCode::InvalidParameter, "standardize needs the observed value and K >= 1 replicates");
  if (sizes.size() != m) throw Error(ErrorCode::LengthMismatch, "standardize: one size per raw value");
  for (auto n : sizes)
    if (n < 2) throw Error(ErrorCode::TooFewPoints, "standardize: every n_k must be >= 2");
  std::vector<double> out(m);
  if (s == Statistic::dcov) {
    if (mean_dist_a.size() != m || mean_dist_b.size() != m)
      throw Error(ErrorCode::LengthMismatch, "standardize: dcov needs mean distances for every value");
    for (std::size_t k = 0; k < m; ++k) {
      if (!(mean_dist_a[k] > 0.0 && mean_dist_b[k] > 0.0))
        throw Error(ErrorCode::DegenerateAux, "standardize: zero grand-mean distance at index " + std::to_string(k));
      out[k] = static_cast<double>(sizes[k]) * raw[k] / (mean_dist_a[k] * mean_dist_b[k]);
    }
    if (center_dcov) {
      const double c = std::accumulate(out.begin(), out.end(), 0.0) / static_cast<double>(m);
      for (auto& v : out) v -= c;
    }
    return out;
  }
  const double center = std::accumulate(raw.begin(), raw.end(), 0.0) / static_cast<double>(m);
  for (std::size_t k = 0; k < m; ++k) out[k] = (raw[k] - center) * std::sqrt(static_cast<double>(sizes[k]));
  return out;
}

}  // namespace rshift::stats
