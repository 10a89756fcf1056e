#include "rshift/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rshift/error.hpp"

namespace rshift::geom {

namespace {

constexpr std::size_t kBruteForceLimit = 64;

double dist_sq(Point a, Point b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

double wrap_axis(double value, double lo, double side) {
  double r = std::fmod(value - lo, side);
  if (r < 0.0) r += side;
  if (r >= side) r -= side;  // r + side rounded up to side
  return lo + r;
}

}  // namespace

Window::Window(double x_min, double x_max, double y_min, double y_max)
    : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max) {
  if (!(std::isfinite(x_min) && std::isfinite(x_max) && std::isfinite(y_min) && std::isfinite(y_max)))
    throw Error(ErrorCode::InvalidParameter, "window bounds must be finite");
  if (!(x_min < x_max) || !(y_min < y_max))
    throw Error(ErrorCode::InvalidParameter, "window requires x_min < x_max and y_min < y_max");
}

Window Window::bounding(std::span<const Point> points) {
  if (points.empty()) throw Error(ErrorCode::TooFewPoints, "cannot bound an empty point set");
  double x0 = points[0].x, x1 = points[0].x, y0 = points[0].y, y1 = points[0].y;
  for (const auto& p : points) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  return {x0, x1, y0, y1};
}

double Window::diagonal() const { return std::hypot(width(), height()); }

PointSet::PointSet(std::vector<Point> coords, const Window& window)
    : coords_(std::move(coords)), window_(window) {
  if (coords_.empty()) throw Error(ErrorCode::TooFewPoints, "point set must be nonempty");
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    if (!window_.contains(coords_[i]))
      throw Error(ErrorCode::InvalidParameter, "point " + std::to_string(i) + " lies outside the window");
  }
}

Point torus_wrap(Point point, Shift shift, const Window& window) {
  return {wrap_axis(point.x + shift.dx, window.x_min(), window.width()),
          wrap_axis(point.y + shift.dy, window.y_min(), window.height())};
}

Window intersect_window(const Window& window, Shift shift) {
  if (std::abs(shift.dx) >= window.width() || std::abs(shift.dy) >= window.height())
    throw Error(ErrorCode::EmptyIntersection, "shifted window does not overlap the original");
  return {std::max(window.x_min(), window.x_min() + shift.dx), std::min(window.x_max(), window.x_max() + shift.dx),
          std::max(window.y_min(), window.y_min() + shift.dy), std::min(window.y_max(), window.y_max() + shift.dy)};
}

KdTree::KdTree(std::span<const Point> points) : points_(points.begin(), points.end()) {
  nodes_.resize(points_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) nodes_[i] = {i, 0};
  build(0, nodes_.size(), 0);
}

void KdTree::build(std::size_t lo, std::size_t hi, int depth) {
  if (hi <= lo) return;
  const int axis = depth % 2;
  const std::size_t mid = lo + (hi - lo) / 2;
  auto key = [&](const Node& n) { return axis == 0 ? points_[n.index].x : points_[n.index].y; };
  std::nth_element(nodes_.begin() + static_cast<std::ptrdiff_t>(lo), nodes_.begin() + static_cast<std::ptrdiff_t>(mid),
                   nodes_.begin() + static_cast<std::ptrdiff_t>(hi), [&](const Node& a, const Node& b) {
                     const double ka = key(a), kb = key(b);
                     return ka < kb || (ka == kb && a.index < b.index);
                   });
  nodes_[mid].axis = axis;
  build(lo, mid, depth + 1);
  build(mid + 1, hi, depth + 1);
}

void KdTree::search(std::size_t lo, std::size_t hi, Point q, std::size_t& best, double& best_d2) const {
  if (hi <= lo) return;
  const std::size_t mid = lo + (hi - lo) / 2;
  const Node& node = nodes_[mid];
  const Point p = points_[node.index];
  const double d2 = dist_sq(p, q);
  if (d2 < best_d2 || (d2 == best_d2 && node.index < best)) {
    best = node.index;
    best_d2 = d2;
  }
  const double diff = node.axis == 0 ? q.x - p.x : q.y - p.y;
  if (diff < 0.0) {
    search(lo, mid, q, best, best_d2);
    if (diff * diff <= best_d2) search(mid + 1, hi, q, best, best_d2);
  } else {
    search(mid + 1, hi, q, best, best_d2);
    if (diff * diff <= best_d2) search(lo, mid, q, best, best_d2);
  }
}

std::size_t KdTree::nearest(Point query, double* distance_sq) const {
  std::size_t best = std::numeric_limits<std::size_t>::max();
  double best_d2 = std::numeric_limits<double>::infinity();
  search(0, nodes_.size(), query, best, best_d2);
  if (distance_sq) *distance_sq = best_d2;
  return best;
}

Pairing nearest_pairing(std::span<const Point> targets, std::span<const Point> sources,
                        std::optional<double> max_distance) {
  if (targets.empty() || sources.empty()) throw Error(ErrorCode::TooFewPoints, "pairing needs nonempty point sets");
  Pairing out;
  out.pairs.reserve(targets.size());
  auto emit = [&](std::size_t t, std::size_t s, double d2) {
    const double d = std::sqrt(d2);
    if (max_distance && d > *max_distance) return;
    out.pairs.push_back({t, s, d});
  };
  if (sources.size() < kBruteForceLimit) {
    for (std::size_t t = 0; t < targets.size(); ++t) {
      std::size_t best = 0;
      double best_d2 = dist_sq(targets[t], sources[0]);
      for (std::size_t s = 1; s < sources.size(); ++s) {
        const double d2 = dist_sq(targets[t], sources[s]);
        if (d2 < best_d2) {
          best = s;
          best_d2 = d2;
        }
      }
      emit(t, best, best_d2);
    }
  } else {
    const KdTree tree(sources);
    for (std::size_t t = 0; t < targets.size(); ++t) {
      double d2 = 0.0;
      const std::size_t s = tree.nearest(targets[t], &d2);
      emit(t, s, d2);
    }
  }
  if (out.pairs.empty()) throw Error(ErrorCode::NoPairs, "no target lies within max_distance of a source");
  return out;
}

std::optional<GridLayout> detect_grid(std::span<const Point> points, const Window& window, double rel_tol) {
  const std::size_t n = points.size();
  if (n < 4) return std::nullopt;

  auto axis_layout = [&](auto coord, double& origin, double& step, std::size_t& count,
                         std::vector<std::size_t>& cell) -> bool {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = coord(points[i]);
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const double span_len = sorted.back() - sorted.front();
    if (span_len <= 0.0) return false;
    const double tol = rel_tol * span_len;
    std::vector<double> uniq;
    for (double x : sorted)
      if (uniq.empty() || x - uniq.back() > tol) uniq.push_back(x);
    count = uniq.size();
    if (count < 2) return false;
    origin = uniq.front();
    step = span_len / static_cast<double>(count - 1);
    cell.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double pos = (v[i] - origin) / step;
      const double r = std::round(pos);
      if (std::abs(pos - r) * step > tol) return false;
      cell[i] = static_cast<std::size_t>(r);
    }
    return true;
  };

  GridLayout g;
  if (!axis_layout([](Point p) { return p.x; }, g.x0, g.dx, g.nx, g.ix)) return std::nullopt;
  if (!axis_layout([](Point p) { return p.y; }, g.y0, g.dy, g.ny, g.iy)) return std::nullopt;
  if (g.nx * g.ny != n) return std::nullopt;
  g.at.assign(n, std::numeric_limits<std::size_t>::max());
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t& slot = g.at[g.ix[i] + g.nx * g.iy[i]];
    if (slot != std::numeric_limits<std::size_t>::max()) return std::nullopt;
    slot = i;
  }
  const double nx_side = g.dx * static_cast<double>(g.nx);
  const double ny_side = g.dy * static_cast<double>(g.ny);
  g.torus_compatible = std::abs(nx_side - window.width()) <= 1e-9 * window.width() &&
                       std::abs(ny_side - window.height()) <= 1e-9 * window.height();
  return g;
}

}  // namespace rshift::geom
