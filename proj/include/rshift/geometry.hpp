#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace rshift::geom {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct Shift {
  double dx = 0.0;
  double dy = 0.0;

  [[nodiscard]] bool is_zero() const { return dx == 0.0 && dy == 0.0; }
  friend bool operator==(const Shift&, const Shift&) = default;
};

inline Point operator+(Point p, Shift v) { return {p.x + v.dx, p.y + v.dy}; }

/// Axis-aligned rectangular observation window.
class Window {
 public:
  Window(double x_min, double x_max, double y_min, double y_max);

  static Window unit() { return {0.0, 1.0, 0.0, 1.0}; }
  /// Smallest window containing every point; throws if the box is degenerate.
  static Window bounding(std::span<const Point> points);

  [[nodiscard]] double x_min() const { return x_min_; }
  [[nodiscard]] double x_max() const { return x_max_; }
  [[nodiscard]] double y_min() const { return y_min_; }
  [[nodiscard]] double y_max() const { return y_max_; }
  [[nodiscard]] double width() const { return x_max_ - x_min_; }
  [[nodiscard]] double height() const { return y_max_ - y_min_; }
  [[nodiscard]] double area() const { return width() * height(); }
  [[nodiscard]] double diagonal() const;

  /// Closed-rectangle membership.
  [[nodiscard]] bool contains(Point p) const {
    return p.x >= x_min_ && p.x <= x_max_ && p.y >= y_min_ && p.y <= y_max_;
  }

  friend bool operator==(const Window&, const Window&) = default;

 private:
  double x_min_, x_max_, y_min_, y_max_;
};

/// Observation locations; index i is the identity of observation i.
class PointSet {
 public:
  PointSet(std::vector<Point> coords, const Window& window);

  [[nodiscard]] std::size_t size() const { return coords_.size(); }
  [[nodiscard]] const Point& operator[](std::size_t i) const { return coords_[i]; }
  [[nodiscard]] std::span<const Point> points() const { return coords_; }
  [[nodiscard]] const Window& window() const { return window_; }

 private:
  std::vector<Point> coords_;
  Window window_;
};

struct PairEntry {
  std::size_t residual_index = 0;
  std::size_t covariate_index = 0;
  double distance = 0.0;
};

struct Pairing {
  std::vector<PairEntry> pairs;

  [[nodiscard]] std::size_t retained_count() const { return pairs.size(); }
};

/// point + shift, reduced modulo the window side lengths on each axis.
Point torus_wrap(Point point, Shift shift, const Window& window);

/// W ∩ (W + shift). Throws EmptyIntersection when the two do not overlap.
Window intersect_window(const Window& window, Shift shift);

/// Pairs every target with its nearest source (Euclidean, ties to the
/// smallest source index). Pairs farther than max_distance are dropped;
/// throws NoPairs if nothing survives.
Pairing nearest_pairing(std::span<const Point> targets, std::span<const Point> sources,
                        std::optional<double> max_distance = std::nullopt);

/// Static 2-d tree for repeated nearest-neighbour queries.
class KdTree {
 public:
  explicit KdTree(std::span<const Point> points);

  /// Index of the nearest point; ties resolve to the smallest index.
  [[nodiscard]] std::size_t nearest(Point query, double* distance_sq = nullptr) const;

 private:
  struct Node {
    std::size_t index;
    int axis;
  };
  void build(std::size_t lo, std::size_t hi, int depth);
  void search(std::size_t lo, std::size_t hi, Point q, std::size_t& best, double& best_d2) const;

  std::vector<Point> points_;
  std::vector<Node> nodes_;  // implicit tree: median of [lo, hi) is the node
};

/// Regular lattice layout of a point set (every (ix, iy) cell occupied once).
struct GridLayout {
  double x0 = 0.0, y0 = 0.0;  // coordinates of cell (0, 0)
  double dx = 0.0, dy = 0.0;
  std::size_t nx = 0, ny = 0;
  std::vector<std::size_t> ix, iy;   // cell of each observation
  std::vector<std::size_t> at;       // observation index at cell (ix + nx * iy)
  bool torus_compatible = false;     // nx*dx and ny*dy equal the window sides

  [[nodiscard]] std::size_t index_at(std::size_t cx, std::size_t cy) const { return at[cx + nx * cy]; }
};

/// Detects a complete regular grid (nx, ny ≥ 2); nullopt otherwise.
std::optional<GridLayout> detect_grid(std::span<const Point> points, const Window& window,
                                      double rel_tol = 1e-9);

}  // namespace rshift::geom
