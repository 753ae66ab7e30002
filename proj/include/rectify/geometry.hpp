/**
 * @file geometry.hpp
 * @brief Intervals, axis-aligned boxes, space-time points and probe grids.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "rectify/errors.hpp"

namespace rectify {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Real interval; bounds may be infinite. Openness is a matter of which predicate is used.
struct Interval {
  double lower = -kInf;
  double upper = kInf;

  [[nodiscard]] bool valid() const noexcept { return lower < upper; }
  [[nodiscard]] bool contains_open(double t) const noexcept { return t > lower && t < upper; }
  [[nodiscard]] bool contains_closed(double t) const noexcept { return t >= lower && t <= upper; }
  [[nodiscard]] bool contains(const Interval& other) const noexcept {
    return other.lower >= lower && other.upper <= upper;
  }
  [[nodiscard]] double width() const noexcept { return upper - lower; }
  [[nodiscard]] double midpoint() const noexcept { return 0.5 * (lower + upper); }
  [[nodiscard]] bool finite() const noexcept { return std::isfinite(lower) && std::isfinite(upper); }
};

/// Axis-aligned box, one interval per spatial axis.
struct Box {
  std::vector<Interval> axes;

  Box() = default;
  explicit Box(std::vector<Interval> a) : axes(std::move(a)) {}

  /// The whole of R^n.
  static Box unbounded(std::size_t n) { return Box(std::vector<Interval>(n)); }

  [[nodiscard]] std::size_t dimension() const noexcept { return axes.size(); }

  [[nodiscard]] bool valid() const noexcept {
    if (axes.empty()) {
      return false;
    }
    for (const auto& a : axes) {
      if (!a.valid()) {
        return false;
      }
    }
    return true;
  }

  [[nodiscard]] bool contains_open(const Vector& x) const noexcept {
    if (static_cast<std::size_t>(x.size()) != axes.size()) {
      return false;
    }
    for (std::size_t i = 0; i < axes.size(); ++i) {
      if (!axes[i].contains_open(x[static_cast<Eigen::Index>(i)])) {
        return false;
      }
    }
    return true;
  }

  [[nodiscard]] bool contains(const Box& other) const noexcept {
    if (other.axes.size() != axes.size()) {
      return false;
    }
    for (std::size_t i = 0; i < axes.size(); ++i) {
      if (!axes[i].contains(other.axes[i])) {
        return false;
      }
    }
    return true;
  }

  [[nodiscard]] bool finite() const noexcept {
    for (const auto& a : axes) {
      if (!a.finite()) {
        return false;
      }
    }
    return true;
  }

  [[nodiscard]] Vector center() const {
    Vector c(static_cast<Eigen::Index>(axes.size()));
    for (std::size_t i = 0; i < axes.size(); ++i) {
      const auto& a = axes[i];
      double v = 0.0;
      if (a.finite()) {
        v = a.midpoint();
      } else if (std::isfinite(a.lower)) {
        v = a.lower + 1.0;
      } else if (std::isfinite(a.upper)) {
        v = a.upper - 1.0;
      }
      c[static_cast<Eigen::Index>(i)] = v;
    }
    return c;
  }

  /// Signed distance to the nearest face; positive inside.
  [[nodiscard]] double face_distance(const Vector& x) const noexcept {
    double d = kInf;
    for (std::size_t i = 0; i < axes.size(); ++i) {
      const double xi = x[static_cast<Eigen::Index>(i)];
      d = std::min(d, xi - axes[i].lower);
      d = std::min(d, axes[i].upper - xi);
    }
    return d;
  }
};

/// A point (t, x) of I x M.
struct SpaceTimePoint {
  double t = 0.0;
  Vector x;
};

/// `count` evenly spaced values covering [a, b] (endpoints included); a single value yields the midpoint.
[[nodiscard]] inline std::vector<double> linspace(double a, double b, std::size_t count) {
  std::vector<double> out;
  if (count == 0) {
    return out;
  }
  if (count == 1) {
    out.push_back(0.5 * (a + b));
    return out;
  }
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  out.back() = b;
  return out;
}

/// Tensor grid of spatial points over a finite box, first axis varying slowest.
[[nodiscard]] inline std::vector<Vector> box_grid(const Box& box, std::size_t per_axis) {
  if (!box.finite()) {
    throw InvalidInput("probe box must be finite");
  }
  const std::size_t n = box.dimension();
  std::vector<std::vector<double>> ticks;
  ticks.reserve(n);
  for (const auto& a : box.axes) {
    ticks.push_back(linspace(a.lower, a.upper, per_axis));
  }
  std::vector<Vector> out;
  if (n == 0 || per_axis == 0) {
    return out;
  }
  std::vector<std::size_t> idx(n, 0);
  bool done = false;
  while (!done) {
    Vector p(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      p[static_cast<Eigen::Index>(i)] = ticks[i][idx[i]];
    }
    out.push_back(std::move(p));
    done = true;
    for (std::size_t k = n; k-- > 0;) {
      if (++idx[k] < per_axis) {
        done = false;
        break;
      }
      idx[k] = 0;
    }
  }
  return out;
}

/// Product of `time_count` times over `window` with the spatial grid of `box`.
[[nodiscard]] inline std::vector<SpaceTimePoint> space_time_grid(const Interval& window, std::size_t time_count,
                                                                 const Box& box, std::size_t per_axis) {
  std::vector<SpaceTimePoint> out;
  const auto space = box_grid(box, per_axis);
  for (double t : linspace(window.lower, window.upper, time_count)) {
    for (const auto& x : space) {
      out.push_back({t, x});
    }
  }
  return out;
}

}  // namespace rectify
