/**
 * @file rectification.hpp
 * @brief Space-time maps, the rectifying diffeomorphism Phi(t, x0) = (t, phi(t; t0, x0)),
 *        pushforwards of extended vector fields, and verification on probe grids.
 *
 * Jacobians of space-time maps are (1+n) x (1+n): row 0 is the time output, rows 1..n the
 * space output; column 0 differentiates in t, columns 1..n in x.
 */
#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rectify/errors.hpp"
#include "rectify/expr.hpp"
#include "rectify/flow.hpp"
#include "rectify/geometry.hpp"
#include "rectify/integrator.hpp"

namespace rectify {

/// Closed-form description of a space-time map: t' = time, x'_i = space[i].
struct MapExpressions {
  Expression time;
  std::vector<Expression> space;
};

/// Diffeomorphism of I x M given by closures, optionally with closed-form expressions.
class SpaceTimeMap {
 public:
  using PointFn = std::function<SpaceTimePoint(const SpaceTimePoint&)>;
  using JacobianFn = std::function<Matrix(const SpaceTimePoint&)>;

  SpaceTimeMap(std::size_t dimension, PointFn forward, JacobianFn jacobian, PointFn inverse = {},
               JacobianFn inverse_jacobian = {})
      : dim_(dimension),
        forward_(std::move(forward)),
        jacobian_(std::move(jacobian)),
        inverse_(std::move(inverse)),
        inverse_jacobian_(std::move(inverse_jacobian)) {}

  static SpaceTimeMap identity(std::size_t n) {
    const auto id = [](const SpaceTimePoint& p) { return p; };
    const auto jac = [n](const SpaceTimePoint&) { return Matrix::Identity(static_cast<Eigen::Index>(n + 1),
                                                                          static_cast<Eigen::Index>(n + 1)); };
    SpaceTimeMap m(n, id, jac, id, jac);
    m.expressions_ = MapExpressions{Expression::time(n), {}};
    for (std::size_t i = 0; i < n; ++i) {
      m.expressions_->space.push_back(Expression::space(i, n));
    }
    m.inverse_expressions_ = m.expressions_;
    return m;
  }

  /// Expression-defined map with symbolic Jacobian; inverse expressions are optional.
  static SpaceTimeMap from_expressions(MapExpressions forward, std::optional<MapExpressions> inverse = std::nullopt) {
    const std::size_t n = forward.space.size();
    check_expressions(forward, n);
    SpaceTimeMap m(n, evaluator(forward), symbolic_jacobian(forward));
    m.expressions_ = forward;
    if (inverse) {
      check_expressions(*inverse, n);
      m.inverse_ = evaluator(*inverse);
      m.inverse_jacobian_ = symbolic_jacobian(*inverse);
      m.inverse_expressions_ = std::move(inverse);
    }
    return m;
  }

  /// Parse "t' ; x1' ; ..." component texts.
  static SpaceTimeMap parse(std::size_t n, const std::string& time, const std::vector<std::string>& space,
                            std::optional<std::pair<std::string, std::vector<std::string>>> inverse = std::nullopt) {
    auto build = [n](const std::string& te, const std::vector<std::string>& se) {
      MapExpressions e{rectify::parse(te, n), {}};
      for (const auto& s : se) {
        e.space.push_back(rectify::parse(s, n));
      }
      return e;
    };
    std::optional<MapExpressions> inv;
    if (inverse) {
      inv = build(inverse->first, inverse->second);
    }
    return from_expressions(build(time, space), std::move(inv));
  }

  [[nodiscard]] std::size_t dimension() const noexcept { return dim_; }
  [[nodiscard]] bool has_inverse() const noexcept { return static_cast<bool>(inverse_); }

  [[nodiscard]] SpaceTimePoint operator()(const SpaceTimePoint& p) const { return forward_(p); }

  [[nodiscard]] SpaceTimePoint inverse(const SpaceTimePoint& p) const {
    if (!inverse_) {
      throw MissingInverse("space-time map has no inverse");
    }
    return inverse_(p);
  }

  [[nodiscard]] Matrix jacobian(const SpaceTimePoint& p) const { return jacobian_(p); }

  /// Jacobian of the inverse map at p; falls back to inverting the forward Jacobian at inverse(p).
  [[nodiscard]] Matrix inverse_jacobian(const SpaceTimePoint& p) const {
    if (inverse_jacobian_) {
      return inverse_jacobian_(p);
    }
    return jacobian(inverse(p)).inverse();
  }

  [[nodiscard]] const std::optional<MapExpressions>& expressions() const noexcept { return expressions_; }
  [[nodiscard]] const std::optional<MapExpressions>& inverse_expressions() const noexcept {
    return inverse_expressions_;
  }

  /// The inverse as a map in its own right.
  [[nodiscard]] SpaceTimeMap inverted() const {
    if (!inverse_) {
      throw MissingInverse("space-time map has no inverse");
    }
    SpaceTimeMap self = *this;
    JacobianFn inv_jac = inverse_jacobian_
                             ? inverse_jacobian_
                             : JacobianFn([self](const SpaceTimePoint& p) { return self.inverse_jacobian(p); });
    SpaceTimeMap m(dim_, inverse_, std::move(inv_jac), forward_, jacobian_);
    m.expressions_ = inverse_expressions_;
    m.inverse_expressions_ = expressions_;
    return m;
  }

 private:
  static void check_expressions(const MapExpressions& e, std::size_t n) {
    if (e.time.dimension() != n) {
      throw DimensionError("map expressions disagree on dimension");
    }
    for (const auto& s : e.space) {
      if (s.dimension() != n) {
        throw DimensionError("map expressions disagree on dimension");
      }
    }
  }

  static PointFn evaluator(const MapExpressions& e) {
    return [e](const SpaceTimePoint& p) {
      return SpaceTimePoint{e.time.evaluate(p.t, p.x), evaluate_all(e.space, p.t, p.x)};
    };
  }

  static JacobianFn symbolic_jacobian(const MapExpressions& e) {
    const std::size_t n = e.space.size();
    std::vector<Expression> entries;
    entries.reserve((n + 1) * (n + 1));
    for (std::size_t r = 0; r <= n; ++r) {
      const Expression& out = r == 0 ? e.time : e.space[r - 1];
      for (std::size_t c = 0; c <= n; ++c) {
        entries.push_back(differentiate(out, c == 0 ? Variable::time() : Variable::space(c - 1)));
      }
    }
    return [entries = std::move(entries), n](const SpaceTimePoint& p) {
      const auto m = static_cast<Eigen::Index>(n + 1);
      Matrix j(m, m);
      for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index c = 0; c < m; ++c) {
          j(r, c) = entries[static_cast<std::size_t>(r * m + c)].evaluate(p.t, p.x);
        }
      }
      return j;
    };
  }

  std::size_t dim_;
  PointFn forward_;
  JacobianFn jacobian_;
  PointFn inverse_;
  JacobianFn inverse_jacobian_;
  std::optional<MapExpressions> expressions_;
  std::optional<MapExpressions> inverse_expressions_;
};

/// outer o inner, Jacobians by the chain rule. The inverse exists when both factors have one.
[[nodiscard]] inline SpaceTimeMap compose(const SpaceTimeMap& outer, const SpaceTimeMap& inner) {
  if (outer.dimension() != inner.dimension()) {
    throw DimensionError("cannot compose maps of different dimension");
  }
  auto fwd = [outer, inner](const SpaceTimePoint& p) { return outer(inner(p)); };
  auto jac = [outer, inner](const SpaceTimePoint& p) -> Matrix {
    return outer.jacobian(inner(p)) * inner.jacobian(p);
  };
  if (!outer.has_inverse() || !inner.has_inverse()) {
    return {outer.dimension(), fwd, jac};
  }
  auto inv = [outer, inner](const SpaceTimePoint& p) { return inner.inverse(outer.inverse(p)); };
  auto inv_jac = [outer, inner](const SpaceTimePoint& p) -> Matrix {
    return inner.inverse_jacobian(outer.inverse(p)) * outer.inverse_jacobian(p);
  };
  return {outer.dimension(), fwd, jac, inv, inv_jac};
}

/// A field on I x M with values in R^{1+n}, e.g. the extended field (1, v).
using ExtendedField = std::function<Vector(const SpaceTimePoint&)>;

[[nodiscard]] inline ExtendedField extended_field(const VectorFieldSpec& field) {
  return [field](const SpaceTimePoint& p) {
    Vector w(static_cast<Eigen::Index>(field.dimension() + 1));
    w[0] = 1.0;
    w.tail(static_cast<Eigen::Index>(field.dimension())) = field(p.t, p.x);
    return w;
  };
}

/// The direction field of the trivial equation x' = 0.
[[nodiscard]] inline ExtendedField trivial_field(std::size_t n) {
  return [n](const SpaceTimePoint&) {
    Vector w = Vector::Zero(static_cast<Eigen::Index>(n + 1));
    w[0] = 1.0;
    return w;
  };
}

/// J_map(p) w(p): the pushed-forward vector, attached to map(p).
[[nodiscard]] inline Vector pushforward_at(const SpaceTimeMap& map, const ExtendedField& w, const SpaceTimePoint& p) {
  return map.jacobian(p) * w(p);
}

/// y -> J_map(p) w(p) with p = map^{-1}(y).
[[nodiscard]] inline std::function<Vector(const SpaceTimePoint&)> pushforward(const SpaceTimeMap& map,
                                                                             ExtendedField w) {
  if (!map.has_inverse()) {
    throw MissingInverse("pushforward needs the inverse map");
  }
  return [map, w = std::move(w)](const SpaceTimePoint& y) { return pushforward_at(map, w, map.inverse(y)); };
}

/// Phi(t, x0) = (t, phi(t; t0, x0)) realised by on-demand integration from the base time t0.
class Rectification {
 public:
  Rectification(VectorFieldSpec field, double t0, Interval window, Tolerances tol, Box probe_box)
      : field_(std::move(field)), t0_(t0), window_(window), tol_(tol), probe_box_(std::move(probe_box)) {}

  [[nodiscard]] const VectorFieldSpec& field() const noexcept { return field_; }
  [[nodiscard]] double base_time() const noexcept { return t0_; }
  [[nodiscard]] const Interval& window() const noexcept { return window_; }
  [[nodiscard]] const Tolerances& tolerances() const noexcept { return tol_; }
  [[nodiscard]] const Box& probe_box() const noexcept { return probe_box_; }
  [[nodiscard]] std::size_t dimension() const noexcept { return field_.dimension(); }

  /// Phi(t, x0). The time coordinate is returned untouched.
  [[nodiscard]] SpaceTimePoint apply(double t, const Vector& x0) const {
    check_time(t);
    return {t, flow(field_, {t0_, x0, t, tol_})};
  }

  /// Phi^{-1}(tau, xi) = (tau, phi(t0; tau, xi)).
  [[nodiscard]] SpaceTimePoint apply_inverse(double tau, const Vector& xi) const {
    check_time(tau);
    return {tau, flow(field_, {tau, xi, t0_, tol_})};
  }

  /// D Phi at (t, x0) = [[1, 0], [v(t, phi), d phi / d x0]].
  [[nodiscard]] Matrix jacobian(double t, const Vector& x0) const {
    check_time(t);
    const auto [x, j] = flow_with_jacobian(field_, {t0_, x0, t, tol_});
    const auto n = static_cast<Eigen::Index>(dimension());
    Matrix out = Matrix::Zero(n + 1, n + 1);
    out(0, 0) = 1.0;
    out.block(1, 0, n, 1) = field_(t, x);
    out.block(1, 1, n, n) = j;
    return out;
  }

  /// D(Phi^{-1}) at (tau, xi), as the inverse of D Phi at Phi^{-1}(tau, xi).
  [[nodiscard]] Matrix inverse_jacobian(double tau, const Vector& xi) const {
    const auto pre = apply_inverse(tau, xi);
    return jacobian(pre.t, pre.x).inverse();
  }

  /// D(Phi^{-1}) at (tau, xi) from backward variational integration; the time column is -J v(tau, xi).
  /// Used only to cross-check inverse_jacobian.
  [[nodiscard]] Matrix inverse_jacobian_direct(double tau, const Vector& xi) const {
    check_time(tau);
    const auto [x0, j] = flow_with_jacobian(field_, {tau, xi, t0_, tol_});
    const auto n = static_cast<Eigen::Index>(dimension());
    Matrix out = Matrix::Zero(n + 1, n + 1);
    out(0, 0) = 1.0;
    out.block(1, 0, n, 1) = -j * field_(tau, xi);
    out.block(1, 1, n, n) = j;
    return out;
  }

  [[nodiscard]] SpaceTimeMap forward_map() const {
    const Rectification self = *this;
    return {dimension(), [self](const SpaceTimePoint& p) { return self.apply(p.t, p.x); },
            [self](const SpaceTimePoint& p) { return self.jacobian(p.t, p.x); },
            [self](const SpaceTimePoint& p) { return self.apply_inverse(p.t, p.x); },
            [self](const SpaceTimePoint& p) { return self.inverse_jacobian(p.t, p.x); }};
  }

  [[nodiscard]] SpaceTimeMap inverse_map() const { return forward_map().inverted(); }

 private:
  void check_time(double t) const {
    if (!window_.contains_closed(t)) {
      throw OutOfRange("time " + std::to_string(t) + " outside the rectification window");
    }
  }

  VectorFieldSpec field_;
  double t0_;
  Interval window_;
  Tolerances tol_;
  Box probe_box_;
};

/// Build Phi over `window` (a compact subset of I containing t0) and run a smoke probe from the
/// centre of `probe_box`: a round trip at t0 + (b - a)/4 and a sweep of the whole window.
/// When `t0` is empty the window midpoint is used; an empty `probe_box` means M itself.
[[nodiscard]] inline Rectification build_rectification(const VectorFieldSpec& field, std::optional<double> t0,
                                                       const Interval& window, const Tolerances& tol = {},
                                                       std::optional<Box> probe_box = std::nullopt) {
  tol.validate();
  if (!window.valid() || !window.finite()) {
    throw InvalidInput("rectification window must be a finite non-empty interval");
  }
  if (!field.interval().contains_open(window.lower) || !field.interval().contains_open(window.upper)) {
    throw InvalidInput("rectification window must lie inside I");
  }
  const double base = t0.value_or(window.midpoint());
  if (!window.contains_closed(base)) {
    throw InvalidInput("base time outside the window");
  }
  Box box = probe_box.value_or(field.box());
  if (!field.box().contains(box)) {
    throw InvalidInput("probe box must lie inside M");
  }
  Rectification r(field, base, window, tol, box);

  const Vector center = box.center();
  if (!field.box().contains_open(center)) {
    throw InvalidInput("probe box centre is not an interior point of M");
  }
  const double t_probe = std::clamp(base + window.width() / 4.0, window.lower, window.upper);
  try {
    const auto image = r.apply(t_probe, center);
    const auto back = r.apply_inverse(image.t, image.x);
    if ((back.x - center).norm() > 1e-6 * (center.norm() + 1.0)) {
      throw ProbeFailed("smoke probe round trip residual too large");
    }
    (void)r.apply(window.lower, center);
    (void)r.apply(window.upper, center);
  } catch (const TrajectoryError& e) {
    throw ProbeFailed(std::string("smoke probe failed: ") + e.what());
  }
  return r;
}

enum class ProbeFailureKind { DomainEscape, BlowUp };

struct ProbeFailure {
  SpaceTimePoint point;
  ProbeFailureKind kind = ProbeFailureKind::BlowUp;
  double event_time = 0.0;
};

struct RectificationReport {
  double max_pushforward_residual = 0.0;
  double max_roundtrip_residual = 0.0;
  std::size_t probes = 0;
  /// Per-probe residuals in grid order; empty optional where the probe failed.
  std::vector<std::optional<double>> pushforward_residuals;
  std::vector<ProbeFailure> failures;

  [[nodiscard]] bool passed(double pushforward_threshold, double roundtrip_threshold) const {
    return failures.empty() && max_pushforward_residual <= pushforward_threshold &&
           max_roundtrip_residual <= roundtrip_threshold;
  }
};

/// || (Phi^{-1})_* (1, v) - (1, 0) || and round-trip residuals at each probe point.
[[nodiscard]] inline RectificationReport verify_rectification(const Rectification& r,
                                                              const std::vector<SpaceTimePoint>& probe_grid) {
  RectificationReport report;
  report.probes = probe_grid.size();
  const auto n = static_cast<Eigen::Index>(r.dimension());
  Vector target = Vector::Zero(n + 1);
  target[0] = 1.0;
  const auto w = extended_field(r.field());
  for (const auto& p : probe_grid) {
    try {
      const Vector pushed = r.inverse_jacobian(p.t, p.x) * w(p);
      const double push_res = (pushed - target).norm();

      const double scale = p.x.norm() + 1.0;
      const auto pre = r.apply_inverse(p.t, p.x);
      const auto again = r.apply(pre.t, pre.x);
      const auto img = r.apply(p.t, p.x);
      const auto back = r.apply_inverse(img.t, img.x);
      const double rt = std::max((again.x - p.x).norm(), (back.x - p.x).norm()) / scale;

      report.pushforward_residuals.emplace_back(push_res);
      report.max_pushforward_residual = std::max(report.max_pushforward_residual, push_res);
      report.max_roundtrip_residual = std::max(report.max_roundtrip_residual, rt);
    } catch (const TrajectoryEscaped& e) {
      report.pushforward_residuals.emplace_back(std::nullopt);
      report.failures.push_back({p, ProbeFailureKind::DomainEscape, e.event_time()});
    } catch (const TrajectoryBlowUp& e) {
      report.pushforward_residuals.emplace_back(std::nullopt);
      report.failures.push_back({p, ProbeFailureKind::BlowUp, e.event_time()});
    }
  }
  return report;
}

}  // namespace rectify
