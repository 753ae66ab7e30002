/**
 * @file symmetry.hpp
 * @brief Smooth wreath-product elements (f, g) acting by (t, x) -> (f(x)(t), g(x)), their group law,
 *        conjugation of trivial-equation symmetries through a rectification, and numerical
 *        symmetry checks on integrated solutions.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rectify/errors.hpp"
#include "rectify/expr.hpp"
#include "rectify/geometry.hpp"
#include "rectify/integrator.hpp"
#include "rectify/rectification.hpp"

namespace rectify {

/// Element (f, g) of Diff(I) wr Diff(M): f(t, x) is the time diffeomorphism attached to x, g(x) moves space.
/// `f_inv_t` inverts t -> f(t, x) at fixed x; `g_inv` inverts g. Both are optional.
class WreathElement {
 public:
  WreathElement(Expression f, std::vector<Expression> g, std::optional<Expression> f_inv_t = std::nullopt,
                std::optional<std::vector<Expression>> g_inv = std::nullopt)
      : f_(std::move(f)), g_(std::move(g)), f_inv_t_(std::move(f_inv_t)), g_inv_(std::move(g_inv)) {
    const std::size_t n = g_.size();
    if (n == 0) {
      throw InvalidInput("wreath element needs at least one space component");
    }
    auto check_dim = [n](const Expression& e) {
      if (e.dimension() != n) {
        throw DimensionError("wreath element expressions disagree on dimension");
      }
    };
    check_dim(f_);
    for (const auto& gi : g_) {
      check_dim(gi);
      if (gi.depends_on_time()) {
        throw InvalidInput("space part g of a wreath element must not depend on t");
      }
    }
    if (f_inv_t_) {
      check_dim(*f_inv_t_);
    }
    if (g_inv_) {
      if (g_inv_->size() != n) {
        throw DimensionError("g inverse has the wrong number of components");
      }
      for (const auto& gi : *g_inv_) {
        check_dim(gi);
        if (gi.depends_on_time()) {
          throw InvalidInput("inverse of g must not depend on t");
        }
      }
    }
  }

  static WreathElement identity(std::size_t n) {
    std::vector<Expression> x;
    for (std::size_t i = 0; i < n; ++i) {
      x.push_back(Expression::space(i, n));
    }
    return {Expression::time(n), x, Expression::time(n), x};
  }

  /// Parse from text; inverse texts may be empty strings / empty vectors for "absent".
  static WreathElement parse(std::size_t n, const std::string& f, const std::vector<std::string>& g,
                             const std::string& f_inv_t = {}, const std::vector<std::string>& g_inv = {}) {
    auto many = [n](const std::vector<std::string>& src) {
      std::vector<Expression> out;
      for (const auto& s : src) {
        out.push_back(rectify::parse(s, n));
      }
      return out;
    };
    std::optional<Expression> fi;
    if (!f_inv_t.empty()) {
      fi = rectify::parse(f_inv_t, n);
    }
    std::optional<std::vector<Expression>> gi;
    if (!g_inv.empty()) {
      gi = many(g_inv);
    }
    return {rectify::parse(f, n), many(g), std::move(fi), std::move(gi)};
  }

  [[nodiscard]] std::size_t dimension() const noexcept { return g_.size(); }
  [[nodiscard]] const Expression& f() const noexcept { return f_; }
  [[nodiscard]] const std::vector<Expression>& g() const noexcept { return g_; }
  [[nodiscard]] const std::optional<Expression>& f_inv_t() const noexcept { return f_inv_t_; }
  [[nodiscard]] const std::optional<std::vector<Expression>>& g_inv() const noexcept { return g_inv_; }
  [[nodiscard]] bool has_inverse() const noexcept { return f_inv_t_.has_value() && g_inv_.has_value(); }

 private:
  Expression f_;
  std::vector<Expression> g_;
  std::optional<Expression> f_inv_t_;
  std::optional<std::vector<Expression>> g_inv_;
};

/// (f, g)(t, x) = (f(x)(t), g(x))
[[nodiscard]] inline SpaceTimePoint wreath_act(const WreathElement& a, double t, const Vector& x) {
  return {a.f().evaluate(t, x), evaluate_all(a.g(), t, x)};
}

/// (f1, g1)(f2, g2) = (x -> f1(g2(x)) o f2(x), g1 o g2), built by substitution.
/// Inverse expressions are carried along when both factors have them.
[[nodiscard]] inline WreathElement wreath_compose(const WreathElement& a, const WreathElement& b) {
  if (a.dimension() != b.dimension()) {
    throw DimensionError("cannot compose wreath elements of different dimension");
  }
  const std::size_t n = a.dimension();
  Expression f = substitute(a.f(), b.f(), b.g());
  std::vector<Expression> g;
  g.reserve(n);
  for (const auto& gi : a.g()) {
    g.push_back(substitute(gi, b.f(), b.g()));
  }
  if (!a.has_inverse() || !b.has_inverse()) {
    return {std::move(f), std::move(g)};
  }
  std::vector<Expression> x;
  for (std::size_t i = 0; i < n; ++i) {
    x.push_back(Expression::space(i, n));
  }
  const Expression t = Expression::time(n);
  // At fixed x: t -> f2(t, x) -> f1(., g2(x)); invert as tau -> f2^{-1}(f1^{-1}(tau, g2(x)), x).
  Expression inner = substitute(*a.f_inv_t(), t, b.g());
  Expression f_inv = substitute(*b.f_inv_t(), inner, x);
  std::vector<Expression> g_inv;
  for (const auto& gi : *b.g_inv()) {
    g_inv.push_back(substitute(gi, t, *a.g_inv()));
  }
  return {std::move(f), std::move(g), std::move(f_inv), std::move(g_inv)};
}

/// b with b.g = g^{-1} and b.f(t, x) = f^{-1}_t(t, g^{-1}(x)).
[[nodiscard]] inline WreathElement wreath_inverse(const WreathElement& a) {
  if (!a.has_inverse()) {
    throw MissingInverse("wreath element has no inverse expressions");
  }
  const std::size_t n = a.dimension();
  const Expression t = Expression::time(n);
  Expression f = substitute(*a.f_inv_t(), t, *a.g_inv());
  Expression f_inv = substitute(a.f(), t, *a.g_inv());
  return {std::move(f), *a.g_inv(), std::move(f_inv), a.g()};
}

/// Psi(f, g) = h with h(t, x) = (f(x)(t), g(x)); symbolic Jacobians, inverse when available.
[[nodiscard]] inline SpaceTimeMap wreath_to_map(const WreathElement& a) {
  MapExpressions fwd{a.f(), a.g()};
  if (!a.has_inverse()) {
    return SpaceTimeMap::from_expressions(std::move(fwd));
  }
  const auto b = wreath_inverse(a);
  return SpaceTimeMap::from_expressions(std::move(fwd), MapExpressions{b.f(), b.g()});
}

/// Pointwise sanity checks of an element on a probe grid.
struct WreathValidation {
  bool time_monotone = true;
  bool maps_into_interval = true;
  bool space_injective = true;
  double max_inverse_residual = 0.0;
  std::size_t eval_failures = 0;

  [[nodiscard]] bool ok(double inverse_tolerance = 1e-9) const {
    return time_monotone && maps_into_interval && space_injective && eval_failures == 0 &&
           max_inverse_residual <= inverse_tolerance;
  }
};

[[nodiscard]] inline WreathValidation validate_wreath_element(const WreathElement& a, const Interval& window,
                                                              std::size_t time_samples,
                                                              const std::vector<Vector>& space_grid,
                                                              const Interval& interval = {}) {
  WreathValidation v;
  const auto times = linspace(window.lower, window.upper, std::max<std::size_t>(time_samples, 2));
  std::vector<Vector> images;
  for (const auto& x : space_grid) {
    try {
      double prev = 0.0;
      int sign = 0;
      for (std::size_t k = 0; k < times.size(); ++k) {
        const double ft = a.f().evaluate(times[k], x);
        if (!interval.contains_open(ft)) {
          v.maps_into_interval = false;
        }
        if (k > 0) {
          const int s = ft > prev ? 1 : (ft < prev ? -1 : 0);
          if (s == 0 || (sign != 0 && s != sign)) {
            v.time_monotone = false;
          }
          sign = s;
        }
        prev = ft;
        if (a.f_inv_t()) {
          v.max_inverse_residual =
              std::max(v.max_inverse_residual, std::abs(a.f_inv_t()->evaluate(ft, x) - times[k]));
        }
      }
      const Vector gx = evaluate_all(a.g(), 0.0, x);
      if (a.g_inv()) {
        v.max_inverse_residual =
            std::max(v.max_inverse_residual, (evaluate_all(*a.g_inv(), 0.0, gx) - x).lpNorm<Eigen::Infinity>());
      }
      images.push_back(gx);
    } catch (const EvalError&) {
      ++v.eval_failures;
      images.push_back(Vector::Constant(x.size(), std::nan("")));
    }
  }
  for (std::size_t i = 0; i < space_grid.size(); ++i) {
    for (std::size_t j = i + 1; j < space_grid.size(); ++j) {
      if ((images[i] - images[j]).norm() <= 1e-9 && (space_grid[i] - space_grid[j]).norm() > 0.0) {
        v.space_injective = false;
      }
    }
  }
  return v;
}

struct TrivialFormResult {
  bool trivial = false;
  /// max || d(space output) / dt || over the probe points.
  double witness = 0.0;
};

/// True iff the space output does not move with t (threshold 1e-8 on the probe points).
[[nodiscard]] inline TrivialFormResult is_trivial_symmetry_form(const SpaceTimeMap& m,
                                                                const std::vector<SpaceTimePoint>& probes) {
  TrivialFormResult res;
  const auto n = static_cast<Eigen::Index>(m.dimension());
  for (const auto& p : probes) {
    const Matrix j = m.jacobian(p);
    res.witness = std::max(res.witness, j.block(1, 0, n, 1).norm());
  }
  res.trivial = res.witness <= 1e-8;
  if (m.expressions()) {
    bool structural = true;
    for (const auto& s : m.expressions()->space) {
      structural = structural && !s.depends_on_time();
    }
    res.trivial = res.trivial || structural;
  }
  return res;
}

/// A solution graph pushed through a map, reparametrised by the transformed time.
/// Interpolation is piecewise monotone cubic (Fritsch-Carlson); derivatives at the nodes come
/// from local five-point polynomial fits.
class TransformedCurve {
 public:
  TransformedCurve(std::vector<double> times, std::vector<Vector> values)
      : times_(std::move(times)), values_(std::move(values)) {
    const std::size_t k = times_.size();
    const auto n = values_.front().size();
    slopes_.assign(k, Vector::Zero(n));
    if (k < 2) {
      return;
    }
    std::vector<Vector> secant(k - 1);
    for (std::size_t i = 0; i + 1 < k; ++i) {
      secant[i] = (values_[i + 1] - values_[i]) / (times_[i + 1] - times_[i]);
    }
    for (Eigen::Index c = 0; c < n; ++c) {
      for (std::size_t i = 0; i < k; ++i) {
        double d = 0.0;
        if (i == 0) {
          d = secant[0][c];
        } else if (i == k - 1) {
          d = secant[k - 2][c];
        } else {
          const double s0 = secant[i - 1][c];
          const double s1 = secant[i][c];
          if (s0 * s1 > 0.0) {
            const double h0 = times_[i] - times_[i - 1];
            const double h1 = times_[i + 1] - times_[i];
            const double w0 = 2.0 * h1 + h0;
            const double w1 = h1 + 2.0 * h0;
            d = (w0 + w1) / (w0 / s0 + w1 / s1);
          }
        }
        slopes_[i][c] = d;
      }
    }
  }

  [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }
  [[nodiscard]] const std::vector<Vector>& values() const noexcept { return values_; }
  [[nodiscard]] std::size_t size() const noexcept { return times_.size(); }

  [[nodiscard]] Vector sample(double t) const {
    if (t < times_.front() || t > times_.back()) {
      throw OutOfRange("time outside the transformed curve");
    }
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t i = static_cast<std::size_t>(it - times_.begin());
    if (i == 0) {
      return values_.front();
    }
    if (i >= times_.size()) {
      return values_.back();
    }
    --i;
    const double h = times_[i + 1] - times_[i];
    const double s = (t - times_[i]) / h;
    const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    const double h10 = s * (1.0 - s) * (1.0 - s);
    const double h01 = s * s * (3.0 - 2.0 * s);
    const double h11 = s * s * (s - 1.0);
    return h00 * values_[i] + h10 * h * slopes_[i] + h01 * values_[i + 1] + h11 * h * slopes_[i + 1];
  }

  /// Derivative at node i from the interpolating quartic through the five nearest nodes.
  [[nodiscard]] Vector derivative_at_node(std::size_t i) const {
    const std::size_t k = times_.size();
    const std::size_t width = std::min<std::size_t>(5, k);
    std::size_t lo = i >= width / 2 ? i - width / 2 : 0;
    lo = std::min(lo, k - width);
    const double z = times_[i];
    Vector d = Vector::Zero(values_[i].size());
    for (std::size_t j = lo; j < lo + width; ++j) {
      double wj = 0.0;
      for (std::size_t m = lo; m < lo + width; ++m) {
        if (m == j) {
          continue;
        }
        double term = 1.0 / (times_[j] - times_[m]);
        for (std::size_t l = lo; l < lo + width; ++l) {
          if (l != j && l != m) {
            term *= (z - times_[l]) / (times_[j] - times_[l]);
          }
        }
        wj += term;
      }
      d += wj * values_[j];
    }
    return d;
  }

 private:
  std::vector<double> times_;
  std::vector<Vector> values_;
  std::vector<Vector> slopes_;
};

/// Push `samples` evenly spaced graph points of `sol` through `m`. Returns nullopt ("undefined")
/// when the mapped times are not strictly monotone with margin 1e-10, i.e. the image is not a graph.
[[nodiscard]] inline std::optional<TransformedCurve> transform_solution(const SpaceTimeMap& m,
                                                                        const SolutionCurve& sol,
                                                                        std::size_t samples) {
  if (samples < 2) {
    throw InvalidInput("transform_solution needs at least two samples");
  }
  if (!(sol.max_time() > sol.min_time())) {
    throw InvalidInput("solution covers an empty time range");
  }
  std::vector<double> times;
  std::vector<Vector> values;
  times.reserve(samples);
  values.reserve(samples);
  for (double t : linspace(sol.min_time(), sol.max_time(), samples)) {
    const auto q = m({t, sol.sample(t)});
    times.push_back(q.t);
    values.push_back(q.x);
  }
  constexpr double margin = 1e-10;
  const bool increasing = times[1] > times[0];
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double step = times[i] - times[i - 1];
    if (increasing ? !(step > margin) : !(step < -margin)) {
      return std::nullopt;
    }
  }
  if (!increasing) {
    std::reverse(times.begin(), times.end());
    std::reverse(values.begin(), values.end());
  }
  return TransformedCurve(std::move(times), std::move(values));
}

/// Phi o alpha o Phi^{-1} for a trivial-form symmetry alpha of x' = 0.
/// The trivial-form test runs on `probes`, or on a 5 x 5 grid over the rectification window and probe box.
[[nodiscard]] inline SpaceTimeMap conjugate_symmetry(const Rectification& r, const SpaceTimeMap& alpha,
                                                     std::optional<std::vector<SpaceTimePoint>> probes = std::nullopt) {
  if (alpha.dimension() != r.dimension()) {
    throw DimensionError("symmetry and rectification disagree on dimension");
  }
  const auto grid = probes ? *probes : space_time_grid(r.window(), 5, r.probe_box(), 5);
  const auto form = is_trivial_symmetry_form(alpha, grid);
  if (!form.trivial) {
    throw NotTrivialForm("map moves the space coordinate along t (witness " + std::to_string(form.witness) + ")");
  }
  if (!alpha.has_inverse()) {
    throw MissingInverse("conjugation needs the inverse of the symmetry");
  }
  const auto phi = r.forward_map();
  return compose(phi, compose(alpha, phi.inverted()));
}

struct SymmetryCheckReport {
  std::size_t tested_solutions = 0;
  double max_residual = 0.0;
  std::size_t undefined_transforms = 0;
  double threshold = 1e-4;
  bool pass = false;
  /// Per initial condition, in input order; nullopt where the transform was undefined.
  std::vector<std::optional<double>> residuals;
};

struct SymmetryCheckOptions {
  std::size_t samples = 201;
  double threshold = 1e-4;
};

/// Integrate each initial condition across `window`, push the solution through m, and measure
/// max_t || d/dt (m o phi)(t) - v(t, (m o phi)(t)) ||. Transforms that are not graphs, or whose
/// evaluation fails, count as undefined.
[[nodiscard]] inline SymmetryCheckReport is_symmetry(const SpaceTimeMap& m, const VectorFieldSpec& field,
                                                     const std::vector<SpaceTimePoint>& initial_conditions,
                                                     const Interval& window, const Tolerances& tol = {},
                                                     SymmetryCheckOptions options = {}) {
  SymmetryCheckReport report;
  report.threshold = options.threshold;
  for (const auto& ic : initial_conditions) {
    ++report.tested_solutions;
    std::optional<double> residual;
    try {
      // Start of the covered range: the window start if reachable backwards, else the IC itself.
      double start_t = ic.t;
      Vector start_x = ic.x;
      const auto back = integrate(field, ic.t, ic.x, window.lower, tol);
      if (back.termination().reached()) {
        start_t = back.end_time();
        start_x = back.end_state();
      }
      const auto sol = integrate(field, start_t, start_x, window.upper, tol);
      const auto transformed = transform_solution(m, sol, options.samples);
      if (transformed) {
        double worst = 0.0;
        for (std::size_t i = 0; i < transformed->size(); ++i) {
          const double t = transformed->times()[i];
          const Vector& x = transformed->values()[i];
          if (!field.contains(t, x)) {
            throw OutOfRange("transformed solution leaves I x M");
          }
          worst = std::max(worst, (transformed->derivative_at_node(i) - field(t, x)).norm());
        }
        residual = worst;
      }
    } catch (const TrajectoryError&) {
    } catch (const OutOfRange&) {
    } catch (const EvalError&) {
    } catch (const InvalidInput&) {
    }
    if (residual) {
      report.max_residual = std::max(report.max_residual, *residual);
    } else {
      ++report.undefined_transforms;
    }
    report.residuals.push_back(residual);
  }
  report.pass = report.max_residual <= report.threshold && report.undefined_transforms == 0;
  return report;
}

}  // namespace rectify
