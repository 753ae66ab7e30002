/**
 * @file diagnostics.hpp
 * @brief Sample-based probes of the well-posedness hypotheses: a time-modulated Lipschitz
 *        bound, invariance of I x M under the flow, and uniqueness at a point.
 *
 * Every verdict here is "no violation detected on probes"; none of it is a proof.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rectify/errors.hpp"
#include "rectify/expr.hpp"
#include "rectify/geometry.hpp"
#include "rectify/integrator.hpp"

namespace rectify {

/// Difference quotients around one centre at each radius of a decreasing list.
struct LipschitzRefinement {
  SpaceTimePoint center;
  std::vector<double> radii;
  /// max over +-r e_j of ||v(t, c + d) - v(t, c)|| / r; NaN where evaluation failed.
  std::vector<double> quotients;
  bool unbounded = false;
};

struct LipschitzProfile {
  std::vector<double> times;
  /// L(t_i): max over the space grid of the spectral norm of v_x(t_i, x).
  std::vector<double> estimates;
  double sup_estimate = 0.0;
  std::vector<LipschitzRefinement> refinement_trend;
  /// Grid points where the Jacobian could not be evaluated (kinks, poles).
  std::vector<SpaceTimePoint> eval_failures;
  bool flagged_unbounded = false;
};

namespace detail {

/// Growth factor between consecutive radii that counts as unbounded, and how many consecutive steps it must hold.
inline constexpr double kGrowthFactor = 2.0;
inline constexpr std::size_t kGrowthSteps = 3;

[[nodiscard]] inline double spectral_norm(const Matrix& a) {
  if (a.size() == 1) {
    return std::abs(a(0, 0));
  }
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

[[nodiscard]] inline double difference_quotient(const VectorFieldSpec& field, const SpaceTimePoint& c, double r) {
  double best = std::numeric_limits<double>::quiet_NaN();
  Vector base;
  try {
    base = field(c.t, c.x);
  } catch (const EvalError&) {
    return best;
  }
  for (Eigen::Index j = 0; j < c.x.size(); ++j) {
    for (double s : {1.0, -1.0}) {
      Vector x = c.x;
      x[j] += s * r;
      try {
        const double q = (field(c.t, x) - base).norm() / r;
        best = std::isnan(best) ? q : std::max(best, q);
      } catch (const EvalError&) {
      }
    }
  }
  return best;
}

[[nodiscard]] inline bool grows_without_bound(const std::vector<double>& quotients) {
  std::size_t run = 0;
  for (std::size_t k = 1; k < quotients.size(); ++k) {
    const double a = quotients[k - 1];
    const double b = quotients[k];
    if (std::isfinite(a) && std::isfinite(b) && a > 0.0 && b >= kGrowthFactor * a) {
      if (++run >= kGrowthSteps) {
        return true;
      }
    } else {
      run = 0;
    }
  }
  return false;
}

inline void check_radii(const std::vector<double>& radii) {
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!(radii[k] > 0.0) || (k > 0 && !(radii[k] < radii[k - 1]))) {
      throw InvalidInput("radii must be positive and strictly decreasing");
    }
  }
}

}  // namespace detail

[[nodiscard]] inline LipschitzRefinement refine_lipschitz(const VectorFieldSpec& field, const SpaceTimePoint& center,
                                                          const std::vector<double>& radii) {
  detail::check_radii(radii);
  LipschitzRefinement r{center, radii, {}, false};
  r.quotients.reserve(radii.size());
  for (double rad : radii) {
    r.quotients.push_back(detail::difference_quotient(field, center, rad));
  }
  r.unbounded = detail::grows_without_bound(r.quotients);
  return r;
}

/// Jacobian-norm profile over window x region, refined by difference quotients around the
/// maximising grid point and around every point where the Jacobian failed to evaluate.
/// Unbounded growth: the quotient grows by at least 2x from one radius to the next, three steps in a row.
[[nodiscard]] inline LipschitzProfile estimate_lipschitz(const VectorFieldSpec& field, const Interval& window,
                                                         const Box& region, std::size_t time_samples,
                                                         std::size_t space_samples,
                                                         const std::vector<double>& radii) {
  if (time_samples < 2 || space_samples < 2) {
    throw InvalidInput("need at least two samples per direction");
  }
  if (!region.valid() || region.dimension() != field.dimension()) {
    throw InvalidInput("region must be a non-empty box of the field's dimension");
  }
  detail::check_radii(radii);
  LipschitzProfile prof;
  prof.times = linspace(window.lower, window.upper, time_samples);
  const auto grid = box_grid(region, space_samples);
  std::optional<SpaceTimePoint> argmax;
  double best = -1.0;
  for (double t : prof.times) {
    double lt = 0.0;
    for (const auto& x : grid) {
      try {
        const double norm = detail::spectral_norm(field.jacobian(t, x));
        lt = std::max(lt, norm);
        if (norm > best) {
          best = norm;
          argmax = SpaceTimePoint{t, x};
        }
      } catch (const EvalError&) {
        prof.eval_failures.push_back({t, x});
      }
    }
    prof.estimates.push_back(lt);
  }
  prof.sup_estimate = *std::max_element(prof.estimates.begin(), prof.estimates.end());

  std::vector<SpaceTimePoint> centers = prof.eval_failures;
  if (argmax) {
    centers.push_back(*argmax);
  }
  for (const auto& c : centers) {
    auto ref = refine_lipschitz(field, c, radii);
    prof.flagged_unbounded = prof.flagged_unbounded || ref.unbounded;
    prof.refinement_trend.push_back(std::move(ref));
  }
  return prof;
}

struct LipschitzGrowth {
  std::vector<double> scales;
  std::vector<double> sup_estimates;
  /// Sup grew by >= 1.5x on each of the last three enlargements.
  bool unbounded = false;
};

/// Lipschitz sup over boxes centred at `center` with half-widths `scales` (increasing).
[[nodiscard]] inline LipschitzGrowth estimate_lipschitz_growth(const VectorFieldSpec& field, const Interval& window,
                                                               const Vector& center, const std::vector<double>& scales,
                                                               std::size_t time_samples = 3,
                                                               std::size_t space_samples = 9) {
  LipschitzGrowth g;
  g.scales = scales;
  for (double s : scales) {
    std::vector<Interval> axes;
    for (Eigen::Index i = 0; i < center.size(); ++i) {
      axes.push_back({center[i] - s, center[i] + s});
    }
    const auto prof = estimate_lipschitz(field, window, Box(axes), time_samples, space_samples, {});
    g.sup_estimates.push_back(prof.sup_estimate);
  }
  const std::size_t k = g.sup_estimates.size();
  if (k >= 4) {
    g.unbounded = true;
    for (std::size_t i = k - 3; i < k; ++i) {
      g.unbounded = g.unbounded && g.sup_estimates[i] >= 1.5 * g.sup_estimates[i - 1];
    }
  }
  return g;
}

enum class EscapeKind { DomainEscape, BlowUp };

struct InvarianceEscape {
  SpaceTimePoint initial;
  double event_time = 0.0;
  EscapeKind kind = EscapeKind::BlowUp;
  /// +1 when found integrating forward, -1 backward.
  double direction = 1.0;
};

struct InvarianceReport {
  std::size_t probed = 0;
  std::vector<InvarianceEscape> escapes;

  [[nodiscard]] bool invariant_on_probes() const noexcept { return escapes.empty(); }
};

/// Integrate each initial condition to both ends of the window and record every escape or blow-up.
[[nodiscard]] inline InvarianceReport probe_invariance(const VectorFieldSpec& field, const Interval& window,
                                                       const std::vector<SpaceTimePoint>& ic_grid,
                                                       const Tolerances& tol = {}) {
  InvarianceReport rep;
  for (const auto& ic : ic_grid) {
    ++rep.probed;
    for (double end : {window.upper, window.lower}) {
      const auto curve = integrate(field, ic.t, ic.x, end, tol);
      const auto& term = curve.termination();
      if (term.reached()) {
        continue;
      }
      const EscapeKind kind =
          term.kind == TerminationKind::DomainEscape ? EscapeKind::DomainEscape : EscapeKind::BlowUp;
      rep.escapes.push_back({ic, term.time, kind, end >= ic.t ? 1.0 : -1.0});
    }
  }
  return rep;
}

/// A closed-form curve x(t) offered as a solution through the probed point.
struct CandidateSolution {
  std::string label;
  std::vector<Expression> components;  // expressions in t only
};

struct CandidateCheck {
  std::string label;
  double max_residual = 0.0;
  bool passes_through_point = false;
  bool is_solution = false;
};

struct UniquenessReport {
  bool flagged = false;
  LipschitzRefinement refinement;
  std::vector<CandidateCheck> candidates;

  /// At least two distinct residual-zero candidates through the point.
  [[nodiscard]] bool non_uniqueness_witnessed() const {
    std::size_t count = 0;
    for (const auto& c : candidates) {
      count += (c.is_solution && c.passes_through_point) ? 1 : 0;
    }
    return count >= 2;
  }
};

/// Flag the point when difference quotients around it grow without bound, and check closed-form
/// candidates at 100 times in [t0, t_end]: residual ||c'(t) - v(t, c(t))|| <= 1e-9 counts as a solution.
[[nodiscard]] inline UniquenessReport probe_uniqueness(const VectorFieldSpec& field, const SpaceTimePoint& point,
                                                       const std::vector<double>& radii,
                                                       const std::vector<CandidateSolution>& candidates = {},
                                                       double t_end = std::numeric_limits<double>::quiet_NaN()) {
  UniquenessReport rep;
  rep.refinement = refine_lipschitz(field, point, radii);
  rep.flagged = rep.refinement.unbounded;
  const double end = std::isnan(t_end) ? point.t + 1.0 : t_end;
  const auto times = linspace(point.t, end, 100);
  const auto n = field.dimension();
  for (const auto& cand : candidates) {
    if (cand.components.size() != n) {
      throw DimensionError("candidate solution has the wrong number of components");
    }
    CandidateCheck check{cand.label, 0.0, false, false};
    std::vector<Expression> deriv;
    for (const auto& c : cand.components) {
      deriv.push_back(differentiate(c, Variable::time()));
    }
    const Vector zero = Vector::Zero(static_cast<Eigen::Index>(n));
    try {
      check.passes_through_point = (evaluate_all(cand.components, point.t, zero) - point.x).norm() <= 1e-12;
      for (double t : times) {
        const Vector x = evaluate_all(cand.components, t, zero);
        const Vector dx = evaluate_all(deriv, t, zero);
        check.max_residual = std::max(check.max_residual, (dx - field(t, x)).norm());
      }
      check.is_solution = check.max_residual <= 1e-9;
    } catch (const EvalError&) {
      check.max_residual = std::numeric_limits<double>::infinity();
    }
    rep.candidates.push_back(std::move(check));
  }
  return rep;
}

}  // namespace rectify
