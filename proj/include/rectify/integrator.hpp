/**
 * @file integrator.hpp
 * @brief Adaptive Dormand-Prince 5(4) integration of x' = v(t, x) with dense output,
 *        domain-escape and blow-up events, and the variational equation J' = v_x J.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rectify/errors.hpp"
#include "rectify/expr.hpp"
#include "rectify/geometry.hpp"

namespace rectify {

/// Right-hand side v: I x M -> R^n with its symbolic Jacobian.
class VectorFieldSpec {
 public:
  VectorFieldSpec() = default;

  VectorFieldSpec(std::vector<Expression> components, Interval interval, Box box)
      : v_(std::move(components)), interval_(interval), box_(std::move(box)) {
    const std::size_t n = v_.size();
    if (n == 0) {
      throw InvalidInput("vector field needs at least one component");
    }
    for (const auto& c : v_) {
      if (c.dimension() != n) {
        throw DimensionError("field component dimension does not match the number of components");
      }
    }
    if (!interval_.valid()) {
      throw InvalidInput("time interval is empty");
    }
    if (box_.dimension() != n || !box_.valid()) {
      throw InvalidInput("space box is empty or has the wrong dimension");
    }
    jacobian_.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        jacobian_.push_back(differentiate(v_[i], Variable::space(j)));
      }
    }
  }

  /// Parse component texts; I defaults to R and M to R^n.
  static VectorFieldSpec parse(const std::vector<std::string>& components, Interval interval = {},
                               std::optional<Box> box = std::nullopt) {
    const std::size_t n = components.size();
    std::vector<Expression> v;
    v.reserve(n);
    for (const auto& c : components) {
      v.push_back(rectify::parse(c, n));
    }
    return {std::move(v), interval, box ? *box : Box::unbounded(n)};
  }

  [[nodiscard]] std::size_t dimension() const noexcept { return v_.size(); }
  [[nodiscard]] const std::vector<Expression>& components() const noexcept { return v_; }
  [[nodiscard]] const Interval& interval() const noexcept { return interval_; }
  [[nodiscard]] const Box& box() const noexcept { return box_; }
  /// Row-major n x n entries dv_i/dx_j.
  [[nodiscard]] const std::vector<Expression>& jacobian_entries() const noexcept { return jacobian_; }

  [[nodiscard]] Vector operator()(double t, const Vector& x) const { return evaluate_all(v_, t, x); }

  [[nodiscard]] Matrix jacobian(double t, const Vector& x) const {
    const auto n = static_cast<Eigen::Index>(v_.size());
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        a(i, j) = jacobian_[static_cast<std::size_t>(i * n + j)].evaluate(t, x);
      }
    }
    return a;
  }

  [[nodiscard]] bool contains(double t, const Vector& x) const {
    return interval_.contains_open(t) && box_.contains_open(x);
  }

 private:
  std::vector<Expression> v_;
  Interval interval_;
  Box box_;
  std::vector<Expression> jacobian_;
};

struct Tolerances {
  double rtol = 1e-9;
  double atol = 1e-12;
  double blowup_norm = 1e8;
  /// Minimum step as a fraction of the integration window width.
  double min_step_fraction = 1e-14;
  std::size_t max_steps = 1'000'000;

  void validate() const {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (!(rtol > 0.0 && atol > 0.0 && blowup_norm > 0.0 && min_step_fraction > 0.0)) {
      throw InvalidInput("tolerances must be strictly positive");
    }
    if (rtol < 10.0 * eps) {
      throw InvalidInput("rtol must be at least 10 machine epsilons");
    }
  }
};

enum class TerminationKind { ReachedTarget, DomainEscape, BlowUp, StepUnderflow };

[[nodiscard]] inline std::string_view termination_name(TerminationKind k) {
  switch (k) {
    case TerminationKind::ReachedTarget: return "ReachedTarget";
    case TerminationKind::DomainEscape: return "DomainEscape";
    case TerminationKind::BlowUp: return "BlowUp";
    case TerminationKind::StepUnderflow: return "StepUnderflow";
  }
  return "?";
}

struct Termination {
  TerminationKind kind = TerminationKind::ReachedTarget;
  double time = 0.0;
  /// Box face crossed on DomainEscape.
  std::size_t face_axis = 0;
  bool face_upper = false;

  [[nodiscard]] bool reached() const noexcept { return kind == TerminationKind::ReachedTarget; }
};

namespace detail {

/// Per-step Dormand-Prince dense output: y(theta) = c0 + theta (c1 + (1-theta)(c2 + theta (c3 + (1-theta) c4))).
struct DenseSegment {
  double t_start = 0.0;
  double h = 0.0;  // signed full step; the segment may end before t_start + h after an event
  Matrix coeffs;   // dim x 5

  [[nodiscard]] Vector eval(double t) const {
    const double theta = (t - t_start) / h;
    const double theta1 = 1.0 - theta;
    return coeffs.col(0) +
           theta * (coeffs.col(1) + theta1 * (coeffs.col(2) + theta * (coeffs.col(3) + theta1 * coeffs.col(4))));
  }

  [[nodiscard]] DenseSegment rows(Eigen::Index start, Eigen::Index count) const {
    return {t_start, h, coeffs.middleRows(start, count)};
  }
};

/// Accepted nodes plus one dense segment between consecutive nodes.
struct DenseTrajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<DenseSegment> segments;
  double direction = 1.0;

  [[nodiscard]] bool covers(double t) const noexcept {
    const double a = std::min(times.front(), times.back());
    const double b = std::max(times.front(), times.back());
    return t >= a && t <= b;
  }

  [[nodiscard]] Vector sample(double t) const {
    if (!covers(t)) {
      throw OutOfRange("time " + std::to_string(t) + " outside the covered range");
    }
    // First node index k with times[k] at or past t in the integration direction.
    const auto it = direction > 0.0
                        ? std::lower_bound(times.begin(), times.end(), t)
                        : std::lower_bound(times.begin(), times.end(), t, [](double a, double b) { return a > b; });
    const auto k = static_cast<std::size_t>(it - times.begin());
    if (k < times.size() && times[k] == t) {
      return states[k];
    }
    return segments[k - 1].eval(t);
  }

  [[nodiscard]] DenseTrajectory slice(Eigen::Index start, Eigen::Index count) const {
    DenseTrajectory out;
    out.times = times;
    out.direction = direction;
    out.states.reserve(states.size());
    for (const auto& s : states) {
      out.states.push_back(s.segment(start, count));
    }
    out.segments.reserve(segments.size());
    for (const auto& seg : segments) {
      out.segments.push_back(seg.rows(start, count));
    }
    return out;
  }
};

struct DormandPrince {
  static constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
  static constexpr double a21 = 1.0 / 5.0;
  static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                          a54 = -212.0 / 729.0;
  static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                          a65 = -5103.0 / 18656.0;
  static constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                          a76 = 11.0 / 84.0;
  static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                          e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
  static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};

/// Weighted RMS norm used for step acceptance.
[[nodiscard]] inline double error_norm(const Vector& err, const Vector& y0, const Vector& y1, const Tolerances& tol) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sk = tol.atol + tol.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = err[i] / sk;
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(err.size()));
}

struct IntegrationResult {
  DenseTrajectory trajectory;
  Termination termination;
};

/// Integrate y' = rhs(t, y). Domain and blow-up checks look at the first `observed` components only.
template <class Rhs>
[[nodiscard]] IntegrationResult run_dopri(const Rhs& rhs, Eigen::Index observed, const Box& box, double t0,
                                          const Vector& y0, double t_target, const Tolerances& tol) {
  using DP = DormandPrince;
  IntegrationResult res;
  auto& traj = res.trajectory;
  traj.times.push_back(t0);
  traj.states.push_back(y0);
  const double span = std::abs(t_target - t0);
  if (span == 0.0) {
    res.termination = {TerminationKind::ReachedTarget, t0};
    return res;
  }
  const double dir = t_target > t0 ? 1.0 : -1.0;
  traj.direction = dir;
  const double min_step = tol.min_step_fraction * span;

  double t = t0;
  Vector y = y0;
  Vector k1 = rhs(t, y);

  // Initial step guess from the local scale of y and y'.
  double h = 0.0;
  {
    Vector sk = (tol.atol + tol.rtol * y.array().abs()).matrix();
    const double d0 = (y.array() / sk.array()).matrix().norm() / std::sqrt(static_cast<double>(y.size()));
    const double d1 = (k1.array() / sk.array()).matrix().norm() / std::sqrt(static_cast<double>(y.size()));
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    double d2 = 0.0;
    try {
      const Vector k2 = rhs(t + dir * h0, y + dir * h0 * k1);
      d2 = ((k2 - k1).array() / sk.array()).matrix().norm() / std::sqrt(static_cast<double>(y.size())) / h0;
    } catch (const EvalError&) {
      d2 = 1.0 / h0;
    }
    const double dmax = std::max(d1, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
    h = std::min({100.0 * h0, h1, span});
  }

  constexpr double safe = 0.9, fac_min = 0.2, fac_max = 10.0, beta = 0.04;
  const double expo = 0.2 - beta * 0.75;
  double err_old = 1e-4;
  bool last_rejected = false;

  for (std::size_t step = 0; step < tol.max_steps; ++step) {
    const double remaining = std::abs(t_target - t);
    bool last = false;
    if (h >= remaining * (1.0 - 1e-12)) {
      h = remaining;
      last = true;
    }
    if (h < min_step && !last) {
      res.termination = {TerminationKind::StepUnderflow, t};
      return res;
    }
    const double hs = dir * h;

    Vector k2, k3, k4, k5, k6, k7, y_new;
    bool stage_failed = false;
    try {
      k2 = rhs(t + DP::c2 * hs, y + hs * (DP::a21 * k1));
      k3 = rhs(t + DP::c3 * hs, y + hs * (DP::a31 * k1 + DP::a32 * k2));
      k4 = rhs(t + DP::c4 * hs, y + hs * (DP::a41 * k1 + DP::a42 * k2 + DP::a43 * k3));
      k5 = rhs(t + DP::c5 * hs, y + hs * (DP::a51 * k1 + DP::a52 * k2 + DP::a53 * k3 + DP::a54 * k4));
      k6 = rhs(t + hs, y + hs * (DP::a61 * k1 + DP::a62 * k2 + DP::a63 * k3 + DP::a64 * k4 + DP::a65 * k5));
      y_new = y + hs * (DP::a71 * k1 + DP::a73 * k3 + DP::a74 * k4 + DP::a75 * k5 + DP::a76 * k6);
      k7 = rhs(t + hs, y_new);
    } catch (const EvalError&) {
      // Trial stages may wander where v is undefined; shrink and retry until the step underflows.
      if (h * 0.25 < min_step) {
        throw;
      }
      stage_failed = true;
    }
    if (stage_failed) {
      h *= 0.25;
      last_rejected = true;
      continue;
    }

    const Vector err_vec =
        hs * (DP::e1 * k1 + DP::e3 * k3 + DP::e4 * k4 + DP::e5 * k5 + DP::e6 * k6 + DP::e7 * k7);
    double err = error_norm(err_vec, y, y_new, tol);
    if (!std::isfinite(err) || !y_new.allFinite()) {
      err = std::numeric_limits<double>::infinity();
    }

    if (err > 1.0) {
      const double fac = std::isfinite(err) ? std::max(fac_min, safe * std::pow(err, -expo)) : fac_min;
      h *= std::min(1.0, fac);
      last_rejected = true;
      continue;
    }

    // Accepted.
    const double t_new = last ? t_target : t + hs;
    DenseSegment seg;
    seg.t_start = t;
    seg.h = t_new - t;
    {
      const Eigen::Index m = y.size();
      seg.coeffs.resize(m, 5);
      const Vector ydiff = y_new - y;
      const Vector bspl = seg.h * k1 - ydiff;
      seg.coeffs.col(0) = y;
      seg.coeffs.col(1) = ydiff;
      seg.coeffs.col(2) = bspl;
      seg.coeffs.col(3) = ydiff - seg.h * k7 - bspl;
      seg.coeffs.col(4) =
          seg.h * (DP::d1 * k1 + DP::d3 * k3 + DP::d4 * k4 + DP::d5 * k5 + DP::d6 * k6 + DP::d7 * k7);
    }

    const auto observed_part = [&](const Vector& s) { return s.head(observed); };

    if (!box.contains_open(observed_part(y_new))) {
      // Bisect the dense interpolant for the first face crossing.
      double lo = t;
      double hi = t_new;
      const double accuracy = 1e-12 * std::max(1.0, std::abs(t_new));
      while (std::abs(hi - lo) > accuracy) {
        const double mid = 0.5 * (lo + hi);
        if (box.contains_open(observed_part(seg.eval(mid)))) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      Termination term{TerminationKind::DomainEscape, lo};
      const Vector outside = observed_part(seg.eval(hi));
      double worst = kInf;
      for (std::size_t i = 0; i < box.dimension(); ++i) {
        const double xi = outside[static_cast<Eigen::Index>(i)];
        const double dl = xi - box.axes[i].lower;
        const double du = box.axes[i].upper - xi;
        if (dl < worst) {
          worst = dl;
          term.face_axis = i;
          term.face_upper = false;
        }
        if (du < worst) {
          worst = du;
          term.face_axis = i;
          term.face_upper = true;
        }
      }
      if (lo != t) {
        traj.times.push_back(lo);
        traj.states.push_back(seg.eval(lo));
        traj.segments.push_back(std::move(seg));
      }
      res.termination = term;
      return res;
    }

    traj.times.push_back(t_new);
    traj.states.push_back(y_new);
    traj.segments.push_back(std::move(seg));
    t = t_new;
    y = y_new;
    k1 = k7;

    if (observed_part(y).norm() > tol.blowup_norm) {
      res.termination = {TerminationKind::BlowUp, t};
      return res;
    }
    if (last) {
      res.termination = {TerminationKind::ReachedTarget, t};
      return res;
    }

    // PI step-size control.
    const double fac11 = std::pow(err, expo);
    double fac = fac11 / std::pow(err_old, beta) / safe;
    fac = std::clamp(fac, 1.0 / fac_max, 1.0 / fac_min);
    double h_new = h / fac;
    if (last_rejected) {
      h_new = std::min(h_new, h);
    }
    err_old = std::max(err, 1e-4);
    last_rejected = false;
    h = h_new;
  }
  res.termination = {TerminationKind::StepUnderflow, t};
  return res;
}

inline void check_initial(const VectorFieldSpec& field, double t0, const Vector& x0, double t_target,
                          const Tolerances& tol) {
  tol.validate();
  if (static_cast<std::size_t>(x0.size()) != field.dimension()) {
    throw DimensionError("initial state has the wrong dimension");
  }
  if (!std::isfinite(t_target) || !std::isfinite(t0)) {
    throw InvalidInput("integration times must be finite");
  }
  if (!field.contains(t0, x0)) {
    throw InvalidInput("initial point (t0, x0) is outside I x M");
  }
  if (!field.interval().contains_closed(t_target)) {
    throw InvalidInput("target time outside the closure of I");
  }
}

}  // namespace detail

/// One integrated trajectory with dense output; immutable once built.
class SolutionCurve {
 public:
  SolutionCurve(detail::DenseTrajectory traj, Termination term)
      : traj_(std::move(traj)), termination_(term) {}

  [[nodiscard]] double base_time() const noexcept { return traj_.times.front(); }
  [[nodiscard]] const Vector& base_state() const noexcept { return traj_.states.front(); }
  [[nodiscard]] double end_time() const noexcept { return traj_.times.back(); }
  [[nodiscard]] const Vector& end_state() const noexcept { return traj_.states.back(); }
  [[nodiscard]] double direction() const noexcept { return traj_.direction; }
  [[nodiscard]] const Termination& termination() const noexcept { return termination_; }
  [[nodiscard]] const std::vector<double>& times() const noexcept { return traj_.times; }
  [[nodiscard]] const std::vector<Vector>& states() const noexcept { return traj_.states; }
  [[nodiscard]] std::size_t size() const noexcept { return traj_.times.size(); }
  [[nodiscard]] double min_time() const noexcept { return std::min(base_time(), end_time()); }
  [[nodiscard]] double max_time() const noexcept { return std::max(base_time(), end_time()); }
  [[nodiscard]] bool covers(double t) const noexcept { return traj_.covers(t); }

  /// Dense-output state; exact at nodes, OutOfRange outside the covered range.
  [[nodiscard]] Vector sample(double t) const { return traj_.sample(t); }

 private:
  detail::DenseTrajectory traj_;
  Termination termination_;
};

/// d phi(t) / d x0 along a trajectory, identity at the base time.
class JacobianCurve {
 public:
  JacobianCurve(detail::DenseTrajectory traj, Eigen::Index n) : traj_(std::move(traj)), n_(n) {}

  [[nodiscard]] const std::vector<double>& times() const noexcept { return traj_.times; }
  [[nodiscard]] std::size_t size() const noexcept { return traj_.times.size(); }
  [[nodiscard]] Matrix at_node(std::size_t i) const { return unpack(traj_.states[i]); }
  [[nodiscard]] Matrix end() const { return unpack(traj_.states.back()); }
  [[nodiscard]] Matrix sample(double t) const { return unpack(traj_.sample(t)); }

 private:
  [[nodiscard]] Matrix unpack(const Vector& packed) const { return Eigen::Map<const Matrix>(packed.data(), n_, n_); }

  detail::DenseTrajectory traj_;
  Eigen::Index n_;
};

[[nodiscard]] inline SolutionCurve integrate(const VectorFieldSpec& field, double t0, const Vector& x0,
                                             double t_target, const Tolerances& tol = {}) {
  detail::check_initial(field, t0, x0, t_target, tol);
  auto rhs = [&field](double t, const Vector& x) { return field(t, x); };
  auto res = detail::run_dopri(rhs, x0.size(), field.box(), t0, x0, t_target, tol);
  return {std::move(res.trajectory), res.termination};
}

/// State and Jacobian integrated as one augmented system on a shared step sequence.
[[nodiscard]] inline std::pair<SolutionCurve, JacobianCurve> integrate_with_variational(
    const VectorFieldSpec& field, double t0, const Vector& x0, double t_target, const Tolerances& tol = {}) {
  detail::check_initial(field, t0, x0, t_target, tol);
  const Eigen::Index n = x0.size();
  Vector y0(n + n * n);
  y0.head(n) = x0;
  y0.tail(n * n) = Eigen::Map<const Vector>(Matrix::Identity(n, n).eval().data(), n * n);
  auto rhs = [&field, n](double t, const Vector& y) {
    const Vector x = y.head(n);
    Vector out(y.size());
    out.head(n) = field(t, x);
    const Eigen::Map<const Matrix> j(y.data() + n, n, n);
    const Matrix dj = field.jacobian(t, x) * j;
    out.tail(n * n) = Eigen::Map<const Vector>(dj.data(), n * n);
    return out;
  };
  auto res = detail::run_dopri(rhs, n, field.box(), t0, y0, t_target, tol);
  SolutionCurve sol(res.trajectory.slice(0, n), res.termination);
  JacobianCurve jac(res.trajectory.slice(n, n * n), n);
  return {std::move(sol), std::move(jac)};
}

[[nodiscard]] inline Vector sample(const SolutionCurve& curve, double t) { return curve.sample(t); }

}  // namespace rectify
