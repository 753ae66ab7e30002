/**
 * @file flow.hpp
 * @brief Two-time flow map phi(t; s, x), its Jacobian in x, and group-law residuals.
 */
#pragma once

#include <cstdint>
#include <cstring>
#include <map>
#include <mutex>
#include <tuple>
#include <utility>
#include <vector>

#include "rectify/errors.hpp"
#include "rectify/integrator.hpp"

namespace rectify {

/// Evaluate phi(t; s, x) with tolerances `tol`.
struct FlowQuery {
  double s = 0.0;
  Vector x;
  double t = 0.0;
  Tolerances tol;
};

namespace detail {

[[noreturn]] inline void throw_termination(const Termination& term) {
  if (term.kind == TerminationKind::DomainEscape) {
    throw TrajectoryEscaped(term.time);
  }
  throw TrajectoryBlowUp(term.time);
}

}  // namespace detail

[[nodiscard]] inline Vector flow(const VectorFieldSpec& field, const FlowQuery& q) {
  const auto curve = integrate(field, q.s, q.x, q.t, q.tol);
  if (!curve.termination().reached()) {
    detail::throw_termination(curve.termination());
  }
  return curve.end_state();
}

/// phi(t; s, x) together with d phi / d x from the variational equation.
[[nodiscard]] inline std::pair<Vector, Matrix> flow_with_jacobian(const VectorFieldSpec& field, const FlowQuery& q) {
  auto [curve, jac] = integrate_with_variational(field, q.s, q.x, q.t, q.tol);
  if (!curve.termination().reached()) {
    detail::throw_termination(curve.termination());
  }
  return {curve.end_state(), jac.end()};
}

[[nodiscard]] inline Matrix flow_jacobian(const VectorFieldSpec& field, const FlowQuery& q) {
  return flow_with_jacobian(field, q).second;
}

/// || phi(t; r, phi(r; s, x)) - phi(t; s, x) ||
[[nodiscard]] inline double check_group_law(const VectorFieldSpec& field, double s, double r, double t,
                                            const Vector& x, const Tolerances& tol = {}) {
  const Vector direct = flow(field, {s, x, t, tol});
  const Vector mid = flow(field, {s, x, r, tol});
  const Vector chained = flow(field, {r, mid, t, tol});
  return (chained - direct).norm();
}

/// Memo of flow values for one field, keyed on the bit patterns of (s, x, t, tol).
/// Concurrent callers asking for the same key always observe the same stored value.
class FlowCache {
 public:
  explicit FlowCache(const VectorFieldSpec& field) : field_(&field) {}

  [[nodiscard]] Vector flow(const FlowQuery& q) {
    const Key key = make_key(q);
    {
      std::lock_guard lock(mutex_);
      if (auto it = entries_.find(key); it != entries_.end()) {
        ++hits_;
        return it->second;
      }
    }
    Vector value = rectify::flow(*field_, q);
    std::lock_guard lock(mutex_);
    return entries_.try_emplace(key, std::move(value)).first->second;
  }

  [[nodiscard]] std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

  [[nodiscard]] std::size_t hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
  }

 private:
  using Key = std::vector<std::uint64_t>;

  static std::uint64_t bits(double v) {
    std::uint64_t b = 0;
    std::memcpy(&b, &v, sizeof(b));
    return b;
  }

  static Key make_key(const FlowQuery& q) {
    Key k{bits(q.s), bits(q.t), bits(q.tol.rtol), bits(q.tol.atol), bits(q.tol.blowup_norm),
          bits(q.tol.min_step_fraction), q.tol.max_steps};
    for (Eigen::Index i = 0; i < q.x.size(); ++i) {
      k.push_back(bits(q.x[i]));
    }
    return k;
  }

  const VectorFieldSpec* field_;
  mutable std::mutex mutex_;
  std::map<Key, Vector> entries_;
  std::size_t hits_ = 0;
};

}  // namespace rectify
