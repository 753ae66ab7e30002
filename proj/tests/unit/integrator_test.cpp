#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "rectify/integrator.hpp"

namespace {

using rectify::Box;
using rectify::Interval;
using rectify::Matrix;
using rectify::TerminationKind;
using rectify::Tolerances;
using rectify::Vector;
using rectify::VectorFieldSpec;

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) {
    out[i++] = x;
  }
  return out;
}

TEST(Integrate, ConstantSolution) {
  const auto field = VectorFieldSpec::parse({"0"});
  const auto curve = rectify::integrate(field, 0.0, vec({5.0}), 3.0);
  EXPECT_EQ(curve.termination().kind, TerminationKind::ReachedTarget);
  EXPECT_EQ(curve.end_time(), 3.0);
  for (const auto& s : curve.states()) {
    EXPECT_EQ(s[0], 5.0);
  }
  EXPECT_EQ(rectify::sample(curve, 1.7)[0], 5.0);
}

TEST(Integrate, QuadraticBlowUp) {
  const auto field = VectorFieldSpec::parse({"x1^2"});
  for (double x0 : {0.5, 1.0, 2.0}) {
    const auto curve = rectify::integrate(field, 0.0, vec({x0}), 2.0 / x0 + 1.0);
    ASSERT_EQ(curve.termination().kind, TerminationKind::BlowUp) << x0;
    EXPECT_LE(std::abs(curve.termination().time - 1.0 / x0), 1e-3);
  }
}

TEST(Integrate, RotationQuarterTurn) {
  const auto field = VectorFieldSpec::parse({"-x2", "x1"});
  const auto curve = rectify::integrate(field, 0.0, vec({1.0, 0.0}), std::numbers::pi / 2);
  ASSERT_TRUE(curve.termination().reached());
  EXPECT_NEAR(curve.end_state()[0], 0.0, 1e-6);
  EXPECT_NEAR(curve.end_state()[1], 1.0, 1e-6);
}

TEST(Integrate, BackwardDirection) {
  const auto field = VectorFieldSpec::parse({"x1"});
  const auto curve = rectify::integrate(field, 1.0, vec({std::exp(1.0)}), -1.0);
  ASSERT_TRUE(curve.termination().reached());
  EXPECT_EQ(curve.direction(), -1.0);
  EXPECT_NEAR(curve.end_state()[0], std::exp(-1.0), 1e-8);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    EXPECT_LT(curve.times()[i], curve.times()[i - 1]);
  }
}

TEST(Integrate, ZeroLengthWindow) {
  const auto field = VectorFieldSpec::parse({"x1"});
  const auto curve = rectify::integrate(field, 0.5, vec({2.0}), 0.5);
  EXPECT_TRUE(curve.termination().reached());
  EXPECT_EQ(curve.size(), 1u);
  EXPECT_EQ(curve.sample(0.5)[0], 2.0);
}

TEST(Integrate, DomainEscapeRefinedToFace) {
  // x' = 1 from x = 0 leaves (-1, 1) at t = 1.
  const auto field = VectorFieldSpec::parse({"1"}, {}, Box({{-1.0, 1.0}}));
  const auto curve = rectify::integrate(field, 0.0, vec({0.0}), 5.0);
  ASSERT_EQ(curve.termination().kind, TerminationKind::DomainEscape);
  EXPECT_NEAR(curve.termination().time, 1.0, 1e-11);
  EXPECT_EQ(curve.termination().face_axis, 0u);
  EXPECT_TRUE(curve.termination().face_upper);
  for (const auto& s : curve.states()) {
    EXPECT_LE(std::abs(s[0]), 1.0);
  }
}

TEST(Integrate, InvalidInput) {
  const auto field = VectorFieldSpec::parse({"x1"}, Interval{0.0, 1.0}, Box({{0.0, 1.0}}));
  EXPECT_THROW((void)rectify::integrate(field, 0.5, vec({2.0}), 1.0), rectify::InvalidInput);
  EXPECT_THROW((void)rectify::integrate(field, 0.5, vec({0.5}), 2.0), rectify::InvalidInput);
  EXPECT_THROW((void)rectify::integrate(field, 0.0, vec({0.5}), 1.0), rectify::InvalidInput);
  EXPECT_THROW((void)rectify::integrate(field, 0.5, vec({0.5, 0.1}), 1.0), rectify::DimensionError);
  Tolerances bad;
  bad.rtol = 1e-17;
  EXPECT_THROW((void)rectify::integrate(field, 0.5, vec({0.5}), 1.0, bad), rectify::InvalidInput);
}

TEST(Integrate, EvalErrorPropagates) {
  const auto field = VectorFieldSpec::parse({"log(x1)"});
  EXPECT_THROW((void)rectify::integrate(field, 0.0, vec({-1.0}), 1.0), rectify::EvalError);
}

TEST(Variational, ZeroFieldGivesIdentity) {
  const auto field = VectorFieldSpec::parse({"0", "0"});
  const auto [curve, jac] = rectify::integrate_with_variational(field, 0.0, vec({1.0, 2.0}), 4.0);
  for (std::size_t i = 0; i < jac.size(); ++i) {
    EXPECT_TRUE(jac.at_node(i).isIdentity(0.0));
  }
}

TEST(Variational, ExponentialSensitivity) {
  const auto field = VectorFieldSpec::parse({"x1"});
  const auto [curve, jac] = rectify::integrate_with_variational(field, 0.0, vec({1.0}), 1.0);
  EXPECT_NEAR(jac.end()(0, 0), std::exp(1.0), 1e-6);
  EXPECT_TRUE(jac.at_node(0).isIdentity(0.0));
  EXPECT_EQ(curve.times(), jac.times());
}

TEST(Variational, RotationHalfTurn) {
  const auto field = VectorFieldSpec::parse({"-x2", "x1"});
  const auto [curve, jac] = rectify::integrate_with_variational(field, 0.0, vec({1.0, 0.0}), std::numbers::pi);
  EXPECT_TRUE(jac.end().isApprox(-Matrix::Identity(2, 2), 1e-6));
  for (std::size_t i = 0; i < jac.size(); ++i) {
    EXPECT_NEAR(jac.at_node(i).determinant(), 1.0, 1e-6);
  }
}

TEST(Sample, Examples) {
  const auto field = VectorFieldSpec::parse({"x1"});
  const auto curve = rectify::integrate(field, 0.0, vec({1.0}), 1.0);
  EXPECT_NEAR(rectify::sample(curve, 0.5)[0], std::exp(0.5), 1e-6);
  EXPECT_THROW((void)rectify::sample(curve, 1.5), rectify::OutOfRange);

  const auto blow = rectify::integrate(VectorFieldSpec::parse({"x1^2"}), 0.0, vec({1.0}), 2.0);
  ASSERT_EQ(blow.termination().kind, TerminationKind::BlowUp);
  EXPECT_THROW((void)rectify::sample(blow, blow.termination().time + 0.01), rectify::OutOfRange);
}

TEST(Sample, ExactAtNodes) {
  const auto field = VectorFieldSpec::parse({"-x2", "x1 - 0.1*x2"});
  const auto curve = rectify::integrate(field, 0.0, vec({1.0, 0.5}), 7.0);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    EXPECT_EQ(curve.sample(curve.times()[i]), curve.states()[i]);
  }
}

// Shrinking tolerances must shrink the error against closed forms.
TEST(IntegrateProperty, ConvergenceWithTolerance) {
  struct Case {
    VectorFieldSpec field;
    Vector x0;
    double t_end;
    Vector exact;
  };
  const double tf = 3.0;
  std::vector<Case> cases;
  cases.push_back({VectorFieldSpec::parse({"x1"}), vec({1.0}), tf, vec({std::exp(tf)})});
  cases.push_back({VectorFieldSpec::parse({"-x2", "x1"}), vec({1.0, 0.0}), tf, vec({std::cos(tf), std::sin(tf)})});
  cases.push_back({VectorFieldSpec::parse({"cos(t)"}), vec({0.0}), tf, vec({std::sin(tf)})});
  for (const auto& c : cases) {
    double previous = std::numeric_limits<double>::infinity();
    for (double rtol : {1e-4, 1e-6, 1e-8, 1e-10}) {
      Tolerances tol;
      tol.rtol = rtol;
      tol.atol = rtol * 1e-2;
      const auto curve = rectify::integrate(c.field, 0.0, c.x0, c.t_end, tol);
      const double err = (curve.end_state() - c.exact).norm();
      EXPECT_LT(err, previous) << "rtol " << rtol;
      previous = err;
    }
  }
}

TEST(IntegrateProperty, BitIdenticalRepeats) {
  const auto field = VectorFieldSpec::parse({"-x2 + sin(t)", "x1*(1 - x1^2)"});
  const auto a = rectify::integrate(field, 0.0, vec({0.3, 0.2}), 5.0);
  const auto b = rectify::integrate(field, 0.0, vec({0.3, 0.2}), 5.0);
  ASSERT_EQ(a.times(), b.times());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.states()[i], b.states()[i]);
  }
}

TEST(IntegrateProperty, DenseOutputAgainstReference) {
  const auto field = VectorFieldSpec::parse({"-x2", "x1 + 0.3*sin(t)"});
  const auto curve = rectify::integrate(field, 0.0, vec({1.0, 0.0}), 6.0);
  Tolerances tight;
  tight.rtol = 1e-13;
  tight.atol = 1e-15;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 6.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double t = u(rng);
    const auto ref = rectify::integrate(field, 0.0, vec({1.0, 0.0}), t, tight);
    worst = std::max(worst, (curve.sample(t) - ref.end_state()).norm());
  }
  // Default tolerance 1e-9 relative; allow ten times the tolerance-scaled step error.
  EXPECT_LE(worst, 10.0 * 1e-9 * 2.0);
}

}  // namespace
