#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "corpus.hpp"
#include "rectify/rectification.hpp"

namespace {

using rectify::Box;
using rectify::Interval;
using rectify::Matrix;
using rectify::SpaceTimeMap;
using rectify::SpaceTimePoint;
using rectify::Vector;
using rectify::VectorFieldSpec;
using rectify::testing::vec;

const Interval kWindow{-1.0, 1.0};

TEST(BuildRectification, ZeroFieldIsIdentity) {
  const auto r = rectify::build_rectification(VectorFieldSpec::parse({"0"}), 0.0, kWindow, {}, Box({{-1.0, 1.0}}));
  const auto p = r.apply(0.7, vec({3.0}));
  EXPECT_EQ(p.t, 0.7);
  EXPECT_EQ(p.x[0], 3.0);
  const auto q = r.apply_inverse(-0.4, vec({-2.0}));
  EXPECT_EQ(q.t, -0.4);
  EXPECT_EQ(q.x[0], -2.0);
}

TEST(BuildRectification, ExponentialClosedForm) {
  const auto r = rectify::build_rectification(VectorFieldSpec::parse({"x1"}), 0.0, kWindow, {}, Box({{0.5, 2.0}}));
  for (double t : {-1.0, -0.3, 0.0, 0.6, 1.0}) {
    for (double x : {0.5, 1.0, 2.0}) {
      EXPECT_NEAR(r.apply(t, vec({x})).x[0], x * std::exp(t), 1e-6);
      EXPECT_NEAR(r.apply_inverse(t, vec({x})).x[0], x * std::exp(-t), 1e-6);
    }
  }
}

TEST(BuildRectification, BlowUpFailsSmokeProbe) {
  EXPECT_THROW((void)rectify::build_rectification(VectorFieldSpec::parse({"x1^2"}), 0.0, {0.0, 2.0}, {},
                                                  Box({{0.5, 1.5}})),
               rectify::ProbeFailed);
}

TEST(BuildRectification, Preconditions) {
  const auto field = VectorFieldSpec::parse({"x1"}, Interval{0.0, 5.0}, Box({{0.0, 4.0}}));
  EXPECT_THROW((void)rectify::build_rectification(field, 1.0, {-1.0, 2.0}, {}, Box({{1.0, 2.0}})),
               rectify::InvalidInput);
  EXPECT_THROW((void)rectify::build_rectification(field, 3.0, {1.0, 2.0}, {}, Box({{1.0, 2.0}})),
               rectify::InvalidInput);
  EXPECT_THROW((void)rectify::build_rectification(field, 1.5, {1.0, 2.0}, {}, Box({{1.0, 5.0}})),
               rectify::InvalidInput);
  const auto r = rectify::build_rectification(field, std::nullopt, {1.0, 2.0}, {}, Box({{1.0, 2.0}}));
  EXPECT_EQ(r.base_time(), 1.5);
  EXPECT_THROW((void)r.apply(3.0, vec({1.0})), rectify::OutOfRange);
}

TEST(Apply, Examples) {
  const auto zero = rectify::build_rectification(VectorFieldSpec::parse({"0"}), 0.0, {-5.0, 5.0});
  const auto p = zero.apply(3.0, vec({1.25}));
  EXPECT_EQ(p.t, 3.0);
  EXPECT_EQ(p.x[0], 1.25);

  const auto ex = rectify::build_rectification(VectorFieldSpec::parse({"x1"}), 0.0, kWindow, {}, Box({{0.5, 2.0}}));
  EXPECT_NEAR(ex.apply(1.0, vec({1.0})).x[0], std::exp(1.0), 1e-6);

  const auto co = rectify::build_rectification(VectorFieldSpec::parse({"cos(t)"}), 0.0, {-2.0, 2.0});
  const auto q = co.apply(std::numbers::pi / 2, vec({0.0}));
  EXPECT_EQ(q.t, std::numbers::pi / 2);
  EXPECT_NEAR(q.x[0], 1.0, 1e-6);
}

TEST(ApplyInverse, Examples) {
  const auto zero = rectify::build_rectification(VectorFieldSpec::parse({"0"}), 0.0, {-5.0, 5.0});
  EXPECT_EQ(zero.apply_inverse(2.0, vec({0.5})).x[0], 0.5);

  const auto ex = rectify::build_rectification(VectorFieldSpec::parse({"x1"}), 0.0, kWindow, {}, Box({{0.5, 2.0}}));
  EXPECT_NEAR(ex.apply_inverse(1.0, vec({std::exp(1.0)})).x[0], 1.0, 1e-6);

  const auto rot = rectify::build_rectification(VectorFieldSpec::parse({"-x2", "x1"}), 0.0, kWindow, {},
                                                Box({{-2.0, 2.0}, {-2.0, 2.0}}));
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> ut(-1.0, 1.0);
  double worst = 0.0;
  for (const auto& x : rectify::testing::random_points(rot.probe_box(), 100, rng)) {
    const double t = ut(rng);
    const auto img = rot.apply(t, x);
    const auto back = rot.apply_inverse(img.t, img.x);
    worst = std::max(worst, (back.x - x).norm());
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(Jacobians, InverseFunctionRouteMatchesBackwardVariational) {
  for (const auto& c : rectify::testing::corpus()) {
    const auto r = rectify::build_rectification(c.field, 0.0, c.window, {}, c.probe_box);
    for (const auto& p : rectify::space_time_grid(c.window, 3, c.probe_box, 3)) {
      const Matrix a = r.inverse_jacobian(p.t, p.x);
      const Matrix b = r.inverse_jacobian_direct(p.t, p.x);
      EXPECT_LE((a - b).lpNorm<Eigen::Infinity>(), 1e-6) << c.name;
    }
  }
}

TEST(Pushforward, IdentityLeavesFieldUnchanged) {
  const auto field = VectorFieldSpec::parse({"-x2 + t", "x1*x2"});
  const auto push = rectify::pushforward(SpaceTimeMap::identity(2), rectify::extended_field(field));
  const SpaceTimePoint p{0.3, vec({0.5, -1.5})};
  const Vector w = push(p);
  EXPECT_EQ(w[0], 1.0);
  EXPECT_EQ(w.tail(2), field(p.t, p.x));
}

TEST(Pushforward, RectifiedExponentialIsHorizontal) {
  const auto field = VectorFieldSpec::parse({"x1"});
  const auto r = rectify::build_rectification(field, 0.0, kWindow, {}, Box({{0.5, 2.0}}));
  const auto inv = r.inverse_map();
  // Phi^{-1} pushes (1, v) to (1, 0): evaluate at images y = Phi^{-1}(p).
  const auto push = rectify::pushforward(inv, rectify::extended_field(field));
  for (const auto& p : rectify::space_time_grid(kWindow, 5, Box({{0.5, 2.0}}), 5)) {
    const Vector w = push(inv(p));
    EXPECT_NEAR(w[0], 1.0, 1e-12);
    EXPECT_LE(std::abs(w[1]), 1e-5);
  }
  // Phi pushes the trivial field (1, 0) to (1, v).
  const auto fwd = r.forward_map();
  const auto push_fwd = rectify::pushforward(fwd, rectify::trivial_field(1));
  for (const auto& p : rectify::space_time_grid(kWindow, 5, Box({{0.5, 2.0}}), 5)) {
    const auto y = fwd(p);
    const Vector w = push_fwd(y);
    EXPECT_NEAR(w[0], 1.0, 1e-12);
    EXPECT_NEAR(w[1], field(y.t, y.x)[0], 1e-5);
  }
}

TEST(Pushforward, NeedsInverse) {
  const auto m = SpaceTimeMap::parse(1, "t", {"x1^3"});
  EXPECT_THROW((void)rectify::pushforward(m, rectify::trivial_field(1)), rectify::MissingInverse);
}

TEST(VerifyRectification, ZeroField) {
  const auto r = rectify::build_rectification(VectorFieldSpec::parse({"0"}), 0.0, kWindow, {}, Box({{-1.0, 1.0}}));
  const auto rep = rectify::verify_rectification(r, rectify::space_time_grid(kWindow, 5, Box({{-1.0, 1.0}}), 5));
  EXPECT_EQ(rep.max_pushforward_residual, 0.0);
  EXPECT_EQ(rep.max_roundtrip_residual, 0.0);
  EXPECT_TRUE(rep.failures.empty());
  EXPECT_EQ(rep.probes, 25u);
}

TEST(VerifyRectification, Exponential) {
  const Box box({{0.5, 2.0}});
  const auto r = rectify::build_rectification(VectorFieldSpec::parse({"x1"}), 0.0, kWindow, {}, box);
  const auto rep = rectify::verify_rectification(r, rectify::space_time_grid(kWindow, 5, box, 5));
  EXPECT_LE(rep.max_pushforward_residual, 1e-5);
  EXPECT_LE(rep.max_roundtrip_residual, 1e-5);
  EXPECT_TRUE(rep.failures.empty());
}

TEST(VerifyRectification, QuadraticRecordsBlowUps) {
  const Box box({{0.5, 2.0}});
  // Built without the smoke probe: the field violates the invariance hypothesis on this window.
  const rectify::Rectification r(VectorFieldSpec::parse({"x1^2"}), 0.0, {0.0, 2.0}, {}, box);
  const auto rep = rectify::verify_rectification(r, rectify::space_time_grid({0.0, 2.0}, 5, box, 5));
  EXPECT_FALSE(rep.failures.empty());
  for (const auto& f : rep.failures) {
    EXPECT_EQ(f.kind, rectify::ProbeFailureKind::BlowUp);
  }
  EXPECT_EQ(rep.pushforward_residuals.size(), rep.probes);
  std::size_t missing = 0;
  for (const auto& res : rep.pushforward_residuals) {
    missing += res ? 0 : 1;
  }
  EXPECT_EQ(missing, rep.failures.size());
  EXPECT_FALSE(rep.passed(1e-5, 1e-6));
}

class RectificationCorpus : public ::testing::TestWithParam<rectify::testing::CorpusField> {};

TEST_P(RectificationCorpus, TimePreservedExactly) {
  const auto& c = GetParam();
  const auto r = rectify::build_rectification(c.field, std::nullopt, c.window, {}, c.probe_box);
  for (const auto& p : rectify::space_time_grid(c.window, 4, c.probe_box, 3)) {
    EXPECT_EQ(r.apply(p.t, p.x).t, p.t);
    EXPECT_EQ(r.apply_inverse(p.t, p.x).t, p.t);
  }
}

TEST_P(RectificationCorpus, RectifiesOnProbeGrid) {
  const auto& c = GetParam();
  const auto r = rectify::build_rectification(c.field, std::nullopt, c.window, {}, c.probe_box);
  const auto rep = rectify::verify_rectification(r, rectify::space_time_grid(c.window, 5, c.probe_box, 5));
  EXPECT_TRUE(rep.failures.empty());
  EXPECT_LE(rep.max_pushforward_residual, 1e-5);
  EXPECT_LE(rep.max_roundtrip_residual, 1e-6);
}

TEST_P(RectificationCorpus, SolutionsBecomeHorizontalLines) {
  const auto& c = GetParam();
  const auto r = rectify::build_rectification(c.field, std::nullopt, c.window, {}, c.probe_box);
  const auto start = c.probe_box.center();
  const auto sol = rectify::integrate(c.field, c.window.lower, start, c.window.upper);
  ASSERT_TRUE(sol.termination().reached());
  const Vector level = r.apply_inverse(c.window.lower, start).x;
  double spread = 0.0;
  for (double t : rectify::linspace(c.window.lower, c.window.upper, 41)) {
    spread = std::max(spread, (r.apply_inverse(t, sol.sample(t)).x - level).norm());
  }
  EXPECT_LE(spread, 1e-5);
}

INSTANTIATE_TEST_SUITE_P(Corpus, RectificationCorpus, ::testing::ValuesIn(rectify::testing::corpus()),
                         [](const auto& info) { return info.param.name; });

TEST(SpaceTimeMap, ComposeChainsJacobiansAndInverses) {
  const auto a = SpaceTimeMap::parse(1, "t + x1", {"2*x1"}, std::pair{std::string("t - x1/2"),
                                                                      std::vector<std::string>{"x1/2"}});
  const auto b = SpaceTimeMap::parse(1, "t", {"x1 + 1"}, std::pair{std::string("t"),
                                                                  std::vector<std::string>{"x1 - 1"}});
  const auto ab = rectify::compose(a, b);
  const SpaceTimePoint p{0.5, vec({3.0})};
  const auto q = ab(p);
  EXPECT_DOUBLE_EQ(q.t, 4.5);
  EXPECT_DOUBLE_EQ(q.x[0], 8.0);
  const auto back = ab.inverse(q);
  EXPECT_NEAR(back.t, p.t, 1e-15);
  EXPECT_NEAR(back.x[0], p.x[0], 1e-15);
  Matrix expected(2, 2);
  expected << 1.0, 1.0, 0.0, 2.0;
  EXPECT_TRUE(ab.jacobian(p).isApprox(expected));
  EXPECT_TRUE((ab.inverse_jacobian(q) * ab.jacobian(p)).isIdentity(1e-14));
}

}  // namespace
