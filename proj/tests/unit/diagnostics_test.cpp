#include <cmath>

#include <gtest/gtest.h>

#include "corpus.hpp"
#include "rectify/diagnostics.hpp"

namespace {

using rectify::Box;
using rectify::Interval;
using rectify::SpaceTimePoint;
using rectify::VectorFieldSpec;
using rectify::testing::vec;

const std::vector<double> kDecades{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};

TEST(EstimateLipschitz, Linear) {
  const auto prof = rectify::estimate_lipschitz(VectorFieldSpec::parse({"x1"}), {-1.0, 1.0}, Box({{-1.0, 1.0}}), 5,
                                                9, kDecades);
  EXPECT_EQ(prof.sup_estimate, 1.0);
  EXPECT_FALSE(prof.flagged_unbounded);
  EXPECT_TRUE(prof.eval_failures.empty());
  ASSERT_EQ(prof.refinement_trend.size(), 1u);
  for (double q : prof.refinement_trend[0].quotients) {
    EXPECT_NEAR(q, 1.0, 1e-9);
  }
}

TEST(EstimateLipschitz, Quadratic) {
  const auto prof = rectify::estimate_lipschitz(VectorFieldSpec::parse({"x1^2"}), {0.0, 1.0}, Box({{-2.0, 2.0}}), 3,
                                                21, kDecades);
  EXPECT_NEAR(prof.sup_estimate, 4.0, 1e-2);
  EXPECT_FALSE(prof.flagged_unbounded);
}

TEST(EstimateLipschitz, TimeModulated) {
  const auto prof = rectify::estimate_lipschitz(VectorFieldSpec::parse({"t*x1"}), {0.0, 2.0}, Box({{-1.0, 1.0}}), 5,
                                                5, kDecades);
  ASSERT_EQ(prof.estimates.size(), 5u);
  for (std::size_t i = 0; i < prof.times.size(); ++i) {
    EXPECT_DOUBLE_EQ(prof.estimates[i], prof.times[i]);
  }
  EXPECT_EQ(prof.sup_estimate, 2.0);
}

TEST(EstimateLipschitz, RotationSpectralNorm) {
  const auto prof = rectify::estimate_lipschitz(VectorFieldSpec::parse({"-x2", "x1"}), {-1.0, 1.0},
                                                Box({{-1.0, 1.0}, {-1.0, 1.0}}), 3, 3, kDecades);
  EXPECT_NEAR(prof.sup_estimate, 1.0, 1e-12);
}

TEST(EstimateLipschitz, SquareRootFlagged) {
  const auto prof = rectify::estimate_lipschitz(VectorFieldSpec::parse({"2*sqrt(abs(x1))"}), {0.0, 1.0},
                                                Box({{-1.0, 1.0}}), 3, 5, kDecades);
  EXPECT_TRUE(prof.flagged_unbounded);
  EXPECT_FALSE(prof.eval_failures.empty());
  for (const auto& p : prof.eval_failures) {
    EXPECT_EQ(p.x[0], 0.0);
  }
  const auto& trend = prof.refinement_trend.front().quotients;
  for (std::size_t k = 1; k < trend.size(); ++k) {
    EXPECT_NEAR(trend[k] / trend[k - 1], std::sqrt(10.0), 1e-9);
  }
}

TEST(EstimateLipschitz, AbsoluteValueKinkNotFlagged) {
  const auto prof = rectify::estimate_lipschitz(VectorFieldSpec::parse({"abs(x1)"}), {0.0, 1.0}, Box({{-1.0, 1.0}}),
                                                3, 5, kDecades);
  EXPECT_FALSE(prof.flagged_unbounded);
  EXPECT_EQ(prof.sup_estimate, 1.0);
}

TEST(EstimateLipschitz, InvalidInput) {
  const auto f = VectorFieldSpec::parse({"x1"});
  EXPECT_THROW((void)rectify::estimate_lipschitz(f, {0.0, 1.0}, Box({{-1.0, 1.0}}), 1, 5, kDecades),
               rectify::InvalidInput);
  EXPECT_THROW((void)rectify::estimate_lipschitz(f, {0.0, 1.0}, Box({{-1.0, 1.0}}), 3, 5, {1e-3, 1e-2}),
               rectify::InvalidInput);
  EXPECT_THROW((void)rectify::estimate_lipschitz(f, {0.0, 1.0}, Box({{-1.0, 1.0}, {0.0, 1.0}}), 3, 5, kDecades),
               rectify::InvalidInput);
}

TEST(EstimateLipschitz, MonotoneInRegion) {
  const auto f = VectorFieldSpec::parse({"x1^3 - x2", "sin(x1*x2)"});
  double prev = 0.0;
  // Spacing stays 0.25, so each grid contains the previous one.
  for (std::size_t k : {1, 2, 4, 8}) {
    const double s = 0.25 * static_cast<double>(k);
    const auto prof = rectify::estimate_lipschitz(f, {0.0, 1.0}, Box({{-s, s}, {-s, s}}), 2, 2 * k + 1, {});
    EXPECT_GE(prof.sup_estimate, prev);
    prev = prof.sup_estimate;
  }
}

TEST(EstimateLipschitz, CorpusRaisesNoFlags) {
  for (const auto& c : rectify::testing::corpus()) {
    const auto prof = rectify::estimate_lipschitz(c.field, c.window, c.probe_box, 5, 5, kDecades);
    EXPECT_FALSE(prof.flagged_unbounded) << c.name;
    EXPECT_TRUE(prof.eval_failures.empty()) << c.name;
    const auto u = rectify::probe_uniqueness(c.field, {c.window.lower, c.probe_box.center()}, kDecades);
    EXPECT_FALSE(u.flagged) << c.name;
  }
}

TEST(EstimateLipschitzGrowth, PolynomialGrowsLinearDoesNot) {
  const std::vector<double> scales{1.0, 2.0, 4.0, 8.0, 16.0};
  const auto cubic = rectify::estimate_lipschitz_growth(VectorFieldSpec::parse({"x1^3"}), {0.0, 1.0}, vec({0.0}),
                                                        scales);
  EXPECT_TRUE(cubic.unbounded);
  EXPECT_EQ(cubic.sup_estimates.size(), scales.size());
  const auto lin = rectify::estimate_lipschitz_growth(VectorFieldSpec::parse({"3*x1 + sin(x1)"}), {0.0, 1.0},
                                                      vec({0.0}), scales);
  EXPECT_FALSE(lin.unbounded);
}

TEST(ProbeInvariance, Quadratic) {
  const auto rep = rectify::probe_invariance(VectorFieldSpec::parse({"x1^2"}), {0.0, 2.0}, {{0.0, vec({1.0})}});
  ASSERT_EQ(rep.escapes.size(), 1u);
  EXPECT_FALSE(rep.invariant_on_probes());
  EXPECT_EQ(rep.escapes[0].kind, rectify::EscapeKind::BlowUp);
  EXPECT_EQ(rep.escapes[0].direction, 1.0);
  EXPECT_NEAR(rep.escapes[0].event_time, 1.0, 1e-3);
}

TEST(ProbeInvariance, LogisticOnUnitInterval) {
  const auto field = VectorFieldSpec::parse({"x1*(1 - x1)"}, {}, Box({{0.0, 1.0}}));
  std::vector<SpaceTimePoint> ics;
  for (double x : rectify::linspace(0.05, 0.95, 10)) {
    ics.push_back({0.0, vec({x})});
  }
  const auto rep = rectify::probe_invariance(field, {-1.0, 1.0}, ics);
  EXPECT_EQ(rep.probed, 10u);
  EXPECT_TRUE(rep.invariant_on_probes());
}

TEST(ProbeInvariance, ZeroFieldAndDomainEscape) {
  EXPECT_TRUE(rectify::probe_invariance(VectorFieldSpec::parse({"0"}), {-5.0, 5.0}, {{0.0, vec({3.0})}})
                  .invariant_on_probes());
  const auto drift = VectorFieldSpec::parse({"1"}, {}, Box({{-1.0, 1.0}}));
  const auto rep = rectify::probe_invariance(drift, {-3.0, 3.0}, {{0.0, vec({0.0})}});
  ASSERT_EQ(rep.escapes.size(), 2u);
  EXPECT_EQ(rep.escapes[0].kind, rectify::EscapeKind::DomainEscape);
  EXPECT_NEAR(rep.escapes[0].event_time, 1.0, 1e-10);
  EXPECT_EQ(rep.escapes[1].direction, -1.0);
  EXPECT_NEAR(rep.escapes[1].event_time, -1.0, 1e-10);
}

rectify::CandidateSolution candidate(const std::string& label, const std::string& text) {
  return {label, {rectify::parse(text, 1)}};
}

TEST(ProbeUniqueness, Linear) {
  const auto rep = rectify::probe_uniqueness(VectorFieldSpec::parse({"x1"}), {0.0, vec({0.0})}, kDecades,
                                             {candidate("zero", "0")});
  EXPECT_FALSE(rep.flagged);
  EXPECT_FALSE(rep.non_uniqueness_witnessed());
  ASSERT_EQ(rep.candidates.size(), 1u);
  EXPECT_TRUE(rep.candidates[0].is_solution);
}

TEST(ProbeUniqueness, SquareRootTwoSolutions) {
  const auto rep = rectify::probe_uniqueness(VectorFieldSpec::parse({"2*sqrt(abs(x1))"}), {0.0, vec({0.0})},
                                             kDecades, {candidate("zero", "0"), candidate("parabola", "t^2")});
  EXPECT_TRUE(rep.flagged);
  ASSERT_EQ(rep.candidates.size(), 2u);
  for (const auto& c : rep.candidates) {
    EXPECT_TRUE(c.is_solution) << c.label << " " << c.max_residual;
    EXPECT_TRUE(c.passes_through_point);
  }
  EXPECT_TRUE(rep.non_uniqueness_witnessed());
}

TEST(ProbeUniqueness, QuadraticAndWrongCandidate) {
  const auto rep = rectify::probe_uniqueness(VectorFieldSpec::parse({"x1^2"}), {0.0, vec({1.0})}, kDecades,
                                             {candidate("wrong", "1 + t")}, 0.5);
  EXPECT_FALSE(rep.flagged);
  EXPECT_FALSE(rep.candidates[0].is_solution);
  EXPECT_TRUE(rep.candidates[0].passes_through_point);
  EXPECT_THROW((void)rectify::probe_uniqueness(VectorFieldSpec::parse({"x1", "x2"}), {0.0, vec({0.0, 0.0})},
                                               kDecades, {candidate("short", "0")}),
               rectify::DimensionError);
}

}  // namespace
