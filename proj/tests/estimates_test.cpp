#include <gtest/gtest.h>

#include <cmath>

#include "wcsys/estimates.hpp"
#include "wcsys/presets.hpp"
#include "wcsys/random_field.hpp"

using namespace wcsys;

namespace {

GridFunction random_datum(const UniformGrid& g, int m, std::uint64_t seed) {
  RandomFieldSpec spec;
  spec.components = m;
  spec.dim = g.dim();
  return sample(g, random_smooth_field(spec, seed));
}

Problem scalar_heat(double R = 8.0, int n = 401, double T = 1.0) {
  OperatorFamily op(1, 1);
  op.set_q(0, 0, 0, CoefficientExpr(1.0));
  return Problem{"heat", op, UniformGrid(BoxDomain(R, 1), n), 0.0, T, {}};
}

// Heat equation with q = 1 + a sin(t): the only time dependence is in the amplitude a.
Problem modulated_heat(double a) {
  auto pb = scalar_heat(6.0, 241);
  pb.op.set_q(0, 0, 0, CoefficientExpr(1.0, 0.0, TimeFactor::sinusoidal(a, 1.0, 0.0)));
  return pb;
}

const double kHalfWidth = 0.25;

// Plateau edge width: five cells of the decay grid.
double edge_width(const Problem& pb) { return 5.0 * pb.grid.spacing(); }

}  // namespace

TEST(Comparison, NonnegativeCouplingAndDataGiveZeroViolation) {
  OperatorFamily op(1, 2);
  for (int k = 0; k < 2; ++k) {
    op.set_q(k, 0, 0, CoefficientExpr(1.0));
    op.set_c(k, k, CoefficientExpr(-1.0));
    op.set_c(k, 1 - k, CoefficientExpr(1.0));
  }
  const Problem pb{"nonneg", op, UniformGrid(BoxDomain(4.0, 1), 161), 0.0, 0.5, {}};
  const auto f = random_datum(pb.grid, 2, 3).abs();
  const auto rep = check_comparison(pb, f);
  EXPECT_EQ(rep.worst_violation(), 0.0);
  EXPECT_TRUE(rep.pass());
}

TEST(Comparison, Example2RandomData) {
  const auto pb = load_preset("example2-gamma0").problem();
  const auto rep = check_comparison(pb, random_datum(pb.grid, 3, 11));
  EXPECT_TRUE(rep.pass()) << rep.worst_violation() << " vs " << rep.tolerance();
}

TEST(Comparison, SignFlippingCouplingWithRefinement) {
  const auto pr = load_preset("decoupled-negative-coupling");
  const Field f{2, [](int k, std::span<const double> x) { return (k == 0 ? 1.0 : -1.0) * std::exp(-x[0] * x[0]); }};
  const auto rep = check_comparison_refinement(pr.problem(), f);
  EXPECT_TRUE(rep.pass()) << rep.binding()->name << " = " << rep.worst_violation();
}

TEST(SupBound, HeatSupIsNonincreasing) {
  const auto pb = scalar_heat();
  const auto rep = check_sup_bound(pb, random_datum(pb.grid, 1, 5));
  EXPECT_TRUE(rep.pass());
  EXPECT_EQ(rep.measured.at("M_J"), 0.0);
  EXPECT_LE(rep.worst_violation(), 1.0 + 1e-12);
}

TEST(SupBound, Example2UsesSampledRowSum) {
  const auto pb = load_preset("example2-gamma0").problem();
  const auto rep = check_sup_bound(pb, random_datum(pb.grid, 3, 8));
  EXPECT_TRUE(rep.pass()) << rep.worst_violation();
  EXPECT_NEAR(rep.measured.at("M_J"), std::sqrt(3.0) - 1.0, 1e-12);
}

TEST(SupBound, ZeroDatumGivesZeroRatio) {
  const auto pb = load_preset("example2-gamma0").problem();
  const auto rep = check_sup_bound(pb, GridFunction(pb.grid, 3));
  EXPECT_EQ(rep.worst_violation(), 0.0);
  EXPECT_TRUE(rep.pass());
}

TEST(Decay, LagWindowNeedsADecade) {
  DecaySettings st;
  st.lag_max = 5e-4;
  const auto pb = decay_problem(scalar_heat(), st);
  const auto f = sample(pb.grid, decay_datum(0, 1, 1, kHalfWidth, edge_width(pb)));
  try {
    measure_derivative_decay(pb, f, 0, 1, st);
    FAIL() << "expected InsufficientDecade";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientDecade);
  }
}

TEST(Decay, DatumNormIsResolutionStable) {
  const auto pb = decay_problem(scalar_heat());
  for (int h : {0, 1}) {
    const auto f = decay_datum(h, 1, 2, kHalfWidth, edge_width(pb));
    EXPECT_LT(datum_refinement_change(f, pb.grid, h, pb.inner_half()), 0.05) << "h=" << h;
  }
}

TEST(Decay, HeatFirstDerivativeSlope) {
  const auto pb = decay_problem(scalar_heat());
  const auto f = sample(pb.grid, decay_datum(0, 1, 1, kHalfWidth, edge_width(pb)));
  const auto fit = measure_derivative_decay(pb, f, 0, 1);
  EXPECT_GE(fit.slope, -0.65);
  EXPECT_LE(fit.slope, -0.35);
  EXPECT_TRUE(fit.pass());
  EXPECT_EQ(fit.Mbar, 0.5);
  EXPECT_EQ(fit.lags.size(), 10u);
}

TEST(Decay, SameOrderStaysBounded) {
  const auto pb = decay_problem(scalar_heat());
  const auto f = sample(pb.grid, decay_datum(1, 1, 1, kHalfWidth, edge_width(pb)));
  const auto fit = measure_derivative_decay(pb, f, 1, 1);
  EXPECT_EQ(fit.target, 0.0);
  for (double n : fit.norms) EXPECT_LE(n, fit.datum_norm * (1.0 + 1e-6));
}

TEST(Decay, Example1AllOrders) {
  const auto pb = decay_problem(load_preset("example1-d1m2").problem());
  for (auto [h, k] : {std::pair{0, 1}, {0, 2}, {1, 2}, {0, 3}}) {
    const auto f = sample(pb.grid, decay_datum(h, 1, 2, kHalfWidth, edge_width(pb)));
    const auto fit = measure_derivative_decay(pb, f, h, k);
    EXPECT_TRUE(fit.pass()) << "(h,k)=(" << h << "," << k << ") slope " << fit.slope << " target " << fit.target;
    const auto rep = decay_report(fit, "derivative_decay", pb.name);
    EXPECT_EQ(rep.pass(), fit.pass());
  }
}

TEST(Interpolation, HeatFractionalOrder) {
  DecaySettings st;
  st.cap = PairCap::physical(3.0 * std::sqrt(st.lag_max));
  const auto pb = decay_problem(scalar_heat(), st);
  const auto f = sample(pb.grid, decay_datum(0, 1, 1, kHalfWidth, edge_width(pb)));
  const auto rep = check_interpolation_estimates(pb, 0.0, 1.5, 0.0, f, st);
  EXPECT_TRUE(rep.pass()) << "slope " << rep.measured.at("slope");
  EXPECT_LT(rep.measured.at("slope"), -0.5);
}

TEST(Interpolation, Example1FromFirstOrderData) {
  DecaySettings st;
  st.cap = PairCap::physical(3.0 * std::sqrt(st.lag_max));
  const auto pb = decay_problem(load_preset("example1-d1m2").problem(), st);
  const auto f = sample(pb.grid, decay_datum(1, 1, 2, kHalfWidth, edge_width(pb)));
  const auto rep = check_interpolation_estimates(pb, 0.5, 2.5, 1.0, f, st);
  EXPECT_TRUE(rep.pass()) << "slope " << rep.measured.at("slope");
}

TEST(Interpolation, EqualOrdersGiveZeroTarget) {
  DecaySettings st;
  st.cap = PairCap::physical(3.0 * std::sqrt(st.lag_max));
  const auto pb = decay_problem(scalar_heat(), st);
  const auto f = sample(pb.grid, decay_datum(1, 1, 1, kHalfWidth, edge_width(pb)));
  const auto fit = measure_interpolation_decay(pb, 0.0, 1.5, 1.5, f, st);
  EXPECT_EQ(fit.target, 0.0);
  for (double n : fit.norms) EXPECT_LT(n, 2.0 * fit.datum_norm);
}

TEST(EvolutionLaw, EndpointsAreExact) {
  const auto pb = load_preset("example1-d1m2").problem();
  const auto f = random_datum(pb.grid, 2, 21);
  for (double r : {pb.s, pb.T}) {
    const auto rep = check_evolution_law(pb, f, r);
    EXPECT_EQ(rep.criteria.front().value, 0.0);
    EXPECT_TRUE(rep.pass());
  }
}

TEST(EvolutionLaw, Example1GenericIntermediateTime) {
  const auto pb = load_preset("example1-d1m2").problem();
  const auto rep = check_evolution_law(pb, random_datum(pb.grid, 2, 22), 0.3537);
  EXPECT_TRUE(rep.pass()) << rep.binding()->name << " = " << rep.worst_violation();
  EXPECT_GE(rep.measured.at("halving_ratio"), 1.7);
}

TEST(ContinuityInData, ConstantSequence) {
  const auto pb = load_preset("example2-gamma0").problem();
  const auto f = random_datum(pb.grid, 3, 31);
  const auto rep = check_continuity_in_data(pb, f, {f, f, f});
  EXPECT_EQ(rep.measured.at("eps_3"), 0.0);
  EXPECT_TRUE(rep.pass());
}

TEST(ContinuityInData, ScaledSequenceDecaysLikeOneOverN) {
  const auto pb = load_preset("example2-gamma0").problem();
  const auto f = random_datum(pb.grid, 3, 32);
  std::vector<GridFunction> fn;
  for (int n = 1; n <= 4; ++n) fn.push_back((1.0 + 1.0 / n) * f);
  const auto rep = check_continuity_in_data(pb, f, fn, std::nullopt, 1.0);
  // n eps_n is the same number for every n.
  const double base = rep.measured.at("eps_1");
  for (int n = 2; n <= 4; ++n) EXPECT_NEAR(n * rep.measured.at("eps_" + std::to_string(n)), base, 1e-10 * base);
  EXPECT_TRUE(rep.pass());
}

TEST(ContinuityInData, SmoothTruncations) {
  const auto pb = load_preset("example1-d1m2").problem();
  const Field bounded{2, [](int k, std::span<const double> x) { return std::tanh(x[0]) + 0.5 * k; }};
  const auto f = sample(pb.grid, bounded);
  std::vector<GridFunction> fn;
  // The drift sweeps boundary data inward within the horizon, so cutoffs
  // approach the box edge with a transition layer of width w.
  const double R = pb.grid.radius();
  for (double w : {2.0, 1.0, 0.5, 0.25, 0.125}) {
    const Field cut{2, [&bounded, R, w](int k, std::span<const double> x) {
                      return bounded.eval(k, x) * 0.5 * (1.0 - std::tanh(8.0 * (std::abs(x[0]) - (R - w)) / w));
                    }};
    fn.push_back(sample(pb.grid, cut));
  }
  const auto rep = check_continuity_in_data(pb, f, fn);
  EXPECT_TRUE(rep.pass()) << rep.binding()->name << " = " << rep.worst_violation();
}

TEST(JointContinuity, AutonomousModulusVanishes) {
  const auto pb = load_preset("example2-gamma0").problem();
  const auto jc = joint_continuity_moduli(pb, random_datum(pb.grid, 3, 41), 0.0, 1.0, {0.1, 0.5});
  for (double m : jc.modulus) EXPECT_EQ(m, 0.0);
  EXPECT_TRUE(check_joint_continuity(pb, random_datum(pb.grid, 3, 41), 0.0, 1.0, {0.1, 0.5}).pass());
}

TEST(JointContinuity, ModulusIsLinearInAmplitude) {
  const auto f = random_datum(modulated_heat(0.1).grid, 1, 42);
  const auto a = joint_continuity_moduli(modulated_heat(0.1), f, 0.0, 1.0, {0.1, 0.5});
  const auto b = joint_continuity_moduli(modulated_heat(0.05), f, 0.0, 1.0, {0.1, 0.5});
  ASSERT_GT(b.modulus.front(), 0.0);
  EXPECT_NEAR(a.modulus.front() / b.modulus.front(), 2.0, 0.2);
}

TEST(JointContinuity, Example1ModulusDecreases) {
  const auto pb = load_preset("example1-d1m2").problem();
  const auto rep = check_joint_continuity(pb, random_datum(pb.grid, 2, 43), 0.0, 1.0, {0.1, 0.25, 0.5});
  EXPECT_TRUE(rep.pass()) << rep.worst_violation();
  EXPECT_GT(rep.measured.at("modulus_1"), 0.0);
}

TEST(Duhamel, DiagonalCouplingIsExact) {
  OperatorFamily op(1, 2);
  for (int k = 0; k < 2; ++k) {
    op.set_q(k, 0, 0, CoefficientExpr(1.0 + k));
    op.set_b(k, 0, CoefficientExpr(-1.0, 0.0, {}, 0));
    op.set_c(k, k, CoefficientExpr(-1.0 - k, 0.5));
  }
  const Problem pb{"diagonal", op, UniformGrid(BoxDomain(4.0, 1), 161), 0.0, 0.5, {}};
  const auto rep = duhamel_check(pb, random_datum(pb.grid, 2, 51), 10, 1e-9);
  EXPECT_TRUE(rep.pass()) << rep.worst_violation();
}

TEST(Duhamel, Example1Reconstruction) {
  const auto pb = load_preset("example1-d1m2").problem();
  const auto rep = duhamel_check(pb, random_datum(pb.grid, 2, 52));
  EXPECT_TRUE(rep.pass()) << rep.worst_violation();
}
