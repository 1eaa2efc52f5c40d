#include <gtest/gtest.h>

#include <cmath>

#include "wcsys/presets.hpp"
#include "wcsys/resolvent.hpp"

using namespace wcsys;

namespace {

GridFunction random_datum(const UniformGrid& g, int m, std::uint64_t seed) {
  RandomFieldSpec spec;
  spec.components = m;
  spec.dim = g.dim();
  return normalized(sample(g, random_smooth_field(spec, seed)));
}

// Constant diffusion, no drift, constant coupling C0.
OperatorFamily constant_coupling(const Eigen::MatrixXd& C0, double q = 1.0) {
  const int m = static_cast<int>(C0.rows());
  OperatorFamily op(1, m);
  for (int k = 0; k < m; ++k) {
    op.set_q(k, 0, 0, CoefficientExpr(q));
    for (int j = 0; j < m; ++j)
      if (C0(k, j) != 0.0) op.set_c(k, j, CoefficientExpr(C0(k, j)));
  }
  return op;
}

// (1 - d^2/dx^2)^{-1} applied to exp(-x^2 / 2s^2): convolution with exp(-|x|)/2.
double green_convolution(double x, double s) {
  const double c = s * std::sqrt(2.0 * std::numbers::pi) / 4.0 * std::exp(0.5 * s * s);
  return c * (std::exp(-x) * std::erfc((s * s - x) / (s * std::sqrt(2.0))) +
              std::exp(x) * std::erfc((s * s + x) / (s * std::sqrt(2.0))));
}



}  // namespace

TEST(ResolventQuadrature, VanishingOperatorGivesScaledIdentity) {
  OperatorFamily op(1, 1);
  op.set_q(0, 0, 0, CoefficientExpr(1e-6));
  const UniformGrid g(BoxDomain(2.0, 1), 41);
  const auto f = sample(g, constant_field({0.7}));
  const auto r = resolvent_quadrature(op, 0.0, 2.0, f);
  EXPECT_LT(sup_norm(r.u - (1.0 / 2.0) * f), 1e-6);
  EXPECT_LE(r.tail_bound, 1e-8 * 0.7 * (1.0 + 1e-12));
}

TEST(ResolventQuadrature, ConstantCouplingMatchesDenseInverse) {
  Eigen::MatrixXd C0(2, 2);
  C0 << -1.0, 0.7, -0.4, -2.0;
  const auto op = constant_coupling(C0);
  const UniformGrid g(BoxDomain(2.0, 1), 41);
  const Eigen::Vector2d v(0.3, -1.1);
  const auto f = sample(g, constant_field({v(0), v(1)}));
  const double lambda = 2.0;
  const Eigen::Vector2d want = (lambda * Eigen::Matrix2d::Identity() - C0).inverse() * v;
  auto error = [&](const GridFunction& u) {
    double e = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p)
      for (int k = 0; k < 2; ++k) e = std::max(e, std::abs(u(k, p) - want(k)));
    return e;
  };
  EXPECT_LT(error(elliptic_direct(op, 0.0, lambda, f).u), 1e-12);
  // Crank-Nicolson on a spatially constant solution: second order in the step.
  const double e0 = error(resolvent_quadrature(op, 0.0, lambda, f).u);
  SolverConfig half;
  half.dt = 0.005;
  const double e1 = error(resolvent_quadrature(op, 0.0, lambda, f, half).u);
  EXPECT_LT(e0, 1e-5);
  EXPECT_GT(e0 / e1, 3.5);
}

TEST(ResolventQuadrature, Example2KernelVector) {
  const auto pr = load_preset("example2-gamma0");
  const auto& eta = *pr.expected.eta;
  const auto f = sample(pr.grid(), constant_field(eta.value));
  const double lambda = 3.0;
  const auto r = resolvent_quadrature(pr.op, 0.0, lambda, f);
  EXPECT_LT(sup_norm(r.u - (1.0 / lambda) * f), 1e-6);
}

TEST(ResolventQuadrature, LambdaBelowMarginIsRejected) {
  const auto pr = load_preset("example2-gamma0");
  const double M = std::sqrt(3.0) - 1.0;
  try {
    resolvent_quadrature(pr.op, 0.0, M + 0.4, sample(pr.grid(), constant_field({1.0, 0.0, 0.0})));
    FAIL() << "expected LambdaTooSmall";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LambdaTooSmall);
  }
}

TEST(ResolventQuadrature, NodesStartGeometricallyThenUniform) {
  QuadratureSettings qs;
  const auto nodes = detail::quadrature_nodes(0.01, 1.0, qs);
  EXPECT_EQ(nodes.front(), 0.0);
  EXPECT_NEAR(nodes[2] / nodes[1], 1.0 / qs.rho, 1e-12);
  EXPECT_LT(nodes[1], 0.01 * qs.depth / qs.rho + 1e-18);
  EXPECT_DOUBLE_EQ(nodes.back(), 1.0);
  EXPECT_NEAR(nodes[nodes.size() - 1] - nodes[nodes.size() - 2], 0.01, 1e-12);
}

TEST(EllipticDirect, ZeroDataGivesZero) {
  const auto pb = load_preset("example1-d1m2").problem();
  const auto r = elliptic_direct(pb.op, 0.3, 3.0, GridFunction(pb.grid, 2));
  EXPECT_EQ(sup_norm(r.u), 0.0);
}

TEST(EllipticDirect, GreenFunctionOfHeat) {
  OperatorFamily op(1, 1);
  op.set_q(0, 0, 0, CoefficientExpr(1.0));
  const UniformGrid g(BoxDomain(15.0, 1), 1201);
  const Field f{1, [](int, std::span<const double> x) { return std::exp(-0.5 * x[0] * x[0]); }};
  const auto u = elliptic_direct(op, 0.0, 1.0, sample(g, f)).u;
  double err = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) err = std::max(err, std::abs(u(0, p) - green_convolution(g.coords(p)[0], 1.0)));
  EXPECT_LT(err, 1e-3);
}

TEST(ResolventAgreement, Example1BothLambdas) {
  const auto pb = load_preset("example1-d1m2").problem();
  const auto f = random_datum(pb.grid, 2, 3);
  const double M = frozen_row_sum_bound(pb.op, 0.0, pb.grid);
  for (double lambda : {M + 1.0, M + 5.0}) {
    const auto rep = check_resolvent_agreement(pb, 0.0, lambda, f);
    EXPECT_TRUE(rep.pass()) << rep.binding()->name << " = " << rep.worst_violation();
  }
}

TEST(ResolventAgreement, Homogeneity) {
  const auto pb = load_preset("example2-gamma0").problem();
  const auto f = random_datum(pb.grid, 3, 4);
  for (auto m : {ResolventMethod::Quadrature, ResolventMethod::Direct}) {
    const auto a = resolvent(m, pb.op, 0.0, 2.5, f).u;
    const auto b = resolvent(m, pb.op, 0.0, 2.5, 2.0 * f).u;
    EXPECT_EQ(sup_norm(b - 2.0 * a), 0.0) << to_string(m);
  }
}

TEST(ResolventIdentity, EqualArgumentsVanish) {
  const auto pb = load_preset("heat-scalar").problem();
  const auto rep = check_resolvent_identity(pb, 0.0, 2.0, 2.0, random_datum(pb.grid, 1, 5));
  EXPECT_EQ(rep.criteria.front().value, 0.0);
  EXPECT_TRUE(rep.pass());
}

TEST(ResolventIdentity, Example1) {
  const auto pb = load_preset("example1-d1m2").problem();
  const double M = frozen_row_sum_bound(pb.op, 0.0, pb.grid);
  const auto rep = check_resolvent_identity(pb, 0.0, 2.0 * M + 1.0, 2.0 * M + 3.0, random_datum(pb.grid, 2, 6));
  EXPECT_TRUE(rep.pass()) << rep.binding()->name << " = " << rep.worst_violation();
  EXPECT_LT(rep.measured.at("direct_identity_residual"), 1e-10);
}

TEST(ResolventIdentity, ConstantCoefficientsDirectIsExact) {
  Eigen::MatrixXd C0(2, 2);
  C0 << -1.0, 0.7, -0.4, -2.0;
  const Problem pb{"const", constant_coupling(C0), UniformGrid(BoxDomain(3.0, 1), 61), 0.0, 1.0, {}};
  const auto rep = check_resolvent_identity(pb, 0.0, 1.5, 4.0, random_datum(pb.grid, 2, 7));
  EXPECT_TRUE(rep.pass());
  EXPECT_LT(rep.measured.at("direct_identity_residual"), 1e-13);
}

TEST(ResolventBound, AbelianLimit) {
  const auto pb = load_preset("example2-gamma0").problem();
  const auto f = random_datum(pb.grid, 3, 8);
  double prev = INFINITY;
  for (double lambda : {10.0, 100.0, 1000.0}) {
    const double err = sup_norm(lambda * elliptic_direct(pb.op, 0.0, lambda, f).u - f);
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(ResolventBound, Example2) {
  const auto pb = load_preset("example2-gamma0").problem();
  const auto rep = check_resolvent_bound(pb, 0.0, std::sqrt(3.0), 10, 100);
  EXPECT_TRUE(rep.pass()) << rep.worst_violation();
  const auto q = check_resolvent_bound(pb, 0.0, std::sqrt(3.0), 3, 100, ResolventMethod::Quadrature);
  EXPECT_TRUE(q.pass()) << q.worst_violation();
}

TEST(ResolventBound, ConstantsAreSharp) {
  const auto op = constant_coupling(Eigen::MatrixXd::Zero(1, 1));
  const UniformGrid g(BoxDomain(3.0, 1), 61);
  const auto u = elliptic_direct(op, 0.0, 4.0, sample(g, constant_field({1.0}))).u;
  EXPECT_NEAR(sup_norm(u), 0.25, 1e-14);
}

TEST(Schauder, AutonomousTimeIndependentRatioIsConstantInTime) {
  const auto pb = load_preset("ou-scalar").problem();
  RandomFieldSpec spec;
  const auto f = random_smooth_field(spec, 9);
  const TimeField tf{1, [f](double, int k, std::span<const double> x) { return f.eval(k, x); }};
  SchauderSettings one, many;
  one.n_times = 1;
  many.n_times = 5;
  const auto a = elliptic_schauder_ratio(pb.op, tf, 2.0, 0.0, 1.0, pb.grid, pb.cfg, one);
  const auto b = elliptic_schauder_ratio(pb.op, tf, 2.0, 0.0, 1.0, pb.grid, pb.cfg, many);
  EXPECT_DOUBLE_EQ(a.ratio, b.ratio);
}

TEST(Schauder, ManufacturedEllipticSolution) {
  const auto pb = load_preset("example1-d1m2").problem();
  for (double t : {0.0, 0.6}) EXPECT_LT(manufactured_elliptic_error(pb, gaussian_profile(2), t, 2.0), 1e-3) << "t=" << t;
}

TEST(Schauder, Example1RatioIsRefinementStable) {
  const auto pb = load_preset("example1-d1m2").problem();
  RandomFieldSpec spec;
  spec.components = 2;
  const auto rep = schauder_experiment(pb, modulated(random_smooth_field(spec, 10)), 2.0);
  EXPECT_TRUE(rep.pass()) << rep.worst_violation();
  EXPECT_GT(rep.measured.at("ratio"), 0.0);
}

TEST(ParabolicSchauder, ZeroDataGiveZero) {
  const auto pb = load_preset("example1-d1m2").problem();
  const TimeField zero{2, [](double, int, std::span<const double>) { return 0.0; }};
  const auto r = parabolic_schauder_ratio(pb, constant_field({0.0, 0.0}), zero, {});
  EXPECT_EQ(r.ratio, 0.0);
  for (double q : r.quotients) EXPECT_EQ(q, 0.0);
}

TEST(ParabolicSchauder, ManufacturedSolution) {
  auto pb = load_preset("example1-d1m2").problem();
  pb.cfg.theta = 0.5;
  pb.cfg.dt = 0.005;
  EXPECT_LT(manufactured_parabolic_error(pb, gaussian_profile(2)), 1e-3);
}

TEST(ParabolicSchauder, Example1StableRatioAndTimeModulus) {
  const auto pb = load_preset("example1-d1m2").problem();
  RandomFieldSpec spec;
  spec.components = 2;
  spec.window = 4.0;
  const auto f = random_smooth_field(spec, 11);
  const auto g = modulated(random_smooth_field(spec, 12));
  const auto rep = parabolic_schauder_experiment(pb, f, g);
  EXPECT_TRUE(rep.pass()) << rep.binding()->name << " = " << rep.worst_violation();
}

TEST(InterpolationInequality, ConstantsGiveRatioOne) {
  const auto op = constant_coupling(Eigen::MatrixXd::Zero(1, 1));
  const auto f = sample(UniformGrid(BoxDomain(3.0, 1), 61), constant_field({2.5}));
  for (double theta : {0.5, 1.5}) EXPECT_DOUBLE_EQ(interpolation_ratio(op, 0.0, theta, f, PairCap::physical(0.5)), 1.0);
}

TEST(InterpolationInequality, ScalingInvariance) {
  const auto pb = load_preset("example1-d1m2").problem();
  const auto f = elliptic_direct(pb.op, 0.0, 3.0, random_datum(pb.grid, 2, 13)).u;
  const auto cap = PairCap::physical(0.5);
  EXPECT_NEAR(interpolation_ratio(pb.op, 0.0, 0.7, 2.0 * f, cap), interpolation_ratio(pb.op, 0.0, 0.7, f, cap), 1e-12);
}

TEST(InterpolationInequality, ResolventImagesAreBounded) {
  const auto pb = load_preset("example1-d1m2").problem();
  for (double theta : {0.5, 1.5}) {
    const auto rep = check_interpolation_inequality(pb, 0.0, theta, 3.0);
    EXPECT_TRUE(rep.pass()) << "theta=" << theta << " change " << rep.worst_violation();
    EXPECT_TRUE(std::isfinite(rep.measured.at("max_ratio")));
  }
}
