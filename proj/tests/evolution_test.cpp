#include <gtest/gtest.h>

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "wcsys/evolution.hpp"
#include "wcsys/presets.hpp"
#include "wcsys/random_field.hpp"
#include "wcsys/stencil.hpp"

using namespace wcsys;

namespace {

OperatorFamily heat(int d = 1) {
  OperatorFamily op(d, 1);
  for (int i = 0; i < d; ++i) op.set_q(0, i, i, CoefficientExpr(1.0));
  return op;
}

GridFunction sample1(const UniformGrid& g, std::function<double(double)> f) {
  return sample(g, Field{1, [f](int, std::span<const double> x) { return f(x[0]); }});
}

double sup_on(const GridFunction& u, double radius) {
  double s = 0.0;
  for (int k = 0; k < u.components(); ++k)
    for (std::size_t p = 0; p < u.points(); ++p)
      if (u.grid().box_norm(p) <= radius + 1e-12) s = std::max(s, std::abs(u(k, p)));
  return s;
}

GridFunction random_datum(const UniformGrid& g, int m, std::uint64_t seed) {
  RandomFieldSpec spec;
  spec.components = m;
  spec.dim = g.dim();
  return sample(g, random_smooth_field(spec, seed));
}

}  // namespace

TEST(Step, HeatImplicitEulerDoesNotIncreaseSup) {
  UniformGrid g(BoxDomain(2.0, 1), 81);
  const auto u = sample1(g, [](double x) { return std::sin(std::numbers::pi * x / 2.0) + 1.0; });
  Evolver ev(heat(), g, {});
  const auto v = ev.step(0.0, 0.05, u, nullptr, 1.0);
  EXPECT_LE(sup_norm(v), sup_norm(u) + 1e-14);
}

TEST(Step, ConstantsInvariantWithoutCoupling) {
  const auto op = make_preset("example1-d1m2").op.without_coupling();
  UniformGrid g(BoxDomain(4.0, 1), 41);
  const auto u = sample(g, constant_field({2.0, -3.0}));
  Evolver ev(op, g, {});
  const auto v = ev.step(0.3, 0.1, u, nullptr, 1.0);
  EXPECT_LT(sup_norm(v - u), 1e-12);
}

TEST(Step, Example2KernelVectorIsFixed) {
  const auto pr = load_preset("example2-gamma0");
  const double s3 = std::sqrt(3.0);
  const auto eta = sample(pr.grid(), constant_field({-s3, 1.0, s3}));
  Evolver ev(pr.op, pr.grid(), pr.cfg);
  StepDiagnostics diag;
  const auto v = ev.step(0.0, 0.01, eta, nullptr, 1.0, &diag);
  EXPECT_LT(sup_norm(v - eta), 1e-9);
  EXPECT_LE(diag.residual, pr.cfg.linear_tol);
}

TEST(Step, EllipticityViolationIsReported) {
  OperatorFamily op(1, 1);
  op.set_q(0, 0, 0, CoefficientExpr(1.0, 0.0, TimeFactor::sinusoidal(1.0, 1.0, -std::numbers::pi / 2)));
  UniformGrid g(BoxDomain(1.0, 1), 11);
  try {
    solve_cauchy(op, 0.0, 0.1, GridFunction(g, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EllipticityViolated);
  }
}

TEST(SolveCauchy, ZeroDatumStaysZero) {
  const auto pr = load_preset("example1-d1m2");
  const auto res = solve_cauchy(pr.op, 0.0, 0.5, GridFunction(pr.grid(), 2), pr.cfg, {0.25});
  for (const auto& u : res.snapshots) EXPECT_EQ(sup_norm(u), 0.0);
  EXPECT_EQ(res.times.size(), 3u);
}

TEST(SolveCauchy, HeatKernelOracle) {
  UniformGrid g(BoxDomain(8.0, 1), 401);
  const double sigma = 0.5, t = 0.1;
  const auto f = sample1(g, [&](double x) { return std::exp(-x * x / (2 * sigma * sigma)); });
  const auto res = solve_cauchy(heat(), 0.0, t, f);
  const double var = sigma * sigma + 2.0 * t;
  const auto exact = sample1(g, [&](double x) { return sigma / std::sqrt(var) * std::exp(-x * x / (2 * var)); });
  EXPECT_LT(sup_on(res.final() - exact, 4.0), 1e-3);
}

TEST(SolveCauchy, OrnsteinUhlenbeckOnLinearData) {
  const auto pr = load_preset("ou-scalar");
  const auto f = sample1(pr.grid(), [](double x) { return x; });
  SolverConfig cfg;
  cfg.theta = 0.5;
  const auto res = solve_cauchy(pr.op, 0.0, 1.0, f, cfg, {0.5});
  for (double t : {0.5, 1.0}) {
    const auto exact = sample1(pr.grid(), [&](double x) { return std::exp(-t) * x; });
    EXPECT_LT(sup_on(res.at(t) - exact, 3.0), 1e-3) << "t=" << t;
  }
}

TEST(SolveCauchy, ConstantCouplingMatchesMatrixExponential) {
  Eigen::Matrix2d C;
  C << -1.0, 0.7, -0.4, -2.0;
  OperatorFamily op(1, 2);
  for (int k = 0; k < 2; ++k) {
    op.set_q(k, 0, 0, CoefficientExpr(1.0 + k));
    op.set_b(k, 0, CoefficientExpr(-1.0, 0.0, {}, 0));
    for (int h = 0; h < 2; ++h) op.set_c(k, h, CoefficientExpr(C(k, h)));
  }
  UniformGrid g(BoxDomain(3.0, 1), 61);
  const Eigen::Vector2d f0(1.0, -0.5);
  SolverConfig cfg;
  cfg.theta = 0.5;
  cfg.dt = 1e-3;
  const auto res = solve_cauchy(op, 0.0, 1.0, sample(g, constant_field({f0(0), f0(1)})), cfg);
  const Eigen::Vector2d exact = (Eigen::Matrix2d(C)).exp() * f0;
  for (std::size_t p = 0; p < g.size(); ++p)
    for (int k = 0; k < 2; ++k) EXPECT_NEAR(res.final()(k, p), exact(k), 1e-6);
}

TEST(SolveCauchy, CrankNicolsonIsSecondOrderInTime) {
  UniformGrid g(BoxDomain(8.0, 1), 201);
  const auto f = sample1(g, [](double x) { return std::exp(-x * x); });
  auto run = [&](double dt) {
    SolverConfig cfg;
    cfg.theta = 0.5;
    cfg.dt = dt;
    return solve_cauchy(heat(), 0.0, 0.5, f, cfg).final();
  };
  const auto ref = run(0.0025);
  const double e1 = sup_norm(run(0.04) - ref), e2 = sup_norm(run(0.02) - ref);
  EXPECT_GT(e1 / e2, 3.0);
}

TEST(SolveFrozen, AutonomousMatchesCauchyExactly) {
  const auto pr = load_preset("example2-gamma0");
  const auto f = random_datum(pr.grid(), 3, 4);
  const auto a = solve_cauchy(pr.op, 0.0, 0.5, f, pr.cfg, {0.2});
  const auto b = solve_frozen(pr.op, 0.0, 0.5, f, pr.cfg, {0.2});
  ASSERT_EQ(a.snapshots.size(), b.snapshots.size());
  for (std::size_t i = 0; i < a.snapshots.size(); ++i) EXPECT_EQ(a.snapshots[i].data(), b.snapshots[i].data());
}

TEST(SolveFrozen, SemigroupLaw) {
  const auto pr = load_preset("example1-d1m2");
  const auto f = random_datum(pr.grid(), 2, 8);
  SolverConfig cfg = pr.cfg;
  cfg.dt = 0.01;
  const double tbar = 0.4, t1 = 0.237, t2 = 0.3;
  const auto whole = solve_frozen(pr.op, tbar, t1 + t2, f, cfg).final();
  const auto part = solve_frozen(pr.op, tbar, t1, f, cfg).final();
  const auto comp = solve_frozen(pr.op, tbar, t2, part, cfg).final();
  EXPECT_LT(sup_norm(whole - comp), 2.0 * *cfg.dt * 10.0 * sup_norm(f));
}

TEST(SolveFrozen, Example2KernelVectorForAllTau) {
  const auto pr = load_preset("example2-gamma0");
  const double s3 = std::sqrt(3.0);
  const auto eta = sample(pr.grid(), constant_field({-s3, 1.0, s3}));
  const auto res = solve_frozen(pr.op, 0.0, 2.0, eta, pr.cfg, {0.1, 0.5, 1.0});
  for (const auto& u : res.snapshots) EXPECT_LT(sup_norm(u - eta), 1e-8);
}

TEST(Invariants, PositivityOfScalarEvolution) {
  auto op = make_preset("example1-d1m2").op.component(0, true);
  const auto g = UniformGrid(BoxDomain(8.0, 1), 401);
  const auto f = sample1(g, [](double x) { return std::abs(x) < 1.0 ? 1.0 : 0.0; });
  const auto res = solve_cauchy(op, 0.0, 1.0, f, {}, {0.1, 0.5});
  for (const auto& u : res.snapshots)
    for (double v : u.data()) EXPECT_GE(v, -1e-12);
}

TEST(Invariants, Linearity) {
  const auto pr = load_preset("example1-d1m2");
  const auto f = random_datum(pr.grid(), 2, 1), g = random_datum(pr.grid(), 2, 2);
  const double a = 1.7, b = -0.4;
  const auto uf = solve_cauchy(pr.op, 0.0, 0.5, f, pr.cfg).final();
  const auto ug = solve_cauchy(pr.op, 0.0, 0.5, g, pr.cfg).final();
  const auto u = solve_cauchy(pr.op, 0.0, 0.5, a * f + b * g, pr.cfg).final();
  EXPECT_LT(sup_norm(u - (a * uf + b * ug)), 1e-9);
}

TEST(Invariants, IterativeSolverInTwoDimensions) {
  const auto pr = load_preset("example1-d2m2");
  UniformGrid g(pr.domain, 41);
  const auto f = random_datum(g, 2, 3);
  const auto res = solve_cauchy(pr.op, 0.0, 0.2, f, pr.cfg);
  EXPECT_LE(res.max_residual(), pr.cfg.linear_tol);
  EXPECT_TRUE(res.final().all_finite());
}

TEST(ExpandingDomain, LocalizedDatumShortHorizon) {
  const auto pr = load_preset("ou-scalar");
  const Field f{1, [](int, std::span<const double> x) { return std::exp(-20.0 * x[0] * x[0]); }};
  const auto study = expanding_domain_study(pr.op, 0.0, 0.01, f, {3.0, 4.0, 5.0}, BoxDomain(1.0, 1), 0.025, {});
  ASSERT_EQ(study.rows.size(), 2u);
  for (const auto& row : study.rows) EXPECT_LT(row.sup_difference, 1e-8);
}

TEST(ExpandingDomain, SingleRadiusIsVacuous) {
  const auto pr = load_preset("ou-scalar");
  const auto study = expanding_domain_study(pr.op, 0.0, 0.5, constant_field({1.0}), {4.0}, BoxDomain(1.0, 1), 0.05, {});
  EXPECT_TRUE(study.rows.empty());
  EXPECT_TRUE(study.pass);
}

TEST(ExpandingDomain, Example1DifferencesDecrease) {
  const auto pr = load_preset("example1-d1m2");
  RandomFieldSpec spec;
  spec.components = 2;
  const auto f = random_smooth_field(spec, 21);
  const auto study = expanding_domain_study(pr.op, 0.0, 0.5, f, {4.0, 6.0, 8.0}, BoxDomain(2.0, 1), 0.04, pr.cfg);
  ASSERT_EQ(study.rows.size(), 2u);
  EXPECT_TRUE(study.pass);
  EXPECT_LT(study.rows[1].sup_difference, study.rows[0].sup_difference);
}

TEST(ExpandingDomain, InnerBoxMustBeInside) {
  const auto pr = load_preset("ou-scalar");
  EXPECT_THROW(expanding_domain_study(pr.op, 0.0, 0.1, constant_field({1.0}), {2.0, 3.0}, BoxDomain(2.0, 1), 0.05, {}), Error);
}
