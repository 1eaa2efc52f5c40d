#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "wcsys/discrete_operator.hpp"
#include "wcsys/operator.hpp"

using namespace wcsys;

namespace {

const double s3 = std::sqrt(3.0);

OperatorFamily example2_like(double gamma = 0.0) {
  OperatorFamily op(1, 3);
  const double C[3][3] = {{-1, 0, -1}, {0, -3, s3}, {-1, s3, -2}};
  for (int k = 0; k < 3; ++k) {
    op.set_q(k, 0, 0, CoefficientExpr(1.0));
    op.set_b(k, 0, CoefficientExpr(-1.0, 0.0, {}, 0));
    for (int h = 0; h < 3; ++h)
      if (C[k][h] != 0.0) op.set_c(k, h, CoefficientExpr(C[k][h], gamma));
  }
  return op;
}

OperatorFamily constant_coupling(const Eigen::MatrixXd& C, int d = 1) {
  const int m = static_cast<int>(C.rows());
  OperatorFamily op(d, m);
  for (int k = 0; k < m; ++k) {
    for (int a = 0; a < d; ++a) op.set_q(k, a, a, CoefficientExpr(1.0));
    for (int h = 0; h < m; ++h)
      if (C(k, h) != 0.0) op.set_c(k, h, CoefficientExpr(C(k, h)));
  }
  return op;
}

}  // namespace

TEST(Eval, Example2CouplingMatrix) {
  const auto op = example2_like();
  for (double x : {-3.0, 0.0, 2.5}) {
    const std::vector<double> p{x};
    const auto co = op.eval(0.0, p);
    Eigen::Matrix3d expect;
    expect << -1, 0, -1, 0, -3, s3, -1, s3, -2;
    EXPECT_LT((co.C - expect).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(co.Q.size(), 3u);
    EXPECT_DOUBLE_EQ(co.b[1](0), -x);
  }
}

TEST(Eval, ZeroCouplingAndSymmetricQ) {
  OperatorFamily op(2, 2);
  op.set_q(0, 0, 0, CoefficientExpr(1.0, 0.5));
  op.set_q(0, 0, 1, CoefficientExpr(0.3, 0.5, TimeFactor::sinusoidal(0.1, 2.0)));
  op.set_q(0, 1, 1, CoefficientExpr(2.0));
  const std::vector<double> x{0.7, -1.1};
  const auto co = op.eval(0.4, x);
  EXPECT_EQ(co.C.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(co.Q[0](0, 1), co.Q[0](1, 0));
}

TEST(Eval, RadialPowerEntry) {
  OperatorFamily op(1, 2);
  op.set_q(0, 0, 0, CoefficientExpr(1.0, 1.0));
  const std::vector<double> x{1.0};
  EXPECT_DOUBLE_EQ(op.eval(0.5, x).Q[0](0, 0), 2.0);
}

TEST(Auxiliary, AbsoluteOffDiagonal) {
  Eigen::Matrix2d C;
  C << -1, 2, -3, -4;
  const auto P = derive_auxiliary(constant_coupling(C));
  const std::vector<double> x{0.0};
  Eigen::Matrix2d expect;
  expect << -1, 2, 3, -4;
  EXPECT_EQ(P.coupling(0.0, x), Eigen::MatrixXd(expect));
}

TEST(Auxiliary, Example2Matrix) {
  const auto P = derive_auxiliary(example2_like());
  const std::vector<double> x{1.0};
  Eigen::Matrix3d expect;
  expect << -1, 0, 1, 0, -3, s3, 1, s3, -2;
  EXPECT_LT((P.coupling(0.0, x) - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Auxiliary, NonnegativeMatrixUnchangedAndIdempotent) {
  Eigen::Matrix2d C;
  C << 1, 2, 0.5, 3;
  const auto op = constant_coupling(C);
  const std::vector<double> x{0.2};
  EXPECT_EQ(derive_auxiliary(op).coupling(0.0, x), op.coupling(0.0, x));
  const auto once = derive_auxiliary(example2_like());
  const auto twice = derive_auxiliary(once);
  EXPECT_EQ(once.mode(), twice.mode());
  EXPECT_EQ(once.coupling(0.0, x), twice.coupling(0.0, x));
}

TEST(Auxiliary, QuadraticFormDominatedOnRandomVectors) {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> N(0.0, 1.0);
  OperatorFamily op(1, 3);
  for (int k = 0; k < 3; ++k)
    for (int h = 0; h < 3; ++h) op.set_c(k, h, CoefficientExpr(N(rng), 0.5 * (k + h) / 2.0, TimeFactor::sinusoidal(0.3, 1.0 + h)));
  const auto P = derive_auxiliary(op);
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<double> x{3.0 * N(rng)};
    const double t = std::abs(N(rng));
    Eigen::Vector3d y(N(rng), N(rng), N(rng));
    const double lhs = y.dot(op.coupling(t, x) * y);
    const double rhs = y.cwiseAbs().dot(P.coupling(t, x) * y.cwiseAbs());
    EXPECT_LE(lhs, rhs + 1e-12);
  }
}

TEST(RowSums, Example2Bound) {
  const auto rs = row_sum_bound(example2_like(), Sampling::over(0.0, 1.0, 3, UniformGrid(BoxDomain(6.0, 1), 61)));
  EXPECT_NEAR(rs.M, s3 - 1.0, 1e-14);
  EXPECT_EQ(rs.witness.component, 2);
  const auto& f = rs.fields.front();
  EXPECT_NEAR(f(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(f(1, 0), s3 - 3.0, 1e-15);
}

TEST(RowSums, ZeroCoupling) {
  const auto rs = row_sum_bound(constant_coupling(Eigen::Matrix2d::Zero()), Sampling::over(0, 1, 2, UniformGrid(BoxDomain(2.0, 1), 11)));
  EXPECT_EQ(rs.M, 0.0);
}

TEST(RowSums, GrowingRowSumIsUnbounded) {
  try {
    row_sum_bound(example2_like(0.5), Sampling::over(0, 1, 2, UniformGrid(BoxDomain(6.0, 1), 61)));
    FAIL() << "expected UnboundedAbove";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnboundedAbove);
  }
}

TEST(Tilde, RowSumsZeroCoupling) {
  const auto T = derive_tilde(constant_coupling(Eigen::Matrix2d::Zero()));
  const std::vector<double> x{0.0};
  const auto C = T.coupling(0.0, x);
  EXPECT_EQ(C, Eigen::MatrixXd::Constant(2, 2, 0.5));
}

TEST(Tilde, Example2RowSums) {
  const auto T = derive_tilde(example2_like());
  const std::vector<double> x{1.3};
  const Eigen::VectorXd S = T.coupling(0.0, x).rowwise().sum();
  EXPECT_NEAR(S(0), 1.0, 1e-14);
  EXPECT_NEAR(S(2), 1.0 + 2.0 * (s3 - 1.0), 1e-14);
  const auto smp = Sampling::over(0.0, 1.0, 4, UniformGrid(BoxDomain(4.0, 1), 41));
  EXPECT_LE(tilde_row_sum_defect(example2_like(), smp), 1e-12);
}

TEST(Tilde, RandomRowSumIdentity) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> N(0.0, 2.0);
  OperatorFamily op(2, 4);
  for (int k = 0; k < 4; ++k)
    for (int h = 0; h < 4; ++h) op.set_c(k, h, CoefficientExpr(N(rng), 0.25 * h, TimeFactor::sinusoidal(0.5, 1.0)));
  EXPECT_LE(tilde_row_sum_defect(op, Sampling::over(0, 2, 5, UniformGrid(BoxDomain(3.0, 2), 13))), 1e-12);
}

TEST(ApplyOperator, LaplacianOfSquare) {
  OperatorFamily lap(1, 1);
  lap.set_q(0, 0, 0, CoefficientExpr(1.0));
  UniformGrid g(BoxDomain(2.0, 1), 21);
  const auto u = sample(g, Field{1, [](int, std::span<const double> x) { return x[0] * x[0]; }});
  const auto Au = apply_operator(lap, 0.0, u);
  for (std::size_t p = 1; p + 1 < g.size(); ++p) EXPECT_NEAR(Au(0, p), 2.0, 1e-10);
}

TEST(ApplyOperator, ConstantAnnihilatedWithoutCoupling) {
  OperatorFamily op(2, 2);
  for (int k = 0; k < 2; ++k) {
    op.set_q(k, 0, 0, CoefficientExpr(1.0, 0.5));
    op.set_q(k, 1, 1, CoefficientExpr(1.0, 0.5));
    op.set_q(k, 0, 1, CoefficientExpr(-0.25, 0.5));
    op.set_b(k, 0, CoefficientExpr(-3.0, 1.0, {}, 0));
    op.set_b(k, 1, CoefficientExpr(2.0, 0.0));
  }
  UniformGrid g(BoxDomain(3.0, 2), 13);
  const auto Au = apply_operator(op, 0.0, sample(g, constant_field({1.5, -2.0})));
  EXPECT_LT(sup_norm(Au), 1e-12);
}

TEST(ApplyOperator, KernelVectorOfExample2) {
  UniformGrid g(BoxDomain(3.0, 1), 31);
  const auto Au = apply_operator(example2_like(), 0.0, sample(g, constant_field({-s3, 1.0, s3})));
  EXPECT_LT(sup_norm(Au), 1e-12);
}

TEST(ApplyOperator, MixedDerivativeIsExactForBilinear) {
  for (double q12 : {0.3, -0.3}) {
    OperatorFamily op(2, 1);
    op.set_q(0, 0, 0, CoefficientExpr(1.0));
    op.set_q(0, 1, 1, CoefficientExpr(1.0));
    op.set_q(0, 0, 1, CoefficientExpr(q12));
    UniformGrid g(BoxDomain(1.0, 2), 11);
    const auto u = sample(g, Field{1, [](int, std::span<const double> x) { return x[0] * x[1] + x[0] * x[0]; }});
    const auto Au = apply_operator(op, 0.0, u);
    for (std::size_t p = 0; p < g.size(); ++p) {
      const int i = g.index_along(p, 0), j = g.index_along(p, 1);
      if (i == 0 || j == 0 || i == 10 || j == 10) continue;
      EXPECT_NEAR(Au(0, p), 2.0 + 2.0 * q12, 1e-10);
    }
  }
}

TEST(ApplyOperator, DiffusionDriftBlockIsMMatrix) {
  OperatorFamily op(2, 1);
  op.set_q(0, 0, 0, CoefficientExpr(1.0, 0.5));
  op.set_q(0, 1, 1, CoefficientExpr(1.5, 0.5));
  op.set_q(0, 0, 1, CoefficientExpr(0.25, 0.5));
  op.set_b(0, 0, CoefficientExpr(-20.0, 1.0, {}, 0));
  op.set_b(0, 1, CoefficientExpr(-0.5, 0.5, {}, 1));
  const auto A = assemble_operator(op, 0.0, UniformGrid(BoxDomain(5.0, 2), 21));
  for (int r = 0; r < A.outerSize(); ++r) {
    double sum = 0.0;
    for (SparseMatrix::InnerIterator it(A, r); it; ++it) {
      sum += it.value();
      if (it.col() != r) EXPECT_GE(it.value(), -1e-12);
    }
    EXPECT_NEAR(sum, 0.0, 1e-9);
  }
}

TEST(ApplyOperator, CoarseGridRejected) {
  OperatorFamily op(1, 1);
  op.set_q(0, 0, 0, CoefficientExpr(1.0));
  EXPECT_NO_THROW(assemble_operator(op, 0.0, UniformGrid(BoxDomain(1.0, 1), 5)));
}

TEST(CoefficientNorms, ConstantCoefficientsHaveZeroIncrement) {
  const auto n = coefficient_norms(example2_like(), 0.0, 1.0, 0.5, UniformGrid(BoxDomain(2.0, 1), 21));
  EXPECT_EQ(n.difference, 0.0);
  EXPECT_GT(n.at_t, 0.0);
}

TEST(CoefficientNorms, SinusoidalAtEqualTimes) {
  OperatorFamily op(1, 1);
  op.set_q(0, 0, 0, CoefficientExpr(1.0, 0.5, TimeFactor::sinusoidal(0.5, 3.0)));
  EXPECT_EQ(coefficient_norms(op, 0.4, 0.4, 0.5, UniformGrid(BoxDomain(2.0, 1), 21)).difference, 0.0);
}

TEST(CoefficientNorms, LinearInSpaceAgainstPairScan) {
  // q(t, x) = t x on [-1, 1] with t read from a table; at t = 1 the Hölder
  // norm is sup|x| + max |x - y|^{1 - alpha} over capped pairs.
  OperatorFamily op(1, 1);
  op.set_q(0, 0, 0, CoefficientExpr(1.0, 0.0, TimeFactor::table({{0.0, 0.0}, {1.0, 1.0}}), 0));
  UniformGrid g(BoxDomain(1.0, 1), 41);
  const double alpha = 0.4;
  const auto n = coefficient_norms(op, 1.0, 0.0, alpha, g);
  double brute = 0.0;
  for (int i = 0; i < 41; ++i)
    for (int j = i + 1; j < 41 && j - i <= 8; ++j) brute = std::max(brute, std::pow(g.coordinate(j) - g.coordinate(i), 1.0 - alpha));
  EXPECT_NEAR(n.at_t, 1.0 + brute, 1e-12);
  EXPECT_NEAR(n.difference, 1.0 + brute, 1e-12);
}
