#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "wcsys/grid.hpp"
#include "wcsys/operator.hpp"

namespace wcsys {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

namespace detail {

/// Flat index of the neighbor of p shifted by (da along axis a, dc along axis c),
/// reflected evenly across the faces (ghost value at -1 equals value at 1).
inline std::size_t reflected_neighbor(const UniformGrid& g, std::size_t p, int a, int da, int c = -1, int dc = 0) {
  const int n = g.points_per_axis();
  auto reflect = [n](int j) {
    if (j < 0) return -j;
    if (j > n - 1) return 2 * (n - 1) - j;
    return j;
  };
  long q = static_cast<long>(p);
  const int ia = g.index_along(p, a);
  q += static_cast<long>(reflect(ia + da) - ia) * static_cast<long>(g.stride(a));
  if (c >= 0) {
    const int ic = g.index_along(p, c);
    q += static_cast<long>(reflect(ic + dc) - ic) * static_cast<long>(g.stride(c));
  }
  return static_cast<std::size_t>(q);
}

}  // namespace detail

/// Sparse matrix of the discrete operator A(t) on the grid with Neumann
/// ghost reflection. Unknown (k, p) sits at row k*N + p.
///
/// Second derivatives use the standard three-point stencil; mixed
/// derivatives use the seven-point stencil whose orientation follows the sign
/// of q_ac so that off-diagonal weights stay nonnegative under diagonal
/// dominance. Drift is centered unless |b| h exceeds twice the effective
/// diffusion, in which case it is upwinded; either way the diffusion-drift
/// block has nonnegative off-diagonal entries and zero row sums. Radial
/// factors are computed once per grid point; assemble(t) only re-evaluates
/// the time profiles.
class OperatorAssembler {
 public:
  OperatorAssembler(OperatorFamily op, UniformGrid grid) : op_(std::move(op)), grid_(std::move(grid)) {
    require(grid_.dim() == op_.dim(), ErrorKind::InvalidArgument, "grid and operator dimensions differ");
    require(grid_.points_per_axis() >= 5, ErrorKind::GridTooCoarse, "grid needs at least 5 points per axis");
    const int d = op_.dim(), m = op_.components();
    nq_ = m * d * d;
    nb_ = m * d;
    for (int k = 0; k < m; ++k)
      for (int a = 0; a < d; ++a)
        for (int c = 0; c < d; ++c) exprs_.push_back(op_.q(k, a, c));
    for (int k = 0; k < m; ++k)
      for (int a = 0; a < d; ++a) exprs_.push_back(op_.b(k, a));
    for (int k = 0; k < m; ++k)
      for (int j = 0; j < m; ++j) exprs_.push_back(op_.c(k, j));
    const std::size_t n = exprs_.size(), N = grid_.size();
    coords_.resize(N * static_cast<std::size_t>(d));
    index_.resize(N * static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) stride_.push_back(static_cast<long>(grid_.stride(a)));
    radial_.resize(N * n);
    for (std::size_t p = 0; p < N; ++p) {
      const std::span<double> x(&coords_[p * static_cast<std::size_t>(d)], static_cast<std::size_t>(d));
      grid_.coords(p, x);
      for (int a = 0; a < d; ++a) index_[p * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] = grid_.index_along(p, a);
      for (std::size_t i = 0; i < n; ++i)
        if (!expr(static_cast<int>(i)).is_zero()) radial_[p * n + i] = expr(static_cast<int>(i)).radial_factor(x);
    }
  }

  const OperatorFamily& op() const { return op_; }
  const UniformGrid& grid() const { return grid_; }

  SparseMatrix assemble(double t) const {
    const OperatorFamily& op = op_;
    const UniformGrid& grid = grid_;
    const int d = op.dim();
    const int m = op.components();
    const std::size_t N = grid.size();
    const double h = grid.spacing();
    const double h2 = h * h;
    const std::size_t per_row = static_cast<std::size_t>(1 + 2 * d + 2 * d * (d - 1) + m);
    const int n = nq_ + nb_ + m * m;
    std::vector<double> tv(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) tv[static_cast<std::size_t>(i)] = expr(i).time_value(t);
    auto value = [&](int i, std::size_t p) {
      return expr(i).value_from(tv[static_cast<std::size_t>(i)], radial_[p * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)], point(p));
    };
    // Coupling matrices per point, so rows can be emitted in order.
    std::vector<double> coupling(N * static_cast<std::size_t>(m * m));
    Eigen::MatrixXd C(m, m);
    for (std::size_t p = 0; p < N; ++p) {
      for (int k = 0; k < m; ++k)
        for (int j = 0; j < m; ++j) C(k, j) = value(nq_ + nb_ + k * m + j, p);
      op.apply_mode(C);
      for (int k = 0; k < m; ++k)
        for (int j = 0; j < m; ++j) coupling[(p * static_cast<std::size_t>(m) + static_cast<std::size_t>(k)) * static_cast<std::size_t>(m) + static_cast<std::size_t>(j)] = C(k, j);
    }
    SparseMatrix A(static_cast<long>(N) * m, static_cast<long>(N) * m);
    A.reserve(static_cast<long>(N * static_cast<std::size_t>(m) * per_row));
    std::vector<std::pair<long, double>> entries;
    entries.reserve(per_row * 2);
    Eigen::MatrixXd Q(d, d);
    Eigen::VectorXd b(d);
    for (int k = 0; k < m; ++k) {
      const long base = static_cast<long>(static_cast<std::size_t>(k) * N);
      for (std::size_t p = 0; p < N; ++p) {
        const long row = base + static_cast<long>(p);
        entries.clear();
        // Duplicate columns are summed in insertion order.
        auto put = [&](long col, double w) {
          for (auto& e : entries)
            if (e.first == col) {
              e.second += w;
              return;
            }
          entries.emplace_back(col, w);
        };
        auto add = [&](std::size_t q, double w) { put(base + static_cast<long>(q), w); };
        for (int a = 0; a < d; ++a) {
          for (int c = 0; c < d; ++c) Q(a, c) = value((k * d + a) * d + c, p);
          b(a) = value(nq_ + k * d + a, p);
        }
        double diag = 0.0;
        for (int a = 0; a < d; ++a) {
          const double w = Q(a, a) / h2;
          add(neighbor(p, a, +1), w);
          add(neighbor(p, a, -1), w);
          diag -= 2.0 * w;
          double qeff = Q(a, a);
          for (int c = 0; c < d; ++c)
            if (c != a) qeff -= std::abs(Q(a, c));
          const double ba = b(a);
          if (ba == 0.0) continue;
          if (std::abs(ba) * h <= 2.0 * qeff) {
            add(neighbor(p, a, +1), ba / (2.0 * h));
            add(neighbor(p, a, -1), -ba / (2.0 * h));
          } else if (ba > 0.0) {
            add(neighbor(p, a, +1), ba / h);
            diag -= ba / h;
          } else {
            add(neighbor(p, a, -1), -ba / h);
            diag += ba / h;
          }
        }
        for (int a = 0; a < d; ++a)
          for (int c = a + 1; c < d; ++c) {
            const double qac = Q(a, c);
            if (qac == 0.0) continue;
            const double w = std::abs(qac) / h2;
            const int s = qac > 0.0 ? 1 : -1;
            add(neighbor(p, a, +1, c, s), w);
            add(neighbor(p, a, -1, c, -s), w);
            add(neighbor(p, a, +1), -w);
            add(neighbor(p, a, -1), -w);
            add(neighbor(p, c, +1), -w);
            add(neighbor(p, c, -1), -w);
            diag += 2.0 * w;
          }
        add(p, diag);
        const double* Ck = &coupling[(p * static_cast<std::size_t>(m) + static_cast<std::size_t>(k)) * static_cast<std::size_t>(m)];
        for (int j = 0; j < m; ++j)
          if (Ck[j] != 0.0) put(static_cast<long>(static_cast<std::size_t>(j) * N + p), Ck[j]);
        std::sort(entries.begin(), entries.end());
        A.startVec(row);
        for (const auto& [col, v] : entries) A.insertBack(row, col) = v;
      }
    }
    A.finalize();
    return A;
  }

 private:
  // Same as detail::reflected_neighbor with the axis indices of p cached.
  std::size_t neighbor(std::size_t p, int a, int da, int c = -1, int dc = 0) const {
    const int n = grid_.points_per_axis();
    const int* idx = &index_[p * static_cast<std::size_t>(op_.dim())];
    auto shift = [n](int i, int di) {
      int j = i + di;
      if (j < 0) j = -j;
      if (j > n - 1) j = 2 * (n - 1) - j;
      return static_cast<long>(j - i);
    };
    long q = static_cast<long>(p) + shift(idx[a], da) * stride_[static_cast<std::size_t>(a)];
    if (c >= 0) q += shift(idx[c], dc) * stride_[static_cast<std::size_t>(c)];
    return static_cast<std::size_t>(q);
  }

  const CoefficientExpr& expr(int i) const { return exprs_[static_cast<std::size_t>(i)]; }
  std::span<const double> point(std::size_t p) const {
    const std::size_t d = static_cast<std::size_t>(op_.dim());
    return {&coords_[p * d], d};
  }

  OperatorFamily op_;
  UniformGrid grid_;
  int nq_ = 0, nb_ = 0;
  std::vector<CoefficientExpr> exprs_;  ///< q, then b, then c
  std::vector<double> coords_;
  std::vector<int> index_;  ///< grid index along each axis per point
  std::vector<long> stride_;
  std::vector<double> radial_;  ///< (1 + |x|^2)^power per point and coefficient
};

inline SparseMatrix assemble_operator(const OperatorFamily& op, double t, const UniformGrid& grid) {
  return OperatorAssembler(op, grid).assemble(t);
}

inline Eigen::Map<const Eigen::VectorXd> as_vector(const GridFunction& u) {
  return {u.data().data(), static_cast<long>(u.data().size())};
}

inline GridFunction from_vector(const UniformGrid& grid, int m, const Eigen::VectorXd& v) {
  GridFunction out(grid, m);
  Eigen::Map<Eigen::VectorXd>(out.data().data(), v.size()) = v;
  return out;
}

/// Discrete A(t)u.
inline GridFunction apply_operator(const OperatorFamily& op, double t, const GridFunction& u) {
  require(u.components() == op.components(), ErrorKind::InvalidArgument, "component count mismatch");
  const auto A = assemble_operator(op, t, u.grid());
  const Eigen::VectorXd v = A * as_vector(u);
  return from_vector(u.grid(), u.components(), v);
}

/// Smallest eigenvalue of Q^k over the grid at time t, with its location.
inline std::pair<double, Witness> min_ellipticity(const OperatorFamily& op, double t, const UniformGrid& grid) {
  double best = std::numeric_limits<double>::infinity();
  Witness w;
  std::vector<double> x(static_cast<std::size_t>(grid.dim()));
  for (std::size_t p = 0; p < grid.size(); ++p) {
    grid.coords(p, x);
    for (int k = 0; k < op.components(); ++k) {
      const Eigen::MatrixXd Q = op.diffusion(k, t, x);
      const double mu = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Q, Eigen::EigenvaluesOnly).eigenvalues()(0);
      if (mu < best) {
        best = mu;
        w = {t, x, k};
      }
    }
  }
  return {best, w};
}

}  // namespace wcsys
