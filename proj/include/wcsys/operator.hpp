#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <string>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "wcsys/coefficient.hpp"
#include "wcsys/grid.hpp"
#include "wcsys/stencil.hpp"

namespace wcsys {

/// Which coupling matrix an operator family applies: C itself, C^P (absolute
/// values off the diagonal), or the shifted matrix with entries
/// c^P_kj + (1 + |M_k|)/m used by the derivative estimates.
enum class CouplingMode { Plain, Positive, Tilde };

/// Coefficients of the family at one (t, x).
struct Coefficients {
  std::vector<Eigen::MatrixXd> Q;
  std::vector<Eigen::VectorXd> b;
  Eigen::MatrixXd C;
};

/// Weakly coupled operator
///   (A(t)u)_k = Tr(Q^k D^2 u_k) + <b^k, grad u_k> + (C u)_k
/// with coefficients from the radial-power class.
class OperatorFamily {
 public:
  OperatorFamily() = default;
  OperatorFamily(int d, int m)
      : d_(d), m_(m),
        q_(static_cast<std::size_t>(m * d * d)),
        b_(static_cast<std::size_t>(m * d)),
        c_(static_cast<std::size_t>(m * m)) {
    require(d >= 1 && m >= 1, ErrorKind::InvalidArgument, "dimension and component count must be >= 1");
  }

  int dim() const { return d_; }
  int components() const { return m_; }
  CouplingMode mode() const { return mode_; }

  /// Sets q^k_ij and q^k_ji together, so Q^k is symmetric by construction.
  OperatorFamily& set_q(int k, int i, int j, CoefficientExpr e) {
    check_k(k);
    require(i >= 0 && i < d_ && j >= 0 && j < d_, ErrorKind::InvalidArgument, "diffusion index out of range");
    q_[qi(k, i, j)] = e;
    q_[qi(k, j, i)] = std::move(e);
    return *this;
  }
  OperatorFamily& set_b(int k, int i, CoefficientExpr e) {
    check_k(k);
    require(i >= 0 && i < d_, ErrorKind::InvalidArgument, "drift index out of range");
    require(!e.axis() || *e.axis() < d_, ErrorKind::InvalidArgument, "drift axis out of range");
    b_[static_cast<std::size_t>(k * d_ + i)] = std::move(e);
    return *this;
  }
  OperatorFamily& set_c(int k, int h, CoefficientExpr e) {
    check_k(k);
    check_k(h);
    c_[static_cast<std::size_t>(k * m_ + h)] = std::move(e);
    return *this;
  }

  const CoefficientExpr& q(int k, int i, int j) const { return q_[qi(k, i, j)]; }
  const CoefficientExpr& b(int k, int i) const { return b_[static_cast<std::size_t>(k * d_ + i)]; }
  const CoefficientExpr& c(int k, int h) const { return c_[static_cast<std::size_t>(k * m_ + h)]; }

  bool is_autonomous() const {
    auto aut = [](const auto& v) {
      return std::all_of(v.begin(), v.end(), [](const CoefficientExpr& e) { return e.is_zero() || e.is_autonomous(); });
    };
    return aut(q_) && aut(b_) && aut(c_);
  }

  bool has_tabulated_time() const {
    auto tab = [](const auto& v) {
      return std::any_of(v.begin(), v.end(), [](const CoefficientExpr& e) { return !e.is_zero() && e.time_factor().is_tabulated(); });
    };
    return tab(q_) || tab(b_) || tab(c_);
  }

  /// Coefficients with every time profile evaluated at t.
  OperatorFamily frozen(double t) const {
    OperatorFamily out = *this;
    for (auto& e : out.q_) e = e.frozen(t);
    for (auto& e : out.b_) e = e.frozen(t);
    for (auto& e : out.c_) e = e.frozen(t);
    return out;
  }

  OperatorFamily with_mode(CouplingMode mode) const {
    OperatorFamily out = *this;
    out.mode_ = mode;
    return out;
  }

  /// Same diffusion and drift, coupling removed.
  OperatorFamily without_coupling() const {
    OperatorFamily out = *this;
    for (auto& e : out.c_) e = CoefficientExpr::zero();
    out.mode_ = CouplingMode::Plain;
    return out;
  }

  /// Scalar operator Tr(Q^k D^2) + <b^k, grad> + c_kk acting on component k alone.
  OperatorFamily component(int k, bool keep_potential = true) const {
    check_k(k);
    OperatorFamily out(d_, 1);
    for (int i = 0; i < d_; ++i) {
      for (int j = 0; j < d_; ++j) out.q_[out.qi(0, i, j)] = q(k, i, j);
      out.b_[static_cast<std::size_t>(i)] = b(k, i);
    }
    if (keep_potential) out.c_[0] = c(k, k);
    return out;
  }

  Eigen::MatrixXd diffusion(int k, double t, std::span<const double> x) const {
    Eigen::MatrixXd Q(d_, d_);
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j) Q(i, j) = q(k, i, j)(t, x);
    return Q;
  }

  Eigen::VectorXd drift(int k, double t, std::span<const double> x) const {
    Eigen::VectorXd v(d_);
    for (int i = 0; i < d_; ++i) v(i) = b(k, i)(t, x);
    return v;
  }

  /// The raw coupling matrix C(t, x), regardless of mode.
  Eigen::MatrixXd raw_coupling(double t, std::span<const double> x) const {
    Eigen::MatrixXd C(m_, m_);
    for (int k = 0; k < m_; ++k)
      for (int h = 0; h < m_; ++h) C(k, h) = c(k, h)(t, x);
    return C;
  }

  /// The coupling matrix this family applies (C, C^P or the tilde matrix).
  Eigen::MatrixXd coupling(double t, std::span<const double> x) const {
    Eigen::MatrixXd C = raw_coupling(t, x);
    apply_mode(C);
    return C;
  }

  /// Turns a raw coupling matrix into the one this family applies, in place.
  void apply_mode(Eigen::MatrixXd& C) const {
    if (mode_ == CouplingMode::Plain) return;
    for (int k = 0; k < m_; ++k)
      for (int h = 0; h < m_; ++h)
        if (h != k) C(k, h) = std::abs(C(k, h));
    if (mode_ == CouplingMode::Tilde) {
      for (int k = 0; k < m_; ++k) {
        const double Mk = C.row(k).sum();
        C.row(k).array() += (1.0 + std::abs(Mk)) / m_;
      }
    }
  }

  Coefficients eval(double t, std::span<const double> x) const {
    Coefficients out;
    for (int k = 0; k < m_; ++k) {
      out.Q.push_back(diffusion(k, t, x));
      out.b.push_back(drift(k, t, x));
    }
    out.C = coupling(t, x);
    return out;
  }

  /// True when every component carries the same diffusion and drift
  /// coefficients (structurally, the same expressions).
  bool shares_diffusion() const {
    auto same = [](const CoefficientExpr& a, const CoefficientExpr& b) {
      if (a.is_zero() && b.is_zero()) return true;
      return a.coef() == b.coef() && a.power() == b.power() && a.axis() == b.axis() &&
             a.time_factor().is_constant() && b.time_factor().is_constant();
    };
    for (int k = 1; k < m_; ++k)
      for (int i = 0; i < d_; ++i) {
        if (!same(b(k, i), b(0, i))) return false;
        for (int j = 0; j < d_; ++j)
          if (!same(q(k, i, j), q(0, i, j))) return false;
      }
    return true;
  }

  template <class F>
  void for_each_coefficient(F&& f) const {
    for (const auto& e : q_) f(e);
    for (const auto& e : b_) f(e);
    for (const auto& e : c_) f(e);
  }

 private:
  std::size_t qi(int k, int i, int j) const { return static_cast<std::size_t>((k * d_ + i) * d_ + j); }
  void check_k(int k) const { require(k >= 0 && k < m_, ErrorKind::InvalidArgument, "component index out of range"); }

  int d_ = 1;
  int m_ = 1;
  CouplingMode mode_ = CouplingMode::Plain;
  std::vector<CoefficientExpr> q_;
  std::vector<CoefficientExpr> b_;
  std::vector<CoefficientExpr> c_;
};

/// Operator with C replaced by C^P. Applying it twice changes nothing, and a
/// tilde family is already nonnegative off the diagonal.
inline OperatorFamily derive_auxiliary(const OperatorFamily& op) {
  if (op.mode() == CouplingMode::Tilde) return op;
  return op.with_mode(CouplingMode::Positive);
}

inline OperatorFamily derive_tilde(const OperatorFamily& op) { return op.with_mode(CouplingMode::Tilde); }

/// Time points and grid over which sup/inf of coefficient expressions are taken.
struct Sampling {
  std::vector<double> times;
  UniformGrid grid;

  static Sampling over(double s, double T, int n_times, const UniformGrid& grid) {
    require(T >= s && n_times >= 1, ErrorKind::InvalidArgument, "bad sampling interval");
    Sampling out{{}, grid};
    if (n_times == 1 || T == s) {
      out.times.push_back(s);
    } else {
      for (int i = 0; i < n_times; ++i) out.times.push_back(s + (T - s) * i / (n_times - 1));
    }
    return out;
  }
};

/// Sampled location of an extremum.
struct Witness {
  double t = 0.0;
  std::vector<double> x;
  int component = 0;
};

namespace detail {

/// Monotone-growth probe: sup of `value` over boxes of radius R/4, R/2, R.
/// Growth is flagged when the three sups strictly increase and the overall
/// argmax lies on the outer boundary.
struct GrowthProbe {
  std::array<double, 3> sups{};
  bool grows = false;
};

template <class Value>
GrowthProbe probe_growth(const Sampling& smp, Value&& value, const Witness& argmax) {
  GrowthProbe out;
  out.sups.fill(-std::numeric_limits<double>::infinity());
  const auto& g = smp.grid;
  const double R = g.radius();
  for (std::size_t p = 0; p < g.size(); ++p) {
    const double r = g.box_norm(p);
    const auto x = g.coords(p);
    for (double t : smp.times) {
      const double v = value(t, x);
      for (int i = 0; i < 3; ++i)
        if (r <= R * std::ldexp(1.0, i - 2) * (1.0 + 1e-12)) out.sups[static_cast<std::size_t>(i)] = std::max(out.sups[static_cast<std::size_t>(i)], v);
    }
  }
  double rmax = 0.0;
  for (double xi : argmax.x) rmax = std::max(rmax, std::abs(xi));
  const double scale = std::max({1.0, std::abs(out.sups[0]), std::abs(out.sups[2])});
  out.grows = out.sups[1] > out.sups[0] + 1e-12 * scale && out.sups[2] > out.sups[1] + 1e-12 * scale &&
              rmax >= R * (1.0 - 1e-12);
  return out;
}

}  // namespace detail

/// Sampled row sums M_k(t, x) of C^P and their maximum M_J.
struct RowSumBound {
  double M = 0.0;
  Witness witness;
  std::vector<double> times;
  std::vector<GridFunction> fields;  ///< M_k(t_i, .) as an m-component field per sampled time
  std::array<double, 3> probe{};
};

inline RowSumBound row_sum_bound(const OperatorFamily& op, const Sampling& smp) {
  const auto aux = derive_auxiliary(op.with_mode(CouplingMode::Plain));
  const auto& g = smp.grid;
  RowSumBound out;
  out.M = -std::numeric_limits<double>::infinity();
  out.times = smp.times;
  std::vector<double> x(static_cast<std::size_t>(g.dim()));
  for (double t : smp.times) {
    GridFunction f(g, op.components());
    for (std::size_t p = 0; p < g.size(); ++p) {
      g.coords(p, x);
      const Eigen::MatrixXd C = aux.coupling(t, x);
      for (int k = 0; k < op.components(); ++k) {
        const double Mk = C.row(k).sum();
        f(k, p) = Mk;
        if (Mk > out.M) {
          out.M = Mk;
          out.witness = {t, x, k};
        }
      }
    }
    out.fields.push_back(std::move(f));
  }
  const auto probe = detail::probe_growth(
      smp, [&](double t, const std::vector<double>& y) { return aux.coupling(t, y).rowwise().sum().maxCoeff(); }, out.witness);
  out.probe = probe.sups;
  if (probe.grows)
    fail(ErrorKind::UnboundedAbove, "row sums of C^P grow toward the domain boundary (sup at R/4, R/2, R: " +
                                        std::to_string(probe.sups[0]) + ", " + std::to_string(probe.sups[1]) + ", " +
                                        std::to_string(probe.sups[2]) + ")");
  return out;
}

/// Largest deviation of the tilde row sums from 1 + 2 M_k^+ over the samples.
inline double tilde_row_sum_defect(const OperatorFamily& op, const Sampling& smp) {
  const auto P = derive_auxiliary(op.with_mode(CouplingMode::Plain));
  const auto T = derive_tilde(op.with_mode(CouplingMode::Plain));
  double worst = 0.0;
  std::vector<double> x(static_cast<std::size_t>(smp.grid.dim()));
  for (double t : smp.times)
    for (std::size_t p = 0; p < smp.grid.size(); ++p) {
      smp.grid.coords(p, x);
      const Eigen::VectorXd M = P.coupling(t, x).rowwise().sum();
      const Eigen::VectorXd S = T.coupling(t, x).rowwise().sum();
      for (int k = 0; k < op.components(); ++k)
        worst = std::max(worst, std::abs(S(k) - (1.0 + 2.0 * std::max(M(k), 0.0))) / std::max(1.0, std::abs(M(k))));
    }
  return worst;
}

/// Sampled coefficient norms ||A(t)||_{alpha,Omega} and ||A(t) - A(s)||_{alpha,Omega}.
struct CoefficientNorms {
  double at_t = 0.0;
  double difference = 0.0;
  PairCap cap{};
};

inline CoefficientNorms coefficient_norms(const OperatorFamily& op, double t, double s, double alpha,
                                          const UniformGrid& grid, PairCap cap = {}) {
  require(alpha > 0.0 && alpha < 1.0, ErrorKind::InvalidArgument, "alpha must lie in (0,1)");
  CoefficientNorms out;
  out.cap = cap;
  std::vector<double> x(static_cast<std::size_t>(grid.dim()));
  op.for_each_coefficient([&](const CoefficientExpr& e) {
    if (e.is_zero()) return;
    GridFunction ft(grid, 1), fd(grid, 1);
    for (std::size_t p = 0; p < grid.size(); ++p) {
      grid.coords(p, x);
      ft(0, p) = e(t, x);
      fd(0, p) = e(t, x) - e(s, x);
    }
    out.at_t = std::max(out.at_t, holder_norm(ft, alpha, cap));
    out.difference = std::max(out.difference, holder_norm(fd, alpha, cap));
  });
  return out;
}

}  // namespace wcsys
