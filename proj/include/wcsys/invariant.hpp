#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <complex>
#include <vector>

#include "wcsys/discrete_operator.hpp"
#include "wcsys/evolution.hpp"
#include "wcsys/hypotheses.hpp"
#include "wcsys/report.hpp"
#include "wcsys/stencil.hpp"

namespace wcsys {

struct CouplingSample {
  std::vector<double> x;
  Eigen::VectorXcd eigenvalues;           ///< of C(x), sorted by decreasing real part
  Eigen::VectorXcd positive_eigenvalues;  ///< of C^P(x)
  Eigen::VectorXd eta;                    ///< unit kernel vector of C(x)
  Eigen::VectorXd xi;                     ///< unit kernel vector of C^P(x)
  double margin = 0.0;                    ///< largest real part among nonzero eigenvalues of C(x)
};

/// Spectra and kernels of C(x) and C^P(x) over a set of sample points.
struct CouplingAnalysis {
  std::vector<CouplingSample> samples;
  Eigen::VectorXd eta;
  Eigen::VectorXd xi;
  double margin = -std::numeric_limits<double>::infinity();
  bool left_half_plane = true;
  bool zero_simple = true;
  bool no_imaginary = true;
  bool eta_constant = true;
  bool irreducible = true;

  bool pass() const { return left_half_plane && zero_simple && no_imaginary && eta_constant; }
};

namespace detail {

inline Eigen::VectorXcd sorted_eigenvalues(const Eigen::MatrixXd& A) {
  Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(A, false).eigenvalues();
  std::vector<std::complex<double>> v(ev.data(), ev.data() + ev.size());
  std::sort(v.begin(), v.end(), [](auto a, auto b) { return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag(); });
  for (std::size_t i = 0; i < v.size(); ++i) ev(static_cast<long>(i)) = v[i];
  return ev;
}

/// Right singular vector of the smallest singular value, unit length.
inline Eigen::VectorXd kernel_vector(const Eigen::MatrixXd& A) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  return svd.matrixV().col(A.cols() - 1).normalized();
}

}  // namespace detail

inline CouplingAnalysis analyze_coupling(const OperatorFamily& op_in, const std::vector<std::vector<double>>& points,
                                         double t = 0.0) {
  require(!points.empty(), ErrorKind::InvalidArgument, "analysis needs at least one sample point");
  const auto op = op_in.with_mode(CouplingMode::Plain);
  const auto P = derive_auxiliary(op);
  const int m = op.components();
  CouplingAnalysis out;
  std::vector<std::vector<bool>> adj(static_cast<std::size_t>(m), std::vector<bool>(static_cast<std::size_t>(m), false));
  for (const auto& x : points) {
    CouplingSample s;
    s.x = x;
    const Eigen::MatrixXd C = op.raw_coupling(t, x);
    const Eigen::MatrixXd CP = P.coupling(t, x);
    for (int k = 0; k < m; ++k)
      for (int h = 0; h < m; ++h)
        if (C(k, h) != 0.0) adj[static_cast<std::size_t>(k)][static_cast<std::size_t>(h)] = true;
    s.eigenvalues = detail::sorted_eigenvalues(C);
    s.positive_eigenvalues = detail::sorted_eigenvalues(CP);
    s.xi = detail::kernel_vector(CP);
    if (s.xi.sum() < 0.0) s.xi = -s.xi;
    s.eta = detail::kernel_vector(C);
    if (s.eta.dot(s.xi) < 0.0) s.eta = -s.eta;

    const double scale = std::max(1.0, C.cwiseAbs().maxCoeff());
    s.margin = -std::numeric_limits<double>::infinity();
    for (const Eigen::VectorXcd* ev : {&s.eigenvalues, &s.positive_eigenvalues}) {
      int zeros = 0;
      for (long i = 0; i < ev->size(); ++i) {
        const auto l = (*ev)(i);
        if (l.real() > 1e-10 * scale) out.left_half_plane = false;
        if (std::abs(l) <= 1e-10 * scale) {
          ++zeros;
          continue;
        }
        if (std::abs(l.real()) <= 1e-10 * scale && std::abs(l.imag()) > 1e-8) out.no_imaginary = false;
        if (ev == &s.eigenvalues) s.margin = std::max(s.margin, l.real());
      }
      if (zeros != 1) out.zero_simple = false;
    }
    out.margin = std::max(out.margin, s.margin);
    if (!out.samples.empty()) {
      const auto& e0 = out.samples.front().eta;
      if (std::min((s.eta - e0).norm(), (s.eta + e0).norm()) > 1e-8) out.eta_constant = false;
    }
    out.samples.push_back(std::move(s));
  }
  out.eta = out.samples.front().eta;
  out.xi = out.samples.front().xi;
  out.irreducible = is_irreducible(adj);
  return out;
}

/// Sample points of a grid, every `stride`-th point along each axis.
inline std::vector<std::vector<double>> grid_points(const UniformGrid& g, int stride = 1) {
  std::vector<std::vector<double>> out;
  for (std::size_t p = 0; p < g.size(); ++p) {
    bool keep = true;
    for (int a = 0; a < g.dim(); ++a) keep = keep && g.index_along(p, a) % stride == 0;
    if (keep) out.push_back(g.coords(p));
  }
  return out;
}

struct DensityOptions {
  bool check_tail = true;
  double tail_fraction = 0.1;
  double tail_mass = 1e-6;
};

namespace detail {

inline void normalize_density(GridFunction& mu) {
  for (double& v : mu.data()) v = std::max(v, 0.0);
  const double mass = trapezoid(mu.grid(), mu.component(0));
  require(mass > 0.0 && std::isfinite(mass), ErrorKind::NonIntegrable, "density has no positive mass");
  mu *= 1.0 / mass;
}

inline void check_tail(const GridFunction& mu, const DensityOptions& opt) {
  if (!opt.check_tail) return;
  const auto& g = mu.grid();
  const auto w = trapezoid_weights(g);
  double outer = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p)
    if (g.box_norm(p) > (1.0 - opt.tail_fraction) * g.radius()) outer += w[p] * mu(0, p);
  require(outer <= opt.tail_mass, ErrorKind::NonIntegrable,
          "density mass " + std::to_string(outer) + " on the outer shell of the box; truncation is untrustworthy");
}

}  // namespace detail

/// Closed-form stationary density of the one-dimensional diffusion with
/// generator q u'' + b u': mu proportional to exp(int_0^x b/q) / q,
/// the zero-flux solution of (q mu)'' - (b mu)' = 0.
inline GridFunction scalar_invariant_density_1d(const CoefficientExpr& q, const CoefficientExpr& b, const UniformGrid& grid,
                                                DensityOptions opt = {}) {
  require(grid.dim() == 1, ErrorKind::InvalidArgument, "closed-form density is one-dimensional");
  require(q.is_autonomous() && b.is_autonomous(), ErrorKind::InvalidArgument, "closed-form density needs autonomous coefficients");
  auto ratio = [&](double x) {
    const double xs[1] = {x};
    return b(0.0, xs) / q(0.0, xs);
  };
  const int n = grid.points_per_axis();
  const int mid = (n - 1) / 2;
  std::vector<double> logd(static_cast<std::size_t>(n), 0.0);
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  for (int i = mid + 1; i < n; ++i)
    logd[static_cast<std::size_t>(i)] =
        logd[static_cast<std::size_t>(i - 1)] + GK::integrate(ratio, grid.coordinate(i - 1), grid.coordinate(i), 10, 1e-14);
  for (int i = mid - 1; i >= 0; --i)
    logd[static_cast<std::size_t>(i)] =
        logd[static_cast<std::size_t>(i + 1)] - GK::integrate(ratio, grid.coordinate(i), grid.coordinate(i + 1), 10, 1e-14);
  for (int i = 0; i < n; ++i) {
    const double xs[1] = {grid.coordinate(i)};
    logd[static_cast<std::size_t>(i)] -= std::log(q(0.0, xs));
  }
  const double top = *std::max_element(logd.begin(), logd.end());
  GridFunction mu(grid, 1);
  for (int i = 0; i < n; ++i) mu(0, static_cast<std::size_t>(i)) = std::exp(logd[static_cast<std::size_t>(i)] - top);
  detail::normalize_density(mu);
  detail::check_tail(mu, opt);
  return mu;
}

struct StationaryDiagnostics {
  double sigma_min = 0.0;
  double sigma_next = 0.0;
  int iterations = 0;
};

/// Adjoint operator L* mu = sum_a d_a (q_aa d_a mu... ) in conservative form:
/// face flux (q_{p+1} mu_{p+1} - q_p mu_p)/h - b_face (mu_p + mu_{p+1})/2,
/// zero flux through the box faces.
inline SparseMatrix assemble_adjoint(const OperatorFamily& op, const UniformGrid& grid) {
  const int d = grid.dim();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      require(i == j || op.q(0, i, j).is_zero(), ErrorKind::InvalidArgument, "stationary solver needs a diagonal diffusion matrix");
  const std::size_t N = grid.size();
  const double h = grid.spacing();
  const int n = grid.points_per_axis();
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> x(static_cast<std::size_t>(d)), y(static_cast<std::size_t>(d)), mid(static_cast<std::size_t>(d));
  for (std::size_t p = 0; p < N; ++p) {
    grid.coords(p, x);
    for (int a = 0; a < d; ++a) {
      if (grid.index_along(p, a) == n - 1) continue;
      // Face between p and its upper neighbour along a.
      const std::size_t r = p + grid.stride(a);
      grid.coords(r, y);
      for (int c = 0; c < d; ++c) mid[static_cast<std::size_t>(c)] = 0.5 * (x[static_cast<std::size_t>(c)] + y[static_cast<std::size_t>(c)]);
      const double qp = op.q(0, a, a)(0.0, x), qr = op.q(0, a, a)(0.0, y);
      const double bf = op.b(0, a)(0.0, mid);
      // flux F = (qr mu_r - qp mu_p)/h - bf (mu_p + mu_r)/2 leaves p and enters r.
      const double fr = qr / h - 0.5 * bf, fp = -qp / h - 0.5 * bf;
      trip.emplace_back(static_cast<long>(p), static_cast<long>(r), fr / h);
      trip.emplace_back(static_cast<long>(p), static_cast<long>(p), fp / h);
      trip.emplace_back(static_cast<long>(r), static_cast<long>(r), -fr / h);
      trip.emplace_back(static_cast<long>(r), static_cast<long>(p), -fp / h);
    }
  }
  SparseMatrix A(static_cast<long>(N), static_cast<long>(N));
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  return A;
}

/// Stationary density of the scalar diffusion (component 0 of op) as the
/// nullspace of the discrete adjoint, found by two-vector inverse subspace
/// iteration on A^T A.
inline GridFunction scalar_invariant_density_stationary(const OperatorFamily& op, const UniformGrid& grid, DensityOptions opt = {},
                                                        StationaryDiagnostics* diag = nullptr) {
  require(grid.dim() <= 2, ErrorKind::InvalidArgument, "stationary solver supports d <= 2");
  require(op.is_autonomous(), ErrorKind::InvalidArgument, "stationary density needs an autonomous operator");
  const SparseMatrix A = assemble_adjoint(op, grid);
  const long N = A.rows();
  Eigen::SparseMatrix<double> AtA = Eigen::SparseMatrix<double>(A.transpose()) * Eigen::SparseMatrix<double>(A);
  double trace = 0.0;
  for (long i = 0; i < N; ++i) trace += AtA.coeff(i, i);
  const double eps = 1e-13 * trace / static_cast<double>(N);
  Eigen::SparseMatrix<double> I(N, N);
  I.setIdentity();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(AtA + eps * I);
  require(ldlt.info() == Eigen::Success, ErrorKind::LinearSolveFailed, "factorization of the adjoint normal matrix failed");

  Eigen::MatrixXd V(N, 2);
  V.col(0).setOnes();
  for (long i = 0; i < N; ++i) V(i, 1) = std::cos(0.7 * static_cast<double>(i) + 0.3);
  auto orthonormalize = [](Eigen::MatrixXd& W) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(W);
    W = qr.householderQ() * Eigen::MatrixXd::Identity(W.rows(), W.cols());
  };
  orthonormalize(V);
  Eigen::Vector2d sig2 = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
  int it = 0;
  for (; it < 60; ++it) {
    Eigen::MatrixXd W(N, 2);
    for (int c = 0; c < 2; ++c) W.col(c) = ldlt.solve(V.col(c));
    orthonormalize(W);
    const Eigen::MatrixXd AW = A * W;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(AW.transpose() * AW);
    V = W * es.eigenvectors();
    const Eigen::Vector2d prev = sig2;
    sig2 = es.eigenvalues().cwiseMax(0.0);
    if (it > 3 && std::abs(sig2(1) - prev(1)) <= 1e-10 * sig2(1) && sig2(0) <= prev(0) * (1 + 1e-10) + 1e-300) break;
  }
  const double s1 = std::sqrt(sig2(0)), s2 = std::sqrt(sig2(1));
  if (diag) *diag = {s1, s2, it};
  const double tiny = 1e-14 * std::sqrt(trace / static_cast<double>(N));
  require(s2 >= 1e3 * std::max(s1, tiny), ErrorKind::DegenerateNullspace,
          "second singular value " + std::to_string(s2) + " within 1e3 of the smallest " + std::to_string(s1));
  Eigen::VectorXd v = V.col(0);
  if (v.sum() < 0.0) v = -v;
  GridFunction mu(grid, 1);
  for (long i = 0; i < N; ++i) mu(0, static_cast<std::size_t>(i)) = v(i);
  detail::normalize_density(mu);
  detail::check_tail(mu, opt);
  return mu;
}

/// Discrete L^1 distance of two densities on the same grid.
inline double l1_distance(const GridFunction& a, const GridFunction& b) {
  return trapezoid(a.grid(), (a - b).abs().component(0));
}

/// System of signed measures mu_k = eta_k mu with unit-norm eta.
struct MeasureVector {
  GridFunction mu;
  Eigen::VectorXd eta;
  Eigen::VectorXd xi;
  double xi_deviation = 0.0;  ///< max_k | |eta_k| - xi_k |

  int components() const { return static_cast<int>(eta.size()); }
  double weight(int k) const { return eta(k); }
  double abs_weight(int k) const { return xi(k); }
  /// Signed density of the k-th measure at grid point p.
  double density(int k, std::size_t p) const { return eta(k) * mu(0, p); }
  /// sum_k int f_k d mu_k by the trapezoid rule.
  double pair(const GridFunction& f) const {
    const auto w = trapezoid_weights(mu.grid());
    double s = 0.0;
    for (int k = 0; k < components(); ++k)
      for (std::size_t p = 0; p < w.size(); ++p) s += w[p] * f(k, p) * density(k, p);
    return s;
  }
};

inline MeasureVector build_system_measures(const CouplingAnalysis& a, const GridFunction& mu) {
  require(a.irreducible, ErrorKind::InvalidArgument, "coupling is reducible; the kernel need not determine the measures");
  require(a.eta_constant, ErrorKind::InvalidArgument, "kernel of C(x) varies with x");
  require(mu.components() == 1, ErrorKind::InvalidArgument, "scalar density expected");
  MeasureVector out{mu, a.eta, a.xi, 0.0};
  for (long k = 0; k < a.eta.size(); ++k) out.xi_deviation = std::max(out.xi_deviation, std::abs(std::abs(a.eta(k)) - a.xi(k)));
  return out;
}

/// The constant vector field equal to v in every component.
inline GridFunction constant_vector(const UniformGrid& g, const Eigen::VectorXd& v) {
  GridFunction out(g, static_cast<int>(v.size()));
  for (int k = 0; k < out.components(); ++k)
    for (double& x : out.component(k)) x = v(k);
  return out;
}

namespace detail {

inline BoxDomain inner_box(const UniformGrid& g, double fraction) {
  const double h = g.spacing();
  return BoxDomain(std::floor(fraction * g.radius() / h + 1e-9) * h, g.dim());
}

inline double max_abs(const GridFunction& u, const std::optional<BoxDomain>& window) {
  double s = 0.0;
  for (int k = 0; k < u.components(); ++k)
    for (std::size_t p = 0; p < u.points(); ++p)
      if (in_window(u.grid(), p, window)) s = std::max(s, std::abs(u(k, p)));
  return s;
}

}  // namespace detail

/// Invariance of the pairing sum_k int (T(t)f)_k d mu_k.
inline VerificationReport check_invariance(const Problem& pb, const MeasureVector& mv, const std::vector<GridFunction>& fs,
                                           const std::vector<double>& times, double tol = 5e-3) {
  VerificationReport rep{"invariance", pb.name};
  const double tmax = *std::max_element(times.begin(), times.end());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const auto& f = fs[i];
    const double before = mv.pair(f);
    const double scale = std::max(sup_norm(f), 1e-300);
    EvolutionResult res;
    if (tmax > 0.0) res = solve_cauchy(pb.op, 0.0, tmax, f, pb.cfg, times);
    double worst = 0.0;
    for (double t : times) {
      const double after = t > 0.0 ? mv.pair(res.at(t)) : before;
      worst = std::max(worst, std::abs(after - before) / scale);
    }
    rep.add("f" + std::to_string(i) + ".relative_change", worst, tol);
    rep.measured["f" + std::to_string(i) + ".pairing"] = before;
  }
  return rep;
}

struct AsymptoticsTrace {
  double functional = 0.0;
  std::vector<double> times;
  std::vector<double> errors;
};

/// e(t) = sup over the inner quarter box of |T(t)f - M_f eta| at geometric times.
inline AsymptoticsTrace asymptotics_trace(const Problem& pb, const GridFunction& f, const MeasureVector& mv, double horizon,
                                          int points = 8) {
  AsymptoticsTrace tr;
  tr.functional = mv.pair(f);
  const auto target = tr.functional * constant_vector(f.grid(), mv.eta);
  const auto window = detail::inner_box(f.grid(), 0.25);
  std::vector<double> times;
  for (int j = points - 1; j >= 0; --j) times.push_back(horizon * std::pow(0.5, j));
  const auto res = solve_cauchy(pb.op, 0.0, horizon, f, pb.cfg, times);
  tr.times.push_back(0.0);
  tr.errors.push_back(detail::max_abs(f - target, window));
  for (double t : times) {
    tr.times.push_back(t);
    tr.errors.push_back(detail::max_abs(res.at(t) - target, window));
  }
  return tr;
}

inline VerificationReport check_asymptotics(const Problem& pb, const GridFunction& f, const MeasureVector& mv, double horizon,
                                            double factor = 0.05) {
  VerificationReport rep{"asymptotics", pb.name};
  const auto tr = asymptotics_trace(pb, f, mv, horizon);
  double increase = 0.0;
  for (std::size_t j = 1; j < tr.errors.size(); ++j) increase = std::max(increase, tr.errors[j] - tr.errors[j - 1]);
  rep.add("max_increase", increase, 1e-12);
  rep.add("final_over_initial", tr.errors.back() - factor * tr.errors.front(), 1e-12);
  rep.measured["functional"] = tr.functional;
  rep.measured["e_initial"] = tr.errors.front();
  rep.measured["e_final"] = tr.errors.back();
  rep.measured["horizon"] = horizon;
  return rep;
}

/// (sum_k int |u_k|^p d|mu_k|)^(1/p) with |mu_k| = xi_k mu.
inline double lp_norm(const GridFunction& u, const MeasureVector& mv, double p) {
  const auto w = trapezoid_weights(u.grid());
  double s = 0.0;
  for (int k = 0; k < u.components(); ++k)
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * std::pow(std::abs(u(k, i)), p) * mv.abs_weight(k) * mv.mu(0, i);
  return std::pow(s, 1.0 / p);
}

inline VerificationReport check_lp_bound(const Problem& pb, const MeasureVector& mv, double p, double t,
                                         const std::vector<GridFunction>& fs, double tol_rel = 1e-3) {
  VerificationReport rep{"lp_bound", pb.name};
  const double bound = std::pow(2.0, (p - 1.0) / p);
  double worst = 0.0;
  for (const auto& f : fs) {
    const double before = lp_norm(f, mv, p);
    if (before == 0.0) continue;
    const auto res = solve_cauchy(pb.op, 0.0, t, f, pb.cfg);
    worst = std::max(worst, lp_norm(res.final(), mv, p) / (bound * before));
  }
  rep.add("ratio_to_bound", worst, 1.0 + tol_rel);
  rep.measured["p"] = p;
  rep.measured["bound"] = bound;
  return rep;
}

/// max(|T(t)f|^2, |T^P(t)f|^2) <= T_scalar(t)|f|^2 pointwise on the inner half box.
inline VerificationReport check_domination(const Problem& pb, const GridFunction& f, const std::vector<double>& times,
                                           double c_cmp = 10.0) {
  VerificationReport rep{"domination", pb.name};
  const auto& g = f.grid();
  const double tmax = *std::max_element(times.begin(), times.end());
  const double dt = pb.cfg.step_for(g, tmax);
  const double tol = c_cmp * (g.spacing() * g.spacing() + dt);
  GridFunction sq(g, 1);
  for (std::size_t p = 0; p < g.size(); ++p)
    for (int k = 0; k < f.components(); ++k) sq(0, p) += f(k, p) * f(k, p);
  const auto u = solve_cauchy(pb.op, 0.0, tmax, f, pb.cfg, times);
  const auto uP = solve_cauchy(derive_auxiliary(pb.op), 0.0, tmax, f, pb.cfg, times);
  const auto v = solve_cauchy(pb.op.component(0, false), 0.0, tmax, sq, pb.cfg, times);
  const auto window = pb.inner_half();
  double worst = -std::numeric_limits<double>::infinity();
  for (double t : times) {
    const auto &a = u.at(t), &b = uP.at(t), &c = v.at(t);
    for (std::size_t p = 0; p < g.size(); ++p) {
      if (!detail::in_window(g, p, window)) continue;
      double na = 0.0, nb = 0.0;
      for (int k = 0; k < f.components(); ++k) {
        na += a(k, p) * a(k, p);
        nb += b(k, p) * b(k, p);
      }
      const double viol = std::max(na, nb) - c(0, p);
      if (viol > worst) {
        worst = viol;
        rep.witness = Witness{t, g.coords(p), 0};
      }
    }
  }
  rep.add("violation", worst, tol);
  rep.measured["tol_cmp"] = tol;
  return rep;
}

inline VerificationReport check_fixed_points(const Problem& pb, const CouplingAnalysis& a, const std::vector<double>& times,
                                             double tol = 1e-4) {
  VerificationReport rep{"fixed_points", pb.name};
  const auto& g = pb.grid;
  const double tmax = *std::max_element(times.begin(), times.end());
  const auto eta = constant_vector(g, a.eta), xi = constant_vector(g, a.xi);
  double de = 0.0, dx = 0.0;
  if (tmax > 0.0) {
    const auto u = solve_cauchy(pb.op, 0.0, tmax, eta, pb.cfg, times);
    const auto uP = solve_cauchy(derive_auxiliary(pb.op), 0.0, tmax, xi, pb.cfg, times);
    for (double t : times) {
      if (t <= 0.0) continue;
      de = std::max(de, sup_norm(u.at(t) - eta));
      dx = std::max(dx, sup_norm(uP.at(t) - xi));
    }
  }
  rep.add("eta_drift", de, tol);
  rep.add("xi_drift", dx, tol);
  const auto P = derive_auxiliary(pb.op.with_mode(CouplingMode::Plain));
  double ke = 0.0, kx = 0.0;
  std::vector<double> x(static_cast<std::size_t>(g.dim()));
  for (std::size_t p = 0; p < g.size(); ++p) {
    g.coords(p, x);
    ke = std::max(ke, (pb.op.raw_coupling(0.0, x) * a.eta).cwiseAbs().maxCoeff());
    kx = std::max(kx, (P.coupling(0.0, x) * a.xi).cwiseAbs().maxCoeff());
  }
  rep.add("C_eta", ke, 1e-10);
  rep.add("CP_xi", kx, 1e-10);
  return rep;
}

struct GradientTrace {
  std::vector<double> times;
  std::vector<double> energy;  ///< int |J_x T(t)f|^2 d mu
};

inline double gradient_energy(const GridFunction& u, const GridFunction& mu) {
  const auto& g = u.grid();
  GridFunction e(g, 1);
  for (int a = 0; a < g.dim(); ++a) {
    const auto du = derivative(u, {a});
    for (int k = 0; k < u.components(); ++k)
      for (std::size_t p = 0; p < g.size(); ++p) e(0, p) += du(k, p) * du(k, p) * mu(0, p);
  }
  return trapezoid(g, e.component(0));
}

inline GradientTrace gradient_trace(const Problem& pb, const GridFunction& f, const GridFunction& mu, double horizon,
                                    int points = 8) {
  GradientTrace tr;
  std::vector<double> times;
  for (int j = 0; j < points; ++j) times.push_back(horizon * (j + 1) / points);
  const auto res = solve_cauchy(pb.op, 0.0, horizon, f, pb.cfg, times);
  tr.times.push_back(0.0);
  tr.energy.push_back(gradient_energy(f, mu));
  for (double t : times) {
    tr.times.push_back(t);
    tr.energy.push_back(gradient_energy(res.at(t), mu));
  }
  return tr;
}

inline VerificationReport check_gradient_decay(const Problem& pb, const GridFunction& f, const GridFunction& mu, double horizon,
                                               double factor = 0.05) {
  VerificationReport rep{"gradient_decay", pb.name};
  const auto tr = gradient_trace(pb, f, mu, horizon);
  double increase = 0.0;
  for (std::size_t j = 1; j < tr.energy.size(); ++j) increase = std::max(increase, tr.energy[j] - tr.energy[j - 1]);
  rep.add("max_increase", increase, 1e-12);
  rep.add("final_over_initial", tr.energy.back() - factor * tr.energy.front(), 1e-12);
  rep.measured["energy_initial"] = tr.energy.front();
  rep.measured["energy_final"] = tr.energy.back();
  return rep;
}

}  // namespace wcsys
