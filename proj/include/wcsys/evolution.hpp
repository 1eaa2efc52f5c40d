#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wcsys/discrete_operator.hpp"

namespace wcsys {

struct SolverConfig {
  double theta = 1.0;          ///< 1 = implicit Euler, 1/2 = Crank-Nicolson
  std::optional<double> dt{};  ///< default min(h, 0.01 (T - s))
  double linear_tol = 1e-10;   ///< relative sup-norm residual per step
  int max_linear_iters = 1000;

  void validate() const {
    require(theta >= 0.5 && theta <= 1.0, ErrorKind::InvalidArgument, "theta must lie in [1/2, 1]");
    require(!dt || *dt > 0.0, ErrorKind::InvalidArgument, "dt must be positive");
    require(linear_tol > 0.0 && max_linear_iters > 0, ErrorKind::InvalidArgument, "bad linear solver settings");
  }

  double step_for(const UniformGrid& grid, double span) const {
    return dt ? *dt : std::min(grid.spacing(), 0.01 * span);
  }
};

struct StepDiagnostics {
  double t = 0.0;
  double dt = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

struct EvolutionResult {
  std::vector<double> times;
  std::vector<GridFunction> snapshots;
  UniformGrid grid;
  SolverConfig config;
  std::vector<StepDiagnostics> steps;

  const GridFunction& at(double t) const {
    for (std::size_t i = 0; i < times.size(); ++i)
      if (std::abs(times[i] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return snapshots[i];
    fail(ErrorKind::InvalidArgument, "no snapshot at t = " + std::to_string(t));
  }
  const GridFunction& final() const { return snapshots.back(); }

  double max_residual() const {
    double r = 0.0;
    for (const auto& s : steps) r = std::max(r, s.residual);
    return r;
  }
};

/// Sparse linear solve with a sup-norm residual certificate: SparseLU in one
/// dimension, BiCGSTAB with an incomplete-LU preconditioner otherwise. The
/// preconditioner may be shared between nearby matrices.
class LinearSolver {
 public:
  using Preconditioner = Eigen::IncompleteLUT<double>;

  LinearSolver(const SparseMatrix& L, bool direct, const SolverConfig& cfg, std::shared_ptr<const Preconditioner> pre = nullptr)
      : L_(L), cfg_(cfg), direct_(direct) {
    if (direct_) {
      lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
      lu_->compute(Eigen::SparseMatrix<double>(L_));
      require(lu_->info() == Eigen::Success, ErrorKind::LinearSolveFailed, "sparse LU factorization failed");
    } else if (pre) {
      pre_ = std::move(pre);
    } else {
      auto fresh = std::make_shared<Preconditioner>();
      fresh->setDroptol(1e-4);
      fresh->setFillfactor(10);
      fresh->compute(L_);
      require(fresh->info() == Eigen::Success, ErrorKind::LinearSolveFailed, "preconditioner setup failed");
      pre_ = std::move(fresh);
    }
  }

  const std::shared_ptr<const Preconditioner>& preconditioner() const { return pre_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, const Eigen::VectorXd& guess, StepDiagnostics& diag) const {
    Eigen::VectorXd x;
    if (direct_) {
      x = lu_->solve(rhs);
      diag.iterations = 1;
    } else {
      // Start from the sup-norm tolerance as a 2-norm target and tighten only
      // when the sup-norm residual check is not yet met.
      x = guess;
      diag.iterations = 0;
      double target = cfg_.linear_tol;
      const double floor = 0.1 * cfg_.linear_tol / std::sqrt(static_cast<double>(L_.rows()));
      for (;;) {
        Eigen::Index iters = cfg_.max_linear_iters - diag.iterations;
        double err = target;
        Eigen::internal::bicgstab(L_, rhs, x, *pre_, iters, err);
        diag.iterations += static_cast<int>(iters);
        if (sup_residual(rhs, x) <= cfg_.linear_tol || target <= floor || diag.iterations >= cfg_.max_linear_iters) break;
        target = std::max(floor, 0.01 * target);
      }
    }
    diag.residual = sup_residual(rhs, x);
    if (rhs.lpNorm<Eigen::Infinity>() == 0.0) diag.residual = x.lpNorm<Eigen::Infinity>() == 0.0 ? 0.0 : 1.0;
    require(x.allFinite(), ErrorKind::NonFinite, "linear solve produced non-finite values");
    require(diag.residual <= cfg_.linear_tol, ErrorKind::LinearSolveFailed,
            "residual " + std::to_string(diag.residual) + " above tolerance after " + std::to_string(diag.iterations) +
                " iterations");
    return x;
  }

 private:
  double sup_residual(const Eigen::VectorXd& rhs, const Eigen::VectorXd& x) const {
    return (L_ * x - rhs).lpNorm<Eigen::Infinity>() / std::max(rhs.lpNorm<Eigen::Infinity>(), 1e-300);
  }

  SparseMatrix L_;
  SolverConfig cfg_;
  bool direct_;
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
  std::shared_ptr<const Preconditioner> pre_;
};

/// Time stepper for D_t u = A(t)u + g on one grid. Operator matrices and
/// factorizations are cached when the family is autonomous.
class Evolver {
 public:
  Evolver(OperatorFamily op, UniformGrid grid, SolverConfig cfg)
      : op_(std::move(op)), grid_(std::move(grid)), cfg_(cfg), autonomous_(op_.is_autonomous()) {
    cfg_.validate();
    require(grid_.dim() == op_.dim(), ErrorKind::InvalidArgument, "grid and operator dimensions differ");
  }

  const OperatorFamily& op() const { return op_; }
  const UniformGrid& grid() const { return grid_; }
  const SolverConfig& config() const { return cfg_; }

  void check_ellipticity(double t) const {
    const auto [mu, w] = min_ellipticity(op_, t, grid_);
    if (!(mu > 0.0)) {
      std::string at = "t=" + std::to_string(w.t) + " x=(";
      for (double v : w.x) at += std::to_string(v) + ",";
      fail(ErrorKind::EllipticityViolated, "minimum eigenvalue " + std::to_string(mu) + " of Q^" +
                                               std::to_string(w.component + 1) + " at " + at + ")");
    }
  }

  /// One theta step from t to t + dt:
  ///   (I - theta dt A(t+dt)) u' = (I + (1-theta) dt A(t)) u + dt g_theta
  /// with g_theta = theta g(t+dt) + (1-theta) g(t).
  GridFunction step(double t, double dt, const GridFunction& u, const TimeField* g, double theta,
                    StepDiagnostics* out = nullptr) {
    require(u.grid() == grid_ && u.components() == op_.components(), ErrorKind::InvalidArgument,
            "field does not match the evolver grid");
    Eigen::VectorXd rhs = as_vector(u);
    if (theta < 1.0) rhs += (1.0 - theta) * dt * (matrix(t) * as_vector(u));
    if (g) {
      const auto g1 = sample(grid_, g->at(t + dt));
      rhs += theta * dt * as_vector(g1);
      if (theta < 1.0) rhs += (1.0 - theta) * dt * as_vector(sample(grid_, g->at(t)));
    }
    StepDiagnostics diag{t, dt, 0.0, 0};
    const Eigen::VectorXd guess = initial_guess(t, dt, u);
    Eigen::VectorXd x;
    try {
      x = factor(t + dt, dt, theta).solve(rhs, guess, diag);
    } catch (const Error&) {
      if (!stale_) throw;
      x = factor(t + dt, dt, theta, true).solve(rhs, guess, diag);
    }
    if (grid_.dim() > 1) last_ = LastStep{t, dt, as_vector(u), x};
    // A borrowed preconditioner that needs many iterations is rebuilt next step.
    if (stale_ && diag.iterations > kRefreshIterations) shared_pre_.reset();
    if (out) *out = diag;
    return from_vector(grid_, op_.components(), x);
  }

  /// Trajectory from s to T recording the requested snapshot times (plus s and T).
  EvolutionResult run(double s, double T, const GridFunction& f, std::vector<double> snapshots = {},
                      const TimeField* g = nullptr) {
    require(T > s, ErrorKind::InvalidArgument, "final time must exceed initial time");
    require(f.all_finite(), ErrorKind::NonFinite, "initial datum has non-finite values");
    check_ellipticity(s);
    const double dt = cfg_.step_for(grid_, T - s);
    snapshots.push_back(T);
    std::sort(snapshots.begin(), snapshots.end());
    std::vector<double> targets;
    for (double v : snapshots) {
      require(v >= s - 1e-14 && v <= T + 1e-14, ErrorKind::InvalidArgument, "snapshot outside [s, T]");
      if (v > s + 1e-12 * std::max(1.0, std::abs(s)) && (targets.empty() || v > targets.back() + 1e-12 * std::max(1.0, std::abs(v))))
        targets.push_back(std::min(v, T));
    }
    EvolutionResult res{{s}, {f}, grid_, cfg_, {}};
    GridFunction u = f;
    double t = s;
    bool first = true;
    for (double target : targets) {
      while (t < target - 1e-12 * std::max(1.0, std::abs(target))) {
        // Land exactly on the snapshot and avoid a sliver step just before it.
        const double t_next = (target - t) < dt * (1.0 + 1e-6) ? target : t + dt;
        const double h = t_next - t;
        StepDiagnostics diag;
        if (first && cfg_.theta < 1.0) {
          u = step(t, 0.5 * h, u, g, 1.0, &diag);
          res.steps.push_back(diag);
          u = step(t + 0.5 * h, t_next - (t + 0.5 * h), u, g, 1.0, &diag);
        } else {
          u = step(t, h, u, g, cfg_.theta, &diag);
        }
        res.steps.push_back(diag);
        first = false;
        t = t_next;
      }
      res.times.push_back(target);
      res.snapshots.push_back(u);
    }
    return res;
  }

 private:
  const SparseMatrix& matrix(double t) {
    if (autonomous_) {
      if (!cached_A_) cached_A_ = assembler().assemble(t);
      return *cached_A_;
    }
    auto it = recent_.find(t);
    if (it != recent_.end()) return it->second;
    if (recent_.size() > 2) recent_.erase(recent_.begin());
    return recent_.emplace(t, assembler().assemble(t)).first->second;
  }

  // Linear extrapolation from the previous step when u continues it; only
  // the iteration count of the d >= 2 solve depends on the guess.
  Eigen::VectorXd initial_guess(double t, double dt, const GridFunction& u) const {
    const auto v = as_vector(u);
    if (last_ && last_->t + last_->dt == t && last_->out.size() == v.size() && last_->out == v)
      return v + (dt / last_->dt) * (v - last_->in);
    return v;
  }

  const OperatorAssembler& assembler() {
    if (!assembler_) assembler_.emplace(op_, grid_);
    return *assembler_;
  }

  const LinearSolver& factor(double t, double dt, double theta, bool refresh = false) {
    const auto key = std::make_pair(theta, dt);
    if (autonomous_) {
      // Step lengths that differ only by rounding share one factorization.
      for (const auto& [k, solver] : factors_)
        if (k.first == theta && std::abs(k.second - dt) <= 1e-12 * dt) return *solver;
    }
    // Every row of the assembled operator stores its diagonal entry.
    SparseMatrix L = -(theta * dt) * matrix(t);
    L.diagonal().array() += 1.0;
    const bool direct = grid_.dim() == 1;
    if (autonomous_) return *factors_.emplace(key, std::make_unique<LinearSolver>(L, direct, cfg_)).first->second;
    // Time-dependent matrices change slowly, so the preconditioner of an
    // earlier step with the same theta and dt is reused.
    const bool same_key = shared_key_.first == theta && std::abs(shared_key_.second - dt) <= 1e-12 * dt;
    if (refresh || !same_key) shared_pre_.reset();
    stale_ = !direct && shared_pre_ != nullptr;
    last_factor_ = std::make_unique<LinearSolver>(L, direct, cfg_, shared_pre_);
    if (!direct && !stale_) {
      shared_pre_ = last_factor_->preconditioner();
      shared_key_ = key;
    }
    return *last_factor_;
  }

  OperatorFamily op_;
  UniformGrid grid_;
  SolverConfig cfg_;
  bool autonomous_;
  std::optional<OperatorAssembler> assembler_;
  std::optional<SparseMatrix> cached_A_;
  std::map<double, SparseMatrix> recent_;
  std::map<std::pair<double, double>, std::unique_ptr<LinearSolver>> factors_;
  std::unique_ptr<LinearSolver> last_factor_;
  static constexpr int kRefreshIterations = 20;
  std::shared_ptr<const LinearSolver::Preconditioner> shared_pre_;
  std::pair<double, double> shared_key_{-1.0, -1.0};
  bool stale_ = false;
  struct LastStep {
    double t, dt;
    Eigen::VectorXd in, out;
  };
  std::optional<LastStep> last_;
};

/// Solution of D_t u = A(t)u + g on (s, T] with u(s) = f and Neumann faces.
inline EvolutionResult solve_cauchy(const OperatorFamily& op, double s, double T, const GridFunction& f,
                                    const SolverConfig& cfg = {}, std::vector<double> snapshots = {},
                                    const TimeField* g = nullptr) {
  Evolver ev(op, f.grid(), cfg);
  return ev.run(s, T, f, std::move(snapshots), g);
}

/// Semigroup T_tbar(tau) f of the family frozen at tbar, for tau in (0, tau_max].
inline EvolutionResult solve_frozen(const OperatorFamily& op, double tbar, double tau_max, const GridFunction& f,
                                    const SolverConfig& cfg = {}, std::vector<double> snapshots = {}) {
  return solve_cauchy(op.frozen(tbar), 0.0, tau_max, f, cfg, std::move(snapshots));
}

/// Inner box of half the radius, snapped to grid nodes; estimates are
/// measured there, away from the Neumann faces.
inline BoxDomain inner_half_box(const UniformGrid& grid) {
  const double h = grid.spacing();
  const double cells = std::floor(0.5 * grid.radius() / h + 1e-9);
  return BoxDomain(cells * h, grid.dim());
}

/// An operator family together with the grid, interval and solver settings
/// on which experiments run.
struct Problem {
  std::string name;
  OperatorFamily op;
  UniformGrid grid;
  double s = 0.0;
  double T = 1.0;
  SolverConfig cfg{};

  Problem on(UniformGrid g) const {
    Problem out = *this;
    out.grid = std::move(g);
    return out;
  }
  Problem with_config(SolverConfig c) const {
    Problem out = *this;
    out.cfg = c;
    return out;
  }
  /// Inner box of half the radius, where estimates are measured.
  BoxDomain inner_half() const { return inner_half_box(grid); }
};

/// Convergence table of the expanding-domain construction: solutions on
/// nested boxes with a common spacing, compared on an inner box.
struct ExpandingDomainRow {
  double radius_coarse = 0.0;
  double radius_fine = 0.0;
  double sup_difference = 0.0;  ///< max over snapshots
  double c2_difference = 0.0;   ///< max over snapshots
};

struct ExpandingDomainStudy {
  std::vector<ExpandingDomainRow> rows;
  bool pass = true;
};

inline ExpandingDomainStudy expanding_domain_study(const OperatorFamily& op, double s, double T, const Field& f,
                                                   const std::vector<double>& radii, const BoxDomain& inner,
                                                   double spacing, const SolverConfig& cfg = {},
                                                   const std::vector<double>& snapshots = {}) {
  ExpandingDomainStudy out;
  require(std::is_sorted(radii.begin(), radii.end()), ErrorKind::InvalidArgument, "radii must increase");
  if (radii.size() < 2) return out;
  require(inner.radius < radii.front(), ErrorKind::NotNested, "inner box must lie strictly inside the smallest box");
  std::vector<EvolutionResult> runs;
  for (double R : radii) {
    const auto grid = UniformGrid::with_spacing(R, op.dim(), spacing);
    SolverConfig c = cfg;
    if (!c.dt) c.dt = cfg.step_for(grid, T - s);
    runs.push_back(solve_cauchy(op, s, T, sample(grid, f), c, snapshots));
  }
  for (std::size_t i = 0; i + 1 < runs.size(); ++i) {
    ExpandingDomainRow row{radii[i], radii[i + 1], 0.0, 0.0};
    for (std::size_t j = 1; j < runs[i].times.size(); ++j) {
      const auto a = restrict_to(runs[i].snapshots[j], inner);
      const auto b = restrict_to(runs[i + 1].snapshots[j], inner);
      const auto diff = a - b;
      row.sup_difference = std::max(row.sup_difference, sup_norm(diff));
      row.c2_difference = std::max(row.c2_difference, ck_norm(diff, 2));
    }
    out.rows.push_back(row);
  }
  for (std::size_t i = 0; i + 1 < out.rows.size(); ++i)
    if (!(out.rows[i + 1].sup_difference < out.rows[i].sup_difference || out.rows[i].sup_difference <= 1e-13))
      out.pass = false;
  return out;
}

}  // namespace wcsys
