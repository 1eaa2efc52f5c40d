#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "wcsys/evolution.hpp"
#include "wcsys/hypotheses.hpp"
#include "wcsys/invariant.hpp"

namespace wcsys {

/// Where an expected value comes from.
enum class Source { Published, Derived, Definition };

inline std::string_view to_string(Source s) {
  switch (s) {
    case Source::Published: return "published";
    case Source::Derived: return "derived";
    case Source::Definition: return "definition";
  }
  return "unknown";
}

template <class T>
struct Expected {
  T value;
  Source source;
};

struct ExpectedValues {
  std::optional<Expected<std::vector<double>>> eta;
  std::optional<Expected<std::vector<double>>> xi;
  std::optional<Expected<std::vector<double>>> eigenvalues;  ///< real, sorted decreasing
  std::optional<Expected<double>> M_J;
};

struct Preset {
  std::string name;
  OperatorFamily op;
  std::vector<HypothesisSet> declared;
  BoxDomain domain;
  int points = 401;
  double s = 0.0;
  double T = 1.0;
  SolverConfig cfg{};
  ExpectedValues expected;
  bool example_class = false;  ///< exponent conditions of the radial-power class must hold

  UniformGrid grid() const { return UniformGrid(domain, points); }
  Problem problem() const { return Problem{name, op, grid(), s, T, cfg}; }
  /// Coarser sampling grid for hypothesis checks.
  Sampling sampling(int n_times = 11) const {
    return Sampling::over(s, T, n_times, UniformGrid(domain, domain.dim == 1 ? 161 : 41));
  }
};

/// Free parameters of the shipped Example-1 instances, all in the class
/// q = zeta (1+|x|^2)^alpha, b_i = -eta x_i (1+|x|^2)^beta, c = theta (1+|x|^2)^gamma.
struct Example1Params {
  int d = 1;
  double alpha = 0.5;
  double beta = 0.5;
  double gamma_diag = 0.5;
  double gamma_off = 0.0;
  double q_offdiag = 0.25;  ///< zeta_12 of component 1 when d = 2
  double radius = 8.0;
  int points = 401;
};

inline OperatorFamily make_example1_operator(const Example1Params& p) {
  OperatorFamily op(p.d, 2);
  const TimeFactor wobble = TimeFactor::sinusoidal(0.25, 1.0);
  for (int i = 0; i < p.d; ++i) {
    op.set_q(0, i, i, CoefficientExpr(1.0, p.alpha, wobble));
    op.set_q(1, i, i, CoefficientExpr(1.5, p.alpha));
    op.set_b(0, i, CoefficientExpr(-1.0, p.beta, {}, i));
    op.set_b(1, i, CoefficientExpr(-0.5, p.beta, {}, i));
  }
  if (p.d == 2) op.set_q(0, 0, 1, CoefficientExpr(p.q_offdiag, p.alpha));
  op.set_c(0, 0, CoefficientExpr(-1.0, p.gamma_diag));
  op.set_c(0, 1, CoefficientExpr(2.0, p.gamma_off));
  op.set_c(1, 0, CoefficientExpr(-1.5, p.gamma_off));
  op.set_c(1, 1, CoefficientExpr(-1.5, p.gamma_diag, TimeFactor::sinusoidal(0.2, 2.0)));
  return op;
}

inline Preset make_example1(const Example1Params& p, std::string name = "example1") {
  Preset pr;
  pr.name = std::move(name);
  pr.op = make_example1_operator(p);
  pr.declared = {HypothesisSet::Base, HypothesisSet::Smooth};
  pr.domain = BoxDomain(p.radius, p.d);
  pr.points = p.points;
  pr.example_class = true;
  // Row 1 of C^P is 2 - (1+|x|^2)^gamma, largest at the origin.
  if (p.gamma_off == 0.0 && p.gamma_diag > 0.0) pr.expected.M_J = Expected<double>{1.0, Source::Derived};
  return pr;
}

inline OperatorFamily make_example2_operator(int d = 1, double gamma = 0.0) {
  const double s3 = std::sqrt(3.0);
  const double C[3][3] = {{-1, 0, -1}, {0, -3, s3}, {-1, s3, -2}};
  OperatorFamily op(d, 3);
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < d; ++i) {
      op.set_q(k, i, i, CoefficientExpr(1.0));
      op.set_b(k, i, CoefficientExpr(-1.0, 0.0, {}, i));
    }
    for (int h = 0; h < 3; ++h)
      if (C[k][h] != 0.0) op.set_c(k, h, CoefficientExpr(C[k][h], gamma));
  }
  return op;
}

namespace detail {

inline std::vector<double> unit(std::vector<double> v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  for (double& x : v) x /= std::sqrt(n);
  return v;
}

inline OperatorFamily scalar_operator(int d, double drift) {
  OperatorFamily op(d, 1);
  for (int i = 0; i < d; ++i) {
    op.set_q(0, i, i, CoefficientExpr(1.0));
    if (drift != 0.0) op.set_b(0, i, CoefficientExpr(drift, 0.0, {}, i));
  }
  return op;
}

}  // namespace detail

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"example1-d1m2", "example1-d2m2", "example2-gamma0",
                                              "ou-scalar",     "heat-scalar",   "decoupled-negative-coupling"};
  return names;
}

/// Builds a preset without validating it.
inline Preset make_preset(const std::string& name) {
  const double s3 = std::sqrt(3.0);
  if (name == "example1-d1m2") return make_example1(Example1Params{}, name);
  if (name == "example1-d2m2") {
    Example1Params p;
    p.d = 2;
    p.radius = 6.0;
    p.points = 101;
    return make_example1(p, name);
  }
  Preset pr;
  pr.name = name;
  if (name == "example2-gamma0") {
    pr.op = make_example2_operator();
    pr.declared = {HypothesisSet::Base, HypothesisSet::SpecialCase};
    pr.domain = BoxDomain(6.0, 1);
    pr.expected.eta = Expected<std::vector<double>>{detail::unit({-s3, 1.0, s3}), Source::Published};
    pr.expected.xi = Expected<std::vector<double>>{detail::unit({s3, 1.0, s3}), Source::Published};
    pr.expected.eigenvalues = Expected<std::vector<double>>{{0.0, -3.0 + std::sqrt(2.0), -3.0 - std::sqrt(2.0)}, Source::Published};
    pr.expected.M_J = Expected<double>{s3 - 1.0, Source::Derived};
  } else if (name == "ou-scalar") {
    pr.op = detail::scalar_operator(1, -1.0);
    pr.declared = {HypothesisSet::Base, HypothesisSet::SpecialCase};
    pr.domain = BoxDomain(6.0, 1);
    pr.expected.M_J = Expected<double>{0.0, Source::Definition};
  } else if (name == "heat-scalar") {
    pr.op = detail::scalar_operator(1, 0.0);
    pr.declared = {HypothesisSet::Base};
    pr.domain = BoxDomain(8.0, 1);
    pr.expected.M_J = Expected<double>{0.0, Source::Definition};
  } else if (name == "decoupled-negative-coupling") {
    OperatorFamily op(1, 2);
    for (int k = 0; k < 2; ++k) {
      op.set_q(k, 0, 0, CoefficientExpr(1.0));
      op.set_b(k, 0, CoefficientExpr(-1.0, 0.0, {}, 0));
      op.set_c(k, k, CoefficientExpr(-1.0));
      op.set_c(k, 1 - k, CoefficientExpr(-5.0));
    }
    pr.op = op;
    pr.declared = {HypothesisSet::Base};
    pr.domain = BoxDomain(6.0, 1);
    pr.expected.M_J = Expected<double>{4.0, Source::Derived};
  } else {
    fail(ErrorKind::UnknownPreset, "unknown preset '" + name + "'");
  }
  return pr;
}

/// Reproduces the declared hypotheses and the expected-values block;
/// throws SelfValidationFailed on any mismatch.
inline void validate_preset(const Preset& pr, double tol = 1e-10) {
  auto bad = [&](const std::string& what) { fail(ErrorKind::SelfValidationFailed, pr.name + ": " + what); };
  const auto smp = pr.sampling();
  for (auto set : pr.declared) {
    const auto rep = check_hypotheses(pr.op, set, smp);
    for (const auto& item : rep.items)
      if (!item.symbolic && item.verdict == Verdict::Violated) bad("hypothesis item '" + item.name + "' violated: " + item.detail);
    if (pr.example_class && set == HypothesisSet::Smooth && !rep.class_conditions_hold())
      for (const auto& item : rep.items)
        if (item.symbolic && item.verdict != Verdict::Holds) bad("class condition '" + item.name + "' fails: " + item.detail);
  }
  const auto& ex = pr.expected;
  if (ex.M_J) {
    const double M = row_sum_bound(pr.op, smp).M;
    if (!(std::abs(M - ex.M_J->value) <= tol)) bad("M_J = " + std::to_string(M) + ", expected " + std::to_string(ex.M_J->value));
  }
  if (ex.eta || ex.xi || ex.eigenvalues) {
    const auto a = analyze_coupling(pr.op, grid_points(smp.grid, 8));
    auto close = [&](const Eigen::VectorXd& got, const std::vector<double>& want) {
      if (got.size() != static_cast<long>(want.size())) return false;
      for (long i = 0; i < got.size(); ++i)
        if (!(std::abs(got(i) - want[static_cast<std::size_t>(i)]) <= tol)) return false;
      return true;
    };
    if (ex.eta && !close(a.eta, ex.eta->value)) bad("kernel vector eta does not match");
    if (ex.xi && !close(a.xi, ex.xi->value)) bad("kernel vector xi does not match");
    if (ex.eigenvalues)
      for (const auto& s : a.samples)
        for (const auto* ev : {&s.eigenvalues, &s.positive_eigenvalues}) {
          if (!close(ev->real(), ex.eigenvalues->value) || ev->imag().cwiseAbs().maxCoeff() > tol)
            bad("coupling eigenvalues do not match");
        }
  }
}

/// Builds and validates a preset. Presets are immutable, so a validated
/// copy is kept per name and later loads skip the validation.
inline Preset load_preset(const std::string& name) {
  static std::mutex mutex;
  static std::map<std::string, Preset> validated;
  {
    const std::lock_guard lock(mutex);
    if (const auto it = validated.find(name); it != validated.end()) return it->second;
  }
  auto pr = make_preset(name);
  validate_preset(pr);
  const std::lock_guard lock(mutex);
  validated.emplace(name, pr);
  return pr;
}

}  // namespace wcsys
