#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "wcsys/config.hpp"
#include "wcsys/estimates.hpp"
#include "wcsys/invariant.hpp"
#include "wcsys/presets.hpp"
#include "wcsys/report.hpp"
#include "wcsys/resolvent.hpp"

// Suite manifests:
//
//   {"seed": 2024, "items": [{"check": "comparison", "preset": "example1-d1m2", "params": {...}}, ...]}
//
// Item i runs with seed + i. Every item may override the grid and interval
// with params "radius", "points", "s", "T", "theta" and "dt"; random data
// read "amplitude", "modes", "bandwidth", "scale" and "window".
//
// Outputs under the output directory:
//   reports/NNN_<check>_<preset>.json   one VerificationReport per item
//   summary.csv                          item,check,preset,verdict,binding_criterion,worst_violation,tolerance
//   index.json                           seed, counts, overall verdict and the per-item table

namespace wcsys {

struct SuiteItem {
  std::string check;
  std::string preset;
  json params = json::object();
};

struct SuiteManifest {
  std::uint64_t seed = 1;
  std::vector<SuiteItem> items;
};

using CheckFn = std::function<VerificationReport(const Preset&, const json&, std::uint64_t)>;

namespace detail {

inline double param(const json& p, const char* key, double fallback) { return get_or(p, key, fallback); }

inline std::vector<double> param_list(const json& p, const char* key, std::vector<double> fallback) {
  return p.contains(key) ? p.at(key).get<std::vector<double>>() : fallback;
}

inline Problem suite_problem(const Preset& pr, const json& p) {
  auto pb = pr.problem();
  const double R = param(p, "radius", pb.grid.radius());
  const int n = get_or(p, "points", pb.grid.points_per_axis());
  if (R != pb.grid.radius() || n != pb.grid.points_per_axis()) pb.grid = UniformGrid(BoxDomain(R, pb.op.dim()), n);
  pb.s = param(p, "s", pb.s);
  pb.T = param(p, "T", pb.T);
  require(pb.T > pb.s, ErrorKind::ConfigError, "interval needs T > s");
  pb.cfg.theta = param(p, "theta", pb.cfg.theta);
  if (p.contains("dt")) pb.cfg.dt = p.at("dt").get<double>();
  return pb;
}

inline Field suite_field(const Problem& pb, const json& p, std::uint64_t seed, std::optional<double> window = std::nullopt) {
  RandomFieldSpec spec;
  spec.components = pb.op.components();
  spec.dim = pb.op.dim();
  spec.amplitude = param(p, "amplitude", spec.amplitude);
  spec.modes = get_or(p, "modes", spec.modes);
  spec.bandwidth = param(p, "bandwidth", spec.bandwidth);
  spec.scale = param(p, "scale", spec.scale);
  spec.window = p.contains("window") ? std::optional<double>(p.at("window").get<double>()) : window;
  return random_smooth_field(spec, seed);
}

/// Normalized random datum on the problem grid.
inline GridFunction suite_datum(const Problem& pb, const json& p, std::uint64_t seed, std::optional<double> window = std::nullopt) {
  return normalized(sample(pb.grid, suite_field(pb, p, seed, window)));
}

/// Seed of trial i within an item.
inline std::uint64_t trial_seed(std::uint64_t seed, int i) { return seed * 1000 + static_cast<std::uint64_t>(i); }

inline HypothesisSet hypothesis_set(const std::string& s) {
  if (s == "base") return HypothesisSet::Base;
  if (s == "smooth") return HypothesisSet::Smooth;
  if (s == "special") return HypothesisSet::SpecialCase;
  fail(ErrorKind::ConfigError, "unknown hypothesis set '" + s + "'");
}

inline std::string set_name(HypothesisSet s) {
  switch (s) {
    case HypothesisSet::Base: return "base";
    case HypothesisSet::Smooth: return "smooth";
    case HypothesisSet::SpecialCase: return "special";
  }
  return "unknown";
}

inline VerificationReport run_hypotheses(const Preset& pr, const json& p, std::uint64_t) {
  VerificationReport rep{"hypotheses", pr.name};
  std::vector<HypothesisSet> sets = pr.declared;
  if (p.contains("sets")) {
    sets.clear();
    for (const auto& s : p.at("sets")) sets.push_back(hypothesis_set(s.get<std::string>()));
  }
  if (sets.empty()) sets.push_back(HypothesisSet::Base);
  const auto smp = pr.sampling();
  for (auto set : sets) {
    const auto hr = check_hypotheses(pr.op, set, smp);
    const auto prefix = set_name(set) + ".";
    for (const auto& item : hr.items) {
      if (item.symbolic && !(pr.example_class && set == HypothesisSet::Smooth)) continue;
      rep.require_true(prefix + item.name, item.symbolic ? item.verdict == Verdict::Holds : item.verdict != Verdict::Violated);
      rep.notes[prefix + item.name] = item.detail;
      if (item.witness && !rep.witness) rep.witness = item.witness;
    }
    for (const auto& [k, v] : hr.constants) rep.measured[prefix + k] = v;
  }
  return rep;
}

inline VerificationReport run_coupling_analysis(const Preset& pr, const json& p, std::uint64_t) {
  VerificationReport rep{"coupling_analysis", pr.name};
  const auto pb = suite_problem(pr, p);
  const auto a = analyze_coupling(pb.op, grid_points(pb.grid, get_or(p, "stride", 20)));
  const double tol = param(p, "tol", 1e-10);
  rep.require_true("left_half_plane", a.left_half_plane);
  rep.require_true("zero_simple", a.zero_simple);
  rep.require_true("no_imaginary", a.no_imaginary);
  rep.require_true("eta_constant", a.eta_constant);
  auto dist = [](const Eigen::VectorXd& got, const std::vector<double>& want) -> double {
    if (got.size() != static_cast<long>(want.size())) return INFINITY;
    double e = 0.0;
    for (long i = 0; i < got.size(); ++i) e = std::max(e, std::abs(got(i) - want[static_cast<std::size_t>(i)]));
    return e;
  };
  const auto& ex = pr.expected;
  if (ex.eta) rep.add("eta_error", dist(a.eta, ex.eta->value), tol);
  if (ex.xi) rep.add("xi_error", dist(a.xi, ex.xi->value), tol);
  if (ex.eigenvalues) {
    double e = 0.0;
    for (const auto& s : a.samples)
      for (const auto* ev : {&s.eigenvalues, &s.positive_eigenvalues})
        e = std::max({e, dist(ev->real(), ex.eigenvalues->value), ev->imag().cwiseAbs().maxCoeff()});
    rep.add("eigenvalue_error", e, tol);
  }
  rep.measured["margin"] = a.margin;
  rep.measured["samples"] = static_cast<double>(a.samples.size());
  for (long i = 0; i < a.eta.size(); ++i) {
    rep.measured["eta_" + std::to_string(i + 1)] = a.eta(i);
    rep.measured["xi_" + std::to_string(i + 1)] = a.xi(i);
  }
  if (!a.samples.empty())
    for (long i = 0; i < a.samples.front().eigenvalues.size(); ++i)
      rep.measured["eigenvalue_" + std::to_string(i + 1)] = a.samples.front().eigenvalues(i).real();
  return rep;
}

inline VerificationReport run_comparison(const Preset& pr, const json& p, std::uint64_t seed) {
  const auto pb = suite_problem(pr, p);
  const double c = param(p, "c_cmp", 10.0);
  const auto f = suite_field(pb, p, seed);
  if (get_or(p, "refine", true)) return check_comparison_refinement(pb, f, c);
  return check_comparison(pb, sample(pb.grid, f), {}, c);
}

inline VerificationReport run_sup_bound(const Preset& pr, const json& p, std::uint64_t seed) {
  const auto pb = suite_problem(pr, p);
  VerificationReport rep{"sup_bound", pb.name};
  const int trials = get_or(p, "trials", 5);
  for (int i = 0; i < trials; ++i)
    rep.merge(check_sup_bound(pb, suite_datum(pb, p, trial_seed(seed, i)), {}, param(p, "tol", 1e-3)),
              "trial_" + std::to_string(i + 1) + ".");
  return rep;
}

inline DecaySettings decay_settings(const json& p) {
  DecaySettings st;
  st.lag_min = param(p, "lag_min", st.lag_min);
  st.lag_max = param(p, "lag_max", st.lag_max);
  st.lags = get_or(p, "lags", st.lags);
  st.slope_tol = param(p, "slope_tol", st.slope_tol);
  st.cap = PairCap::physical(3.0 * std::sqrt(st.lag_max));
  return st;
}

inline Problem decay_setup(const Preset& pr, const json& p, const DecaySettings& st) {
  auto pb = pr.problem();
  pb.s = param(p, "s", pb.s);
  return decay_problem(pb, st, param(p, "radius", 1.0), get_or(p, "points", pr.op.dim() == 1 ? 2001 : 201));
}

inline Field decay_field(const Problem& pb, int h) {
  return decay_datum(h, pb.op.dim(), pb.op.components(), 0.25, 5.0 * pb.grid.spacing());
}

inline VerificationReport run_derivative_decay(const Preset& pr, const json& p, std::uint64_t) {
  const auto st = decay_settings(p);
  const auto pb = decay_setup(pr, p, st);
  VerificationReport rep{"derivative_decay", pr.name};
  const auto pairs = get_or(p, "pairs", json::array({{0, 1}, {0, 2}, {1, 2}, {0, 3}}));
  for (const auto& hk : pairs) {
    const int h = hk.at(0).get<int>(), k = hk.at(1).get<int>();
    const auto fit = measure_derivative_decay(pb, sample(pb.grid, decay_field(pb, h)), h, k, st);
    const auto prefix = "h" + std::to_string(h) + "k" + std::to_string(k) + ".";
    rep.merge(decay_report(fit, "derivative_decay", pr.name), prefix);
    if (p.contains("slope_range")) {
      const auto range = p.at("slope_range").get<std::vector<double>>();
      require(range.size() == 2, ErrorKind::ConfigError, "slope_range is [low, high]");
      rep.add(prefix + "slope_below_range", range[0] - fit.slope, 0.0);
      rep.add(prefix + "slope_above_range", fit.slope - range[1], 0.0);
    }
  }
  return rep;
}

inline VerificationReport run_interpolation_estimate(const Preset& pr, const json& p, std::uint64_t) {
  const auto st = decay_settings(p);
  const auto pb = decay_setup(pr, p, st);
  const double beta = param(p, "beta", 0.0);
  const auto f = sample(pb.grid, decay_field(pb, static_cast<int>(std::floor(beta))));
  return check_interpolation_estimates(pb, param(p, "tbar", pb.s), param(p, "theta", 1.5), beta, f, st);
}

inline VerificationReport run_evolution_law(const Preset& pr, const json& p, std::uint64_t seed) {
  const auto pb = suite_problem(pr, p);
  const double r = param(p, "r", pb.s + 0.3537 * (pb.T - pb.s));
  return check_evolution_law(pb, suite_datum(pb, p, seed), r, param(p, "c_scheme", 10.0));
}

inline VerificationReport run_continuity_in_data(const Preset& pr, const json& p, std::uint64_t) {
  const auto pb = suite_problem(pr, p);
  const int m = pb.op.components();
  // Bounded, non-decaying datum and smooth cutoffs approaching the box edge.
  const Field bounded{m, [](int k, std::span<const double> x) { return std::tanh(x[0]) + 0.5 * k; }};
  const double R = pb.grid.radius();
  std::vector<GridFunction> fn;
  for (double w : param_list(p, "widths", {2.0, 1.0, 0.5, 0.25, 0.125})) {
    const Field cut{m, [&bounded, R, w](int k, std::span<const double> x) {
                      double r = 0.0;
                      for (double v : x) r = std::max(r, std::abs(v));
                      return bounded.eval(k, x) * 0.5 * (1.0 - std::tanh(8.0 * (r - (R - w)) / w));
                    }};
    fn.push_back(sample(pb.grid, cut));
  }
  return check_continuity_in_data(pb, sample(pb.grid, bounded), fn, std::nullopt, param(p, "tol", 1e-3));
}

inline VerificationReport run_joint_continuity(const Preset& pr, const json& p, std::uint64_t seed) {
  const auto pb = suite_problem(pr, p);
  return check_joint_continuity(pb, suite_datum(pb, p, seed), pb.s, pb.T, param_list(p, "deltas", {0.1, 0.25, 0.5}));
}

inline VerificationReport run_duhamel(const Preset& pr, const json& p, std::uint64_t seed) {
  const auto pb = suite_problem(pr, p);
  return duhamel_check(pb, suite_datum(pb, p, seed), get_or(p, "nodes", 20), param(p, "tol", 5e-3));
}

inline VerificationReport run_expanding_domain(const Preset& pr, const json& p, std::uint64_t seed) {
  const auto pb = suite_problem(pr, p);
  VerificationReport rep{"expanding_domain", pr.name};
  const auto radii = param_list(p, "radii", {4.0, 6.0, 8.0});
  const BoxDomain inner(param(p, "inner", 2.0), pb.op.dim());
  const auto f = suite_field(pb, p, seed, 1.5);
  const auto study = expanding_domain_study(pb.op, pb.s, pb.T, f, radii, inner, pb.grid.spacing(), pb.cfg);
  double growth = -INFINITY;
  for (std::size_t i = 0; i < study.rows.size(); ++i) {
    const auto& row = study.rows[i];
    rep.measured["sup_difference_" + std::to_string(i + 1)] = row.sup_difference;
    rep.measured["c2_difference_" + std::to_string(i + 1)] = row.c2_difference;
    if (i > 0) growth = std::max(growth, row.sup_difference - std::max(study.rows[i - 1].sup_difference, 1e-13));
  }
  rep.add("difference_growth", study.rows.size() > 1 ? growth : 0.0, 0.0);
  return rep;
}

inline double frozen_bound(const Problem& pb, double tbar) { return frozen_row_sum_bound(pb.op, tbar, pb.grid); }

inline VerificationReport run_resolvent_agreement(const Preset& pr, const json& p, std::uint64_t seed) {
  const auto pb = suite_problem(pr, p);
  const double tbar = param(p, "tbar", pb.s);
  const double lambda = param(p, "lambda", frozen_bound(pb, tbar) + param(p, "lambda_offset", 1.0));
  return check_resolvent_agreement(pb, tbar, lambda, suite_datum(pb, p, seed), param(p, "residual_tol", 1e-2));
}

inline VerificationReport run_resolvent_identity(const Preset& pr, const json& p, std::uint64_t seed) {
  const auto pb = suite_problem(pr, p);
  const double tbar = param(p, "tbar", pb.s);
  const double M = frozen_bound(pb, tbar);
  const double lambda = param(p, "lambda", 2.0 * M + 1.0), mu = param(p, "mu", 2.0 * M + 3.0);
  return check_resolvent_identity(pb, tbar, lambda, mu, suite_datum(pb, p, seed), param(p, "tol", 1e-4), get_or(p, "refine", true));
}

inline VerificationReport run_resolvent_bound(const Preset& pr, const json& p, std::uint64_t seed) {
  const auto pb = suite_problem(pr, p);
  const double tbar = param(p, "tbar", pb.s);
  const double lambda = param(p, "lambda", frozen_bound(pb, tbar) + param(p, "lambda_offset", 1.0));
  const auto method = get_or<std::string>(p, "method", "direct");
  require(method == "direct" || method == "quadrature", ErrorKind::ConfigError, "method is 'direct' or 'quadrature'");
  return check_resolvent_bound(pb, tbar, lambda, get_or(p, "trials", 10), seed,
                               method == "direct" ? ResolventMethod::Direct : ResolventMethod::Quadrature, param(p, "tol", 1e-3));
}

inline SchauderSettings schauder_settings(const json& p) {
  SchauderSettings st;
  st.theta = param(p, "holder", st.theta);
  st.cap = PairCap::physical(param(p, "cap", 0.5));
  st.n_times = get_or(p, "times", st.n_times);
  st.stability = param(p, "stability", st.stability);
  return st;
}

inline VerificationReport run_schauder_elliptic(const Preset& pr, const json& p, std::uint64_t seed) {
  const auto pb = suite_problem(pr, p);
  const double M = sampled_row_sum_bound(pb, pb.s, pb.T);
  const double lambda = param(p, "lambda", std::max(2.0, M + 1.0));
  auto rep = schauder_experiment(pb, modulated(suite_field(pb, p, seed)), lambda, schauder_settings(p));
  if (get_or(p, "manufactured", true)) {
    double err = 0.0;
    for (double t : {pb.s, 0.5 * (pb.s + pb.T)})
      err = std::max(err, manufactured_elliptic_error(pb, gaussian_profile(pb.op.components()), t, lambda));
    rep.add("manufactured_error", err, param(p, "manufactured_tol", 1e-3));
  }
  return rep;
}

inline VerificationReport run_schauder_parabolic(const Preset& pr, const json& p, std::uint64_t seed) {
  const auto pb = suite_problem(pr, p);
  const double window = 0.5 * pb.grid.radius();
  auto rep = parabolic_schauder_experiment(pb, suite_field(pb, p, trial_seed(seed, 0), window),
                                           modulated(suite_field(pb, p, trial_seed(seed, 1), window)), schauder_settings(p));
  if (get_or(p, "manufactured", true)) {
    auto fine = pb;
    fine.cfg.theta = 0.5;
    fine.cfg.dt = param(p, "manufactured_dt", 0.005);
    rep.add("manufactured_error", manufactured_parabolic_error(fine, gaussian_profile(pb.op.components())),
            param(p, "manufactured_tol", 1e-3));
  }
  return rep;
}

inline VerificationReport run_interpolation_inequality(const Preset& pr, const json& p, std::uint64_t seed) {
  const auto pb = suite_problem(pr, p);
  const double tbar = param(p, "tbar", pb.s);
  const double lambda = param(p, "lambda", frozen_bound(pb, tbar) + 2.0);
  VerificationReport rep{"interpolation_inequality", pr.name};
  for (double theta : param_list(p, "thetas", {0.5, 1.5}))
    rep.merge(check_interpolation_inequality(pb, tbar, theta, lambda, get_or(p, "trials", 5), seed, PairCap::physical(param(p, "cap", 0.5))),
              "theta_" + format_number(theta) + ".");
  return rep;
}

inline VerificationReport run_stationary_density(const Preset& pr, const json& p, std::uint64_t) {
  const auto pb = suite_problem(pr, p);
  require(pb.op.dim() == 1, ErrorKind::InvalidArgument, "the closed-form density oracle is one-dimensional");
  VerificationReport rep{"stationary_density", pr.name};
  const auto scalar = pb.op.component(0, false);
  const auto mu = scalar_invariant_density_stationary(scalar, pb.grid);
  const auto oracle = scalar_invariant_density_1d(scalar.q(0, 0, 0), scalar.b(0, 0), pb.grid);
  rep.add("l1_error", l1_distance(mu, oracle), param(p, "tol", 1e-4));
  return rep;
}

/// Measures built from the kernel of the coupling and the stationary density
/// of the shared scalar diffusion.
struct SystemMeasures {
  Problem pb;
  CouplingAnalysis analysis;
  GridFunction mu;
  MeasureVector mv;
};

inline SystemMeasures system_measures(const Preset& pr, const json& p) {
  auto pb = suite_problem(pr, p);
  auto a = analyze_coupling(pb.op, grid_points(pb.grid, get_or(p, "stride", 20)));
  auto mu = scalar_invariant_density_stationary(pb.op.component(0, false), pb.grid);
  auto mv = build_system_measures(a, mu);
  return SystemMeasures{std::move(pb), std::move(a), std::move(mu), std::move(mv)};
}

inline std::vector<GridFunction> measure_batch(const Problem& pb, const json& p, std::uint64_t seed, int count) {
  std::vector<GridFunction> out;
  for (int i = 0; i < count; ++i) out.push_back(sample(pb.grid, suite_field(pb, p, trial_seed(seed, i), 0.5 * pb.grid.radius())));
  return out;
}

inline VerificationReport run_invariance(const Preset& pr, const json& p, std::uint64_t seed) {
  const auto sys = system_measures(pr, p);
  return check_invariance(sys.pb, sys.mv, measure_batch(sys.pb, p, seed, get_or(p, "trials", 3)),
                          param_list(p, "times", {0.1, 0.5, 1.0, 2.0}), param(p, "tol", 5e-3));
}

inline VerificationReport run_asymptotics(const Preset& pr, const json& p, std::uint64_t seed) {
  const auto sys = system_measures(pr, p);
  VerificationReport rep{"asymptotics", pr.name};
  const auto fs = measure_batch(sys.pb, p, seed, get_or(p, "trials", 2));
  for (std::size_t i = 0; i < fs.size(); ++i)
    rep.merge(check_asymptotics(sys.pb, fs[i], sys.mv, param(p, "horizon", 4.0), param(p, "factor", 0.05)),
              "trial_" + std::to_string(i + 1) + ".");
  return rep;
}

inline VerificationReport run_lp_bound(const Preset& pr, const json& p, std::uint64_t seed) {
  const auto sys = system_measures(pr, p);
  VerificationReport rep{"lp_bound", pr.name};
  const auto fs = measure_batch(sys.pb, p, seed, get_or(p, "trials", 10));
  for (double q : param_list(p, "exponents", {1.0, 2.0, 4.0}))
    rep.merge(check_lp_bound(sys.pb, sys.mv, q, param(p, "t", 1.0), fs, param(p, "tol", 1e-3)), "p_" + format_number(q) + ".");
  return rep;
}

inline VerificationReport run_domination(const Preset& pr, const json& p, std::uint64_t seed) {
  const auto pb = suite_problem(pr, p);
  return check_domination(pb, measure_batch(pb, p, seed, 1).front(), param_list(p, "times", {0.1, 0.5, 1.0}), param(p, "c_cmp", 10.0));
}

inline VerificationReport run_fixed_points(const Preset& pr, const json& p, std::uint64_t) {
  const auto pb = suite_problem(pr, p);
  const auto a = analyze_coupling(pb.op, grid_points(pb.grid, get_or(p, "stride", 20)));
  return check_fixed_points(pb, a, param_list(p, "times", {0.5, 1.0, 2.0}), param(p, "tol", 1e-4));
}

inline VerificationReport run_gradient_decay(const Preset& pr, const json& p, std::uint64_t seed) {
  const auto sys = system_measures(pr, p);
  return check_gradient_decay(sys.pb, measure_batch(sys.pb, p, seed, 1).front(), sys.mu, param(p, "horizon", 4.0),
                              param(p, "factor", 0.05));
}

}  // namespace detail

inline const std::map<std::string, CheckFn>& check_registry() {
  static const std::map<std::string, CheckFn> reg = {
      {"hypotheses", detail::run_hypotheses},
      {"coupling_analysis", detail::run_coupling_analysis},
      {"comparison", detail::run_comparison},
      {"sup_bound", detail::run_sup_bound},
      {"derivative_decay", detail::run_derivative_decay},
      {"interpolation_estimate", detail::run_interpolation_estimate},
      {"evolution_law", detail::run_evolution_law},
      {"continuity_in_data", detail::run_continuity_in_data},
      {"joint_continuity", detail::run_joint_continuity},
      {"duhamel", detail::run_duhamel},
      {"expanding_domain", detail::run_expanding_domain},
      {"resolvent_agreement", detail::run_resolvent_agreement},
      {"resolvent_identity", detail::run_resolvent_identity},
      {"resolvent_bound", detail::run_resolvent_bound},
      {"schauder_elliptic", detail::run_schauder_elliptic},
      {"schauder_parabolic", detail::run_schauder_parabolic},
      {"interpolation_inequality", detail::run_interpolation_inequality},
      {"stationary_density", detail::run_stationary_density},
      {"invariance", detail::run_invariance},
      {"asymptotics", detail::run_asymptotics},
      {"lp_bound", detail::run_lp_bound},
      {"domination", detail::run_domination},
      {"fixed_points", detail::run_fixed_points},
      {"gradient_decay", detail::run_gradient_decay},
  };
  return reg;
}

inline SuiteManifest manifest_from_json(const json& j) {
  return detail::config_guard("manifest", [&] {
    require(j.is_object(), ErrorKind::ConfigError, "manifest must be a JSON object");
    for (const auto& [key, _] : j.items())
      require(key == "seed" || key == "items", ErrorKind::ConfigError, "unknown manifest key '" + key + "'");
    SuiteManifest m;
    m.seed = detail::get_or<std::uint64_t>(j, "seed", 1);
    const auto items = detail::get_or(j, "items", json::array());
    require(items.is_array(), ErrorKind::ConfigError, "'items' must be an array");
    const auto names = preset_names();
    for (const auto& it : items) {
      require(it.is_object(), ErrorKind::ConfigError, "manifest items are objects");
      SuiteItem item{it.at("check").get<std::string>(), it.at("preset").get<std::string>(), detail::get_or(it, "params", json::object())};
      require(check_registry().count(item.check) == 1, ErrorKind::ConfigError, "unknown check '" + item.check + "'");
      require(std::find(names.begin(), names.end(), item.preset) != names.end(), ErrorKind::ConfigError,
              "unknown preset '" + item.preset + "'");
      require(item.params.is_object(), ErrorKind::ConfigError, "'params' must be an object");
      m.items.push_back(std::move(item));
    }
    return m;
  });
}

inline json to_json(const SuiteManifest& m) {
  json items = json::array();
  for (const auto& it : m.items) items.push_back({{"check", it.check}, {"preset", it.preset}, {"params", it.params}});
  return json{{"seed", m.seed}, {"items", items}};
}

/// One executed item: a report, or the error that stopped it.
struct SuiteEntry {
  SuiteItem item;
  std::uint64_t seed = 0;
  std::optional<VerificationReport> report;
  std::string error;

  std::string verdict() const { return report ? report->verdict() : "ERROR"; }
};

struct SuiteSummary {
  std::uint64_t seed = 1;
  std::vector<SuiteEntry> entries;

  int count(const std::string& verdict) const {
    return static_cast<int>(std::count_if(entries.begin(), entries.end(), [&](const SuiteEntry& e) { return e.verdict() == verdict; }));
  }
  bool all_pass() const { return count("PASS") == static_cast<int>(entries.size()); }
  int exit_code() const { return all_pass() ? 0 : 1; }
};

inline SuiteEntry run_item(const SuiteItem& item, std::uint64_t seed) {
  SuiteEntry e{item, seed, std::nullopt, {}};
  try {
    const auto pr = load_preset(item.preset);
    e.report = check_registry().at(item.check)(pr, item.params, seed);
    e.report->check = item.check;
    e.report->preset = item.preset;
  } catch (const std::exception& ex) {
    e.error = ex.what();
  }
  return e;
}

/// Worker count from WCSYS_WORKERS, at least 1.
inline int suite_workers_from_env() {
  const char* v = std::getenv("WCSYS_WORKERS");
  if (!v) return 1;
  try {
    return std::max(1, std::stoi(v));
  } catch (const std::exception&) {
    fail(ErrorKind::ConfigError, std::string("WCSYS_WORKERS must be an integer, got '") + v + "'");
  }
}

/// Runs every item; items are independent and may run concurrently, results
/// keep manifest order.
inline SuiteSummary run_suite(const SuiteManifest& m, int workers = 1) {
  SuiteSummary out;
  out.seed = m.seed;
  out.entries.resize(m.items.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next++) < m.items.size();) out.entries[i] = run_item(m.items[i], m.seed + i);
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(m.items.size())));
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return out;
}

inline std::string report_file_name(std::size_t index, const SuiteItem& item) {
  char num[16];
  std::snprintf(num, sizeof num, "%03zu", index);
  return std::string(num) + "_" + item.check + "_" + item.preset + ".json";
}

inline json entry_json(const SuiteEntry& e) {
  if (e.report) return to_json(*e.report);
  return json{{"check", e.item.check}, {"preset", e.item.preset}, {"verdict", "ERROR"}, {"error", e.error}};
}

inline void write_summary_csv(std::ostream& out, const SuiteSummary& s) {
  out << "item,check,preset,verdict,binding_criterion,worst_violation,tolerance\n";
  for (std::size_t i = 0; i < s.entries.size(); ++i) {
    const auto& e = s.entries[i];
    out << i << ',' << e.item.check << ',' << e.item.preset << ',' << e.verdict() << ',';
    if (e.report && e.report->binding())
      out << e.report->binding()->name << ',' << format_number(e.report->worst_violation()) << ',' << format_number(e.report->tolerance());
    else
      out << ",,";
    out << '\n';
  }
}

inline json index_json(const SuiteSummary& s) {
  json items = json::array();
  for (std::size_t i = 0; i < s.entries.size(); ++i) {
    const auto& e = s.entries[i];
    json row{{"item", i}, {"check", e.item.check}, {"preset", e.item.preset}, {"seed", e.seed}, {"verdict", e.verdict()},
             {"report", "reports/" + report_file_name(i, e.item)}};
    if (e.report) {
      row["binding_criterion"] = e.report->binding() ? e.report->binding()->name : "";
      row["worst_violation"] = format_number(e.report->worst_violation());
      row["tolerance"] = format_number(e.report->tolerance());
    } else {
      row["error"] = e.error;
    }
    items.push_back(row);
  }
  return json{{"seed", s.seed},
              {"verdict", s.all_pass() ? "PASS" : "FAIL"},
              {"counts", {{"PASS", s.count("PASS")}, {"FAIL", s.count("FAIL")}, {"ERROR", s.count("ERROR")}}},
              {"items", items}};
}

/// Writes reports/, summary.csv and index.json under dir.
inline void write_suite_outputs(const SuiteSummary& s, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "reports", ec);
  require(!ec, ErrorKind::ConfigError, "cannot create '" + dir + "/reports': " + ec.message());
  for (std::size_t i = 0; i < s.entries.size(); ++i) {
    std::ofstream out(fs::path(dir) / "reports" / report_file_name(i, s.entries[i].item));
    out << entry_json(s.entries[i]).dump(2) << '\n';
  }
  std::ofstream csv(fs::path(dir) / "summary.csv");
  require(static_cast<bool>(csv), ErrorKind::ConfigError, "cannot write '" + dir + "/summary.csv'");
  write_summary_csv(csv, s);
  std::ofstream idx(fs::path(dir) / "index.json");
  idx << index_json(s).dump(2) << '\n';
}

}  // namespace wcsys
