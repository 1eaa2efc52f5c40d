#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "wcsys/evolution.hpp"
#include "wcsys/report.hpp"
#include "wcsys/stencil.hpp"

namespace wcsys {

namespace detail {

inline SolverConfig with_dt(SolverConfig c, double dt) {
  c.dt = dt;
  return c;
}

inline std::vector<double> evenly_spaced(double s, double T, int n) {
  std::vector<double> out;
  for (int i = 1; i <= n; ++i) out.push_back(s + (T - s) * i / n);
  return out;
}

inline double sup_in(const GridFunction& u, const std::optional<BoxDomain>& window) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.data().size(); ++i)
    if (in_window(u.grid(), i % u.points(), window)) s = std::max(s, std::abs(u.data()[i]));
  return s;
}

}  // namespace detail

/// Sampled M_J over [s, T] on the problem grid.
inline double sampled_row_sum_bound(const Problem& pb, double s, double T, int n_times = 21) {
  return row_sum_bound(pb.op, Sampling::over(s, T, n_times, pb.grid)).M;
}

/// |G(t,s)f| <= G^P(t,s)|f| pointwise, up to c_cmp (h^2 + dt).
inline VerificationReport check_comparison(const Problem& pb, const GridFunction& f, std::vector<double> snapshots = {},
                                           double c_cmp = 10.0) {
  VerificationReport rep{"comparison", pb.name};
  if (snapshots.empty()) snapshots = detail::evenly_spaced(pb.s, pb.T, 10);
  const auto& g = f.grid();
  const double dt = pb.cfg.step_for(g, pb.T - pb.s);
  const auto cfg = detail::with_dt(pb.cfg, dt);
  const auto u = solve_cauchy(pb.op, pb.s, pb.T, f, cfg, snapshots);
  const auto uP = solve_cauchy(derive_auxiliary(pb.op), pb.s, pb.T, f.abs(), cfg, snapshots);
  double worst = 0.0;
  for (std::size_t i = 0; i < u.times.size(); ++i) {
    const auto &a = u.snapshots[i], &b = uP.snapshots[i];
    for (int k = 0; k < f.components(); ++k)
      for (std::size_t p = 0; p < g.size(); ++p) {
        const double v = std::abs(a(k, p)) - b(k, p);
        if (v > worst) {
          worst = v;
          rep.witness = Witness{u.times[i], g.coords(p), k};
        }
      }
  }
  const double h = g.spacing();
  rep.add("violation", worst, c_cmp * (h * h + dt));
  rep.measured["h"] = h;
  rep.measured["dt"] = dt;
  return rep;
}

/// Comparison at the problem resolution and after halving h and dt; the
/// violation must not grow under refinement.
inline VerificationReport check_comparison_refinement(const Problem& pb, const Field& f, double c_cmp = 10.0) {
  VerificationReport rep{"comparison", pb.name};
  const double dt = pb.cfg.step_for(pb.grid, pb.T - pb.s);
  const auto coarse = check_comparison(pb.with_config(detail::with_dt(pb.cfg, dt)), sample(pb.grid, f), {}, c_cmp);
  const auto fine_pb = pb.on(pb.grid.refined()).with_config(detail::with_dt(pb.cfg, 0.5 * dt));
  const auto fine = check_comparison(fine_pb, sample(fine_pb.grid, f), {}, c_cmp);
  rep.merge(coarse, "coarse.");
  rep.merge(fine, "fine.");
  const double vc = coarse.criteria.front().value, vf = fine.criteria.front().value;
  rep.add("refinement_growth", vf - std::max(vc, 1e-12), 0.0);
  return rep;
}

/// max_k sup |u_k(t)| <= e^{M_J (t-s)} max_k ||f_k|| (1 + tol_rel) at every snapshot.
inline VerificationReport check_sup_bound(const Problem& pb, const GridFunction& f, std::vector<double> snapshots = {},
                                          double tol_rel = 1e-3) {
  VerificationReport rep{"sup_bound", pb.name};
  if (snapshots.empty()) snapshots = detail::evenly_spaced(pb.s, pb.T, 10);
  const double M = sampled_row_sum_bound(pb, pb.s, pb.T);
  const double f0 = sup_norm(f);
  const auto u = solve_cauchy(pb.op, pb.s, pb.T, f, pb.cfg, snapshots);
  double ratio = 0.0;
  for (std::size_t i = 0; i < u.times.size(); ++i) {
    const double bound = std::exp(M * (u.times[i] - pb.s)) * f0;
    const double r = bound > 0.0 ? sup_norm(u.snapshots[i]) / bound : (sup_norm(u.snapshots[i]) > 0.0 ? INFINITY : 0.0);
    if (r > ratio) {
      ratio = r;
      rep.witness = Witness{u.times[i], {}, 0};
    }
  }
  rep.add("sharpness_ratio", ratio, 1.0 + tol_rel);
  rep.measured["M_J"] = M;
  rep.measured["f_sup"] = f0;
  return rep;
}

/// Log-log fit of a decaying norm against the lag.
struct DecayFit {
  std::vector<double> lags;
  std::vector<double> norms;  ///< already divided by e^{Mbar lag}
  double slope = 0.0;
  double intercept = 0.0;
  double target = 0.0;  ///< -(k - h)/2
  double slope_tol = 0.15;
  double Mbar = 0.0;
  double datum_norm = 0.0;  ///< ||f|| in the weaker norm

  bool pass() const { return slope >= target - slope_tol; }
};

struct DecaySettings {
  double lag_min = 1e-4;
  double lag_max = 1e-3;
  int lags = 10;
  double slope_tol = 0.15;
  std::optional<BoxDomain> window{};  ///< defaults to the inner half box
  PairCap cap{};                      ///< for fractional orders
};

namespace detail {

inline std::vector<double> geometric_lags(const DecaySettings& st) {
  require(st.lags >= 8, ErrorKind::InsufficientDecade, "decay fits need at least 8 lags");
  require(st.lag_min > 0.0 && st.lag_max >= 10.0 * st.lag_min * (1 - 1e-12), ErrorKind::InsufficientDecade,
          "lag window must span at least one decade");
  std::vector<double> lags;
  for (int i = 0; i < st.lags; ++i) lags.push_back(st.lag_min * std::pow(st.lag_max / st.lag_min, double(i) / (st.lags - 1)));
  return lags;
}

inline void fit(DecayFit& out) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(out.lags.size());
  for (std::size_t i = 0; i < out.lags.size(); ++i) {
    const double x = std::log(out.lags[i]), y = std::log(out.norms[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  out.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  out.intercept = (sy - out.slope * sx) / n;
}

/// Shared driver: norm(u) at geometric lags after s, divided by e^{Mbar lag}.
template <class Norm>
DecayFit decay_fit(const Problem& pb, double s, const GridFunction& f, double weak, double strong, const DecaySettings& st,
                   Norm&& norm) {
  DecayFit out;
  out.lags = geometric_lags(st);
  out.target = -(strong - weak) / 2.0;
  out.slope_tol = st.slope_tol;
  const double dt = pb.cfg.step_for(f.grid(), st.lag_max);
  require(st.lag_min >= 20.0 * dt * (1 - 1e-9), ErrorKind::InvalidArgument, "smallest lag must be at least 20 time steps");
  const double M = sampled_row_sum_bound(pb, s, s + st.lag_max, 11);
  out.Mbar = 0.5 * (1.0 + M + 2.0 * std::max(M, 0.0));
  const auto res = solve_cauchy(pb.op, s, s + st.lag_max, f, detail::with_dt(pb.cfg, dt), [&] {
    std::vector<double> t;
    for (double l : out.lags) t.push_back(s + l);
    return t;
  }());
  for (double l : out.lags) out.norms.push_back(norm(res.at(s + l)) * std::exp(-out.Mbar * l));
  fit(out);
  return out;
}

}  // namespace detail

/// Initial data for decay fits with O(1) C^h norm and steep features of
/// width `width`: a product of tanh plateaus on (-a, a) for h = 0, its
/// log-cosh antiderivative for h = 1. Component k is scaled by 1/(k+1).
inline Field decay_datum(int h, int dim, int components, double half_width, double width) {
  require(h == 0 || h == 1, ErrorKind::InvalidArgument, "decay data exist for h = 0 and h = 1");
  auto plateau = [=](double x) { return 0.5 * (std::tanh((x + half_width) / width) - std::tanh((x - half_width) / width)); };
  auto ramp = [=](double x) {
    // log cosh(z) = |z| + log1p(exp(-2|z|)) - log 2, stable for large |z|
    auto lc = [](double z) { return std::abs(z) + std::log1p(std::exp(-2.0 * std::abs(z))) - std::log(2.0); };
    return 0.5 * width * (lc((x + half_width) / width) - lc((x - half_width) / width));
  };
  return Field{components, [=](int k, std::span<const double> x) {
                 double v = 1.0 / (k + 1);
                 for (int a = 0; a < dim; ++a) v *= h == 0 ? plateau(x[static_cast<std::size_t>(a)]) : ramp(x[static_cast<std::size_t>(a)]);
                 return v;
               }};
}

/// Box of radius `radius` with `points` per axis and dt = lag_min / 20, so
/// the datum edge (5h) sits below the smallest diffusion length sqrt(lag_min).
inline Problem decay_problem(const Problem& pb, const DecaySettings& st = {}, double radius = 1.0, int points = 2001) {
  auto out = pb.on(UniformGrid(BoxDomain(radius, pb.grid.dim()), points));
  out.cfg.dt = st.lag_min / 20.0;
  return out;
}

/// Relative change of ||f||_{C^h} on the window when the grid is refined once.
inline double datum_refinement_change(const Field& f, const UniformGrid& g, int h, const std::optional<BoxDomain>& window) {
  const double a = ck_norm(sample(g, f), h, window), b = ck_norm(sample(g.refined(), f), h, window);
  return std::abs(b - a) / std::max(a, 1e-300);
}

/// e^{-Mbar d} ||G(s+d, s) f||_{C^k} against d; the bound allows decay like d^{-(k-h)/2}.
inline DecayFit measure_derivative_decay(const Problem& pb, const GridFunction& f, int h, int k, DecaySettings st = {}) {
  require(0 <= h && h <= k && k <= 3, ErrorKind::InvalidArgument, "need 0 <= h <= k <= 3");
  const auto window = st.window ? st.window : std::optional<BoxDomain>(pb.inner_half());
  auto fit = detail::decay_fit(pb, pb.s, f, h, k, st, [&](const GridFunction& u) { return ck_norm(u, k, window); });
  fit.datum_norm = ck_norm(f, h, window);
  return fit;
}

inline VerificationReport decay_report(const DecayFit& fit, const std::string& check, const std::string& preset) {
  VerificationReport rep{check, preset};
  rep.add("slope_deficit", fit.target - fit.slope, fit.slope_tol);
  rep.measured["slope"] = fit.slope;
  rep.measured["intercept"] = fit.intercept;
  rep.measured["target"] = fit.target;
  rep.measured["Mbar"] = fit.Mbar;
  rep.measured["datum_norm"] = fit.datum_norm;
  rep.measured["max_norm_ratio"] =
      fit.datum_norm > 0 ? *std::max_element(fit.norms.begin(), fit.norms.end()) / fit.datum_norm : 0.0;
  return rep;
}

/// Fractional-order version for the frozen semigroup: ||T_tbar(tau) f||_{C^theta}
/// against tau with target -(theta - beta)/2.
inline DecayFit measure_interpolation_decay(const Problem& pb, double tbar, double theta, double beta, const GridFunction& f,
                                            DecaySettings st = {}) {
  require(0.0 <= beta && beta <= theta && theta <= 3.0, ErrorKind::InvalidArgument, "need 0 <= beta <= theta <= 3");
  auto frozen = pb;
  frozen.op = pb.op.frozen(tbar);
  const auto window = st.window ? st.window : std::optional<BoxDomain>(pb.inner_half());
  auto fit = detail::decay_fit(frozen, 0.0, f, beta, theta, st,
                               [&](const GridFunction& u) { return holder_norm(u, theta, st.cap, window); });
  fit.datum_norm = holder_norm(f, beta, st.cap, window);
  return fit;
}

inline VerificationReport check_interpolation_estimates(const Problem& pb, double tbar, double theta, double beta,
                                                        const GridFunction& f, DecaySettings st = {}) {
  auto rep = decay_report(measure_interpolation_decay(pb, tbar, theta, beta, f, st), "interpolation_estimate", pb.name);
  rep.notes["pair_cap"] = "pairs up to " + format_number(st.cap.resolve(f.grid().spacing())) + " apart";
  return rep;
}

namespace detail {

inline double composition_residual(const Problem& pb, const GridFunction& f, double r, double dt) {
  const double s = pb.s, t = pb.T;
  if (r <= s || r >= t) return 0.0;
  const auto cfg = with_dt(pb.cfg, dt);
  const auto direct = solve_cauchy(pb.op, s, t, f, cfg).final();
  const auto mid = solve_cauchy(pb.op, s, r, f, cfg).final();
  const auto comp = solve_cauchy(pb.op, r, t, mid, cfg).final();
  return sup_norm(direct - comp);
}

}  // namespace detail

/// ||G(t,r)G(r,s)f - G(t,s)f|| <= c dt (t - s), and the residual shrinks
/// like dt when dt is halved.
inline VerificationReport check_evolution_law(const Problem& pb, const GridFunction& f, double r, double c_scheme = 10.0) {
  require(r >= pb.s && r <= pb.T, ErrorKind::InvalidArgument, "intermediate time outside [s, t]");
  VerificationReport rep{"evolution_law", pb.name};
  const double dt = pb.cfg.step_for(f.grid(), pb.T - pb.s);
  const double res = detail::composition_residual(pb, f, r, dt);
  const double res_half = detail::composition_residual(pb, f, r, 0.5 * dt);
  const double scale = std::max(sup_norm(f), 1e-300);
  rep.add("residual", res, c_scheme * dt * (pb.T - pb.s) * scale);
  // Halving dt must cut the residual by 1.7 or more; exact compositions pass trivially.
  rep.add("halving_quotient", res_half <= 1e-14 * scale ? 0.0 : res_half / res, 1.0 / 1.7);
  rep.measured["dt"] = dt;
  rep.measured["residual_half_dt"] = res_half;
  rep.measured["halving_ratio"] = res_half > 0 ? res / res_half : INFINITY;
  return rep;
}

/// eps_n = sup over snapshots and the window of |G f_n - G f|; must decrease
/// and end below tol.
inline VerificationReport check_continuity_in_data(const Problem& pb, const GridFunction& f, const std::vector<GridFunction>& fn,
                                                   std::optional<BoxDomain> window = std::nullopt, double tol = 1e-3) {
  VerificationReport rep{"continuity_in_data", pb.name};
  if (!window) window = pb.inner_half();
  const auto snaps = detail::evenly_spaced(pb.s, pb.T, 5);
  const auto u = solve_cauchy(pb.op, pb.s, pb.T, f, pb.cfg, snaps);
  std::vector<double> eps;
  for (const auto& g : fn) {
    const auto v = solve_cauchy(pb.op, pb.s, pb.T, g, pb.cfg, snaps);
    double e = 0.0;
    for (std::size_t i = 0; i < v.times.size(); ++i) e = std::max(e, detail::sup_in(v.snapshots[i] - u.snapshots[i], window));
    eps.push_back(e);
    rep.measured["eps_" + std::to_string(eps.size())] = e;
  }
  double growth = 0.0;
  for (std::size_t i = 1; i < eps.size(); ++i) growth = std::max(growth, eps[i] - eps[i - 1]);
  rep.add("eps_growth", growth, 1e-14);
  rep.add("eps_last", eps.empty() ? 0.0 : eps.back(), tol);
  return rep;
}

struct JointContinuity {
  std::vector<double> spacing;
  std::vector<double> modulus;
};

/// Modulus in t of (t, tau) -> T_t(tau) f on three refinements of a
/// three-point t lattice starting at t0.
inline JointContinuity joint_continuity_moduli(const Problem& pb, const GridFunction& f, double t0, double t1,
                                               const std::vector<double>& taus, int levels = 3) {
  JointContinuity out;
  const auto window = pb.inner_half();
  const double tau_max = *std::max_element(taus.begin(), taus.end());
  const double dt = pb.cfg.step_for(f.grid(), tau_max);
  std::map<double, EvolutionResult> cache;
  auto run = [&](double t) -> const EvolutionResult& {
    auto it = cache.find(t);
    if (it == cache.end()) it = cache.emplace(t, solve_frozen(pb.op, t, tau_max, f, detail::with_dt(pb.cfg, dt), taus)).first;
    return it->second;
  };
  const double base = 0.5 * (t1 - t0);
  for (int l = 0; l < levels; ++l) {
    const double step = base / std::pow(2.0, l);
    double mod = 0.0;
    for (int j = 0; j < 2; ++j) {
      const auto &a = run(t0 + j * step), &b = run(t0 + (j + 1) * step);
      for (double tau : taus) mod = std::max(mod, detail::sup_in(a.at(tau) - b.at(tau), window));
    }
    out.spacing.push_back(step);
    out.modulus.push_back(mod);
  }
  return out;
}

inline VerificationReport check_joint_continuity(const Problem& pb, const GridFunction& f, double t0, double t1,
                                                 const std::vector<double>& taus) {
  VerificationReport rep{"joint_continuity", pb.name};
  const auto jc = joint_continuity_moduli(pb, f, t0, t1, taus);
  double growth = 0.0;
  for (std::size_t i = 1; i < jc.modulus.size(); ++i) {
    // Strict decrease unless the modulus already vanishes.
    const double prev = jc.modulus[i - 1];
    growth = std::max(growth, prev > 1e-14 ? jc.modulus[i] - prev * (1.0 - 1e-9) : jc.modulus[i] - 1e-14);
    rep.measured["modulus_" + std::to_string(i)] = jc.modulus[i - 1];
  }
  rep.measured["modulus_" + std::to_string(jc.modulus.size())] = jc.modulus.back();
  rep.add("modulus_growth", growth, 0.0);
  return rep;
}

/// Variation-of-constants reconstruction of each component from its scalar
/// evolution with the diagonal potential, plus trapezoid quadrature of the
/// off-diagonal coupling; compared against the coupled solve at T.
inline VerificationReport duhamel_check(const Problem& pb, const GridFunction& f, int nodes = 20, double tol = 5e-3,
                                        const TimeField* forcing = nullptr) {
  VerificationReport rep{"duhamel", pb.name};
  const auto& g = f.grid();
  const int m = f.components();
  const double s = pb.s, T = pb.T;
  const auto cfg = detail::with_dt(pb.cfg, pb.cfg.step_for(g, T - s));
  std::vector<double> r;
  for (int i = 0; i <= nodes; ++i) r.push_back(s + (T - s) * i / nodes);
  r.back() = T;
  const auto u = solve_cauchy(pb.op, s, T, f, cfg, r, forcing);
  const auto plain = pb.op.with_mode(CouplingMode::Plain);

  // Integrand before propagation: sum_{j != k} c_kj(r, x) u_j(r, x) + g_k(r, x).
  auto integrand = [&](double ri) {
    const auto& ur = u.at(ri);
    GridFunction out(g, m);
    std::vector<double> x(static_cast<std::size_t>(g.dim()));
    const auto gr = forcing ? sample(g, forcing->at(ri)) : GridFunction(g, m);
    for (std::size_t p = 0; p < g.size(); ++p) {
      g.coords(p, x);
      const auto C = plain.raw_coupling(ri, x);
      for (int k = 0; k < m; ++k) {
        double v = gr(k, p);
        for (int j = 0; j < m; ++j)
          if (j != k) v += C(k, j) * ur(j, p);
        out(k, p) = v;
      }
    }
    return out;
  };

  double worst = 0.0;
  for (int k = 0; k < m; ++k) {
    const auto scalar = plain.component(k, true);
    auto single = [&](const GridFunction& w) {
      GridFunction out(g, 1);
      std::copy(w.component(k).begin(), w.component(k).end(), out.component(0).begin());
      return out;
    };
    auto recon = solve_cauchy(scalar, s, T, single(f), cfg, r).final();
    const double dr = (T - s) / nodes;
    for (int i = 0; i <= nodes; ++i) {
      const double w = (i == 0 || i == nodes) ? 0.5 * dr : dr;
      const auto h = single(integrand(r[static_cast<std::size_t>(i)]));
      if (i == nodes) {
        recon += w * h;
      } else {
        recon += w * solve_cauchy(scalar, r[static_cast<std::size_t>(i)], T, h, cfg, {}).final();
      }
    }
    for (std::size_t p = 0; p < g.size(); ++p) {
      const double diff = std::abs(recon(0, p) - u.final()(k, p));
      if (diff > worst) {
        worst = diff;
        rep.witness = Witness{T, g.coords(p), k};
      }
    }
  }
  rep.add("reconstruction_error", worst, tol);
  rep.measured["nodes"] = nodes;
  return rep;
}

}  // namespace wcsys
