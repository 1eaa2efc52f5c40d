// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "wcsys/wcsys.hpp"

using namespace wcsys;
namespace fs = std::filesystem;

namespace {

// Tolerances of the acceptance criteria.
constexpr double kExact = 1e-10;             // 1: eigenvalues and kernels
constexpr double kCouplingSeconds = 1.0;     // 1: runtime
constexpr double kComparisonConst = 10.0;    // 2: violation <= c (h^2 + dt)
constexpr double kComparisonSeconds = 60.0;  // 2: runtime per preset
constexpr double kSupRatio = 1e-3;           // 3: ratio <= 1 + this
constexpr int kSupTrials = 5;                // 3
constexpr double kSlopeTol = 0.15;           // 4
constexpr double kHeatSlopeLow = -0.65, kHeatSlopeHigh = -0.35;
constexpr double kSchemeConst = 10.0;        // 5: residual <= c dt (t - s)
constexpr double kHalving = 1.7;             // 5 and 6
constexpr double kAgreementFloor = 5e-3;     // 6: max(5e-3, 10 linear_tol)
constexpr double kIdentityTol = 1e-4;        // 6
constexpr double kBoundTol = 1e-3;           // 6
constexpr int kBoundTrials = 10;             // 6
constexpr double kManufacturedTol = 1e-3;    // 7
constexpr double kRatioStability = 0.2;      // 7
constexpr double kDensityTol = 1e-4;         // 8
constexpr double kInvarianceTol = 5e-3;      // 8
constexpr double kAsymptoticFactor = 0.05;   // 8
constexpr double kLpTol = 1e-3;              // 8
constexpr int kLpTrials = 10;                // 8
constexpr double kFixedPointTol = 1e-4;      // 8

struct Outcome {
  bool pass = true;
  std::vector<std::string> lines;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    lines.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  void report(const VerificationReport& r) {
    const auto* b = r.binding();
    check(r.pass(), r.check + " on " + r.preset + (b ? ": " + b->name + " = " + num(b->value) + " (limit " + num(b->threshold) + ")" : ""));
  }
  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Field random_field(const Problem& pb, std::uint64_t seed, std::optional<double> window = std::nullopt) {
  RandomFieldSpec spec;
  spec.components = pb.op.components();
  spec.dim = pb.op.dim();
  spec.window = window;
  return random_smooth_field(spec, seed);
}

GridFunction random_datum(const Problem& pb, std::uint64_t seed, std::optional<double> window = std::nullopt) {
  return normalized(sample(pb.grid, random_field(pb, seed, window)));
}

double up_to_sign(const Eigen::VectorXd& got, Eigen::VectorXd want) {
  want.normalize();
  return std::min((got.normalized() - want).cwiseAbs().maxCoeff(), (got.normalized() + want).cwiseAbs().maxCoeff());
}

Outcome coupling_exactness() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto pr = load_preset("example2-gamma0");
  const auto a = analyze_coupling(pr.op, grid_points(pr.grid(), 20));
  const double s2 = std::sqrt(2.0), s3 = std::sqrt(3.0);
  const double want[3] = {0.0, -3.0 + s2, -3.0 - s2};
  double eig = 0.0;
  for (const auto& s : a.samples)
    for (const auto* ev : {&s.eigenvalues, &s.positive_eigenvalues})
      for (int i = 0; i < 3; ++i) eig = std::max(eig, std::abs((*ev)(i) - std::complex<double>(want[i], 0.0)));
  const double eta = up_to_sign(a.eta, Eigen::Vector3d(-s3, 1.0, s3));
  const double xi = up_to_sign(a.xi, Eigen::Vector3d(s3, 1.0, s3));
  double sample_kernels = 0.0;
  for (const auto& s : a.samples)
    sample_kernels = std::max({sample_kernels, up_to_sign(s.eta, Eigen::Vector3d(-s3, 1.0, s3)), up_to_sign(s.xi, Eigen::Vector3d(s3, 1.0, s3))});
  const double secs = seconds_since(t0);
  o.check(!a.samples.empty() && eig <= kExact, "eigenvalues of C and C^P at " + std::to_string(a.samples.size()) + " points: max error " + Outcome::num(eig));
  o.check(eta <= kExact && xi <= kExact && sample_kernels <= kExact,
          "kernels: eta error " + Outcome::num(eta) + ", xi error " + Outcome::num(xi) + ", pointwise " + Outcome::num(sample_kernels));
  o.check(secs < kCouplingSeconds, "runtime " + Outcome::num(secs) + " s");
  return o;
}

Outcome comparison_principle() {
  Outcome o;
  std::uint64_t seed = 200;
  for (const auto& name : preset_names()) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto pb = load_preset(name).problem();
    o.report(check_comparison_refinement(pb, random_field(pb, ++seed), kComparisonConst));
    const double secs = seconds_since(t0);
    o.check(secs < kComparisonSeconds, name + " runtime " + Outcome::num(secs) + " s");
  }
  return o;
}

Outcome sup_bound() {
  Outcome o;
  std::uint64_t seed = 300;
  for (const auto& name : preset_names()) {
    const auto pr = load_preset(name);
    if (!pr.expected.M_J) continue;
    const auto pb = pr.problem();
    VerificationReport rep{"sup_bound", name};
    for (int i = 0; i < kSupTrials; ++i) rep.merge(check_sup_bound(pb, random_datum(pb, ++seed), {}, kSupRatio), "f" + std::to_string(i + 1) + ".");
    o.report(rep);
  }
  return o;
}

Outcome derivative_decay() {
  Outcome o;
  DecaySettings st;
  st.slope_tol = kSlopeTol;
  o.check(st.lag_max / st.lag_min >= 10.0, "lag window [" + Outcome::num(st.lag_min) + ", " + Outcome::num(st.lag_max) + "]");
  for (const char* name : {"example1-d1m2", "example2-gamma0"}) {
    const auto pb = decay_problem(load_preset(name).problem(), st);
    for (auto [h, k] : {std::pair{0, 1}, {0, 2}, {1, 2}, {0, 3}}) {
      const auto f = sample(pb.grid, decay_datum(h, 1, pb.op.components(), 0.25, 5.0 * pb.grid.spacing()));
      const auto fit = measure_derivative_decay(pb, f, h, k, st);
      o.check(fit.pass(), std::string(name) + " (h,k)=(" + std::to_string(h) + "," + std::to_string(k) + "): slope " + Outcome::num(fit.slope) +
                              " target " + Outcome::num(fit.target));
    }
  }
  const auto heat = decay_problem(load_preset("heat-scalar").problem(), st);
  const auto fit = measure_derivative_decay(heat, sample(heat.grid, decay_datum(0, 1, 1, 0.25, 5.0 * heat.grid.spacing())), 0, 1, st);
  o.check(fit.slope >= kHeatSlopeLow && fit.slope <= kHeatSlopeHigh, "heat (0,1) slope " + Outcome::num(fit.slope));
  return o;
}

Outcome evolution_law() {
  Outcome o;
  std::uint64_t seed = 500;
  for (const char* name : {"example1-d1m2", "example2-gamma0", "decoupled-negative-coupling"}) {
    const auto pb = load_preset(name).problem();
    const auto rep = check_evolution_law(pb, random_datum(pb, ++seed), pb.s + 0.3537 * (pb.T - pb.s), kSchemeConst);
    o.report(rep);
    o.check(rep.measured.at("halving_ratio") >= kHalving, std::string(name) + " halving ratio " + Outcome::num(rep.measured.at("halving_ratio")));
  }
  return o;
}

Outcome resolvent_consistency() {
  Outcome o;
  std::uint64_t seed = 600;
  for (const char* name : {"example1-d1m2", "example2-gamma0", "ou-scalar", "example1-d2m2"}) {
    const auto pb = load_preset(name).problem();
    const double M = frozen_row_sum_bound(pb.op, pb.s, pb.grid);
    const auto f = random_datum(pb, ++seed);
    const auto agree = check_resolvent_agreement(pb, pb.s, M + 1.0, f);
    o.report(agree);
    const auto* diff = &agree.criteria.front();
    o.check(diff->name == "method_difference" && diff->threshold == std::max(kAgreementFloor, 10.0 * pb.cfg.linear_tol) * sup_norm(f),
            std::string(name) + " agreement limit is max(5e-3, 10 linear_tol) ||f||");
    if (pb.op.dim() > 1) continue;
    o.report(check_resolvent_identity(pb, pb.s, 2.0 * M + 1.0, 2.0 * M + 3.0, f, kIdentityTol));
    o.report(check_resolvent_bound(pb, pb.s, M + 1.0, kBoundTrials, ++seed, ResolventMethod::Direct, kBoundTol));
  }
  return o;
}

Outcome schauder() {
  Outcome o;
  const auto pb = load_preset("example1-d1m2").problem();
  const auto u0 = gaussian_profile(2);
  double err = 0.0;
  for (double t : {0.0, 0.6}) err = std::max(err, manufactured_elliptic_error(pb, u0, t, 2.0));
  o.check(err <= kManufacturedTol, "manufactured elliptic solution: C^2 error " + Outcome::num(err));
  auto fine = pb;
  fine.cfg.theta = 0.5;
  fine.cfg.dt = 0.005;
  const double perr = manufactured_parabolic_error(fine, u0);
  o.check(perr <= kManufacturedTol, "manufactured parabolic solution: C^2 error " + Outcome::num(perr));
  SchauderSettings st;
  st.stability = kRatioStability;
  o.report(schauder_experiment(pb, modulated(random_field(pb, 710)), 2.0, st));
  o.report(parabolic_schauder_experiment(pb, random_field(pb, 711, 4.0), modulated(random_field(pb, 712, 4.0)), st));
  return o;
}

Outcome invariant_measures() {
  Outcome o;
  {
    const auto ou = load_preset("ou-scalar").op;
    const UniformGrid g(BoxDomain(6.0, 1), 401);
    const auto mu = scalar_invariant_density_stationary(ou, g);
    const double err = l1_distance(mu, scalar_invariant_density_1d(ou.q(0, 0, 0), ou.b(0, 0), g));
    o.check(err <= kDensityTol, "stationary density vs closed form: L1 error " + Outcome::num(err));
  }
  const auto pb = load_preset("example2-gamma0").problem();
  const auto a = analyze_coupling(pb.op, grid_points(pb.grid, 20));
  const auto scalar = pb.op.component(0, false);
  const auto mu = scalar_invariant_density_stationary(scalar, pb.grid);
  const double err = l1_distance(mu, scalar_invariant_density_1d(scalar.q(0, 0, 0), scalar.b(0, 0), pb.grid));
  o.check(err <= kDensityTol, "example2 shared density vs closed form: L1 error " + Outcome::num(err));
  const auto mv = build_system_measures(a, mu);
  std::vector<GridFunction> fs;
  for (int i = 0; i < kLpTrials; ++i) fs.push_back(sample(pb.grid, random_field(pb, 800 + i, 0.5 * pb.grid.radius())));
  o.report(check_invariance(pb, mv, fs, {0.1, 0.5, 1.0, 2.0}, kInvarianceTol));
  for (int i = 0; i < 2; ++i) o.report(check_asymptotics(pb, fs[i], mv, 4.0, kAsymptoticFactor));
  for (double p : {1.0, 2.0, 4.0}) o.report(check_lp_bound(pb, mv, p, 1.0, fs, kLpTol));
  o.report(check_domination(pb, fs[0], {0.1, 0.5, 1.0}, kComparisonConst));
  o.report(check_fixed_points(pb, a, {0.1, 0.5, 1.0, 2.0}, kFixedPointTol));
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  Outcome o;
  const fs::path manifest = fs::path(WCSYS_SOURCE_DIR) / "manifests" / "default.json";
  const auto m = manifest_from_json(read_json_file(manifest.string()));
  const auto root = fs::temp_directory_path() / "wcsys_acceptance";
  fs::remove_all(root);
  const auto first = run_suite(m, 1);
  write_suite_outputs(first, (root / "a").string());
  write_suite_outputs(run_suite(m, 1), (root / "b").string());
  o.check(first.all_pass(), "shipped manifest: " + std::to_string(first.count("PASS")) + " of " + std::to_string(first.entries.size()) + " items pass");
  std::size_t csv = 0, other = 0, differ = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file()) continue;
    (e.path().extension() == ".csv" ? csv : other) += 1;
    if (slurp(e.path()) != slurp(root / "b" / fs::relative(e.path(), root / "a"))) ++differ;
  }
  o.check(csv > 0 && differ == 0, std::to_string(csv) + " CSV and " + std::to_string(other) + " JSON outputs, " + std::to_string(differ) + " differ");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"coupling analysis exactness", coupling_exactness},
      {"comparison principle", comparison_principle},
      {"sup bound", sup_bound},
      {"derivative decay", derivative_decay},
      {"evolution law", evolution_law},
      {"resolvent consistency", resolvent_consistency},
      {"Schauder experiments", schauder},
      {"invariant measures", invariant_measures},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.lines.push_back(std::string("FAIL error: ") + e.what());
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %zu %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, seconds_since(t0));
    for (const auto& line : o.lines) std::printf("       %s\n", line.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
