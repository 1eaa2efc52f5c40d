// wcsys: command-line front end.
//
//   wcsys validate <preset>
//   wcsys evolve <config.json>
//   wcsys verify <manifest.json> [--workers N]
//   wcsys resolvent <config.json> --lambda L [--tbar t] [--method direct|quadrature|both]
//   wcsys invariant <preset> [--radius R] [--points n]
//   wcsys decay <preset> [--data-order h] [--order k]
//
// Every subcommand takes --out <dir> (default "out"). Exit status: 0 when all
// checks pass, 1 when any fails, 2 on configuration errors.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "wcsys/wcsys.hpp"

namespace fs = std::filesystem;
using namespace wcsys;

namespace {

constexpr int kPass = 0, kFail = 1, kConfig = 2;

fs::path prepare(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorKind::ConfigError, "cannot create '" + dir + "': " + ec.message());
  return fs::path(dir);
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  require(static_cast<bool>(out), ErrorKind::ConfigError, "cannot write '" + p.string() + "'");
  out << j.dump(2) << '\n';
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

json expected_json(const Preset& pr) {
  json j = json::object();
  const auto& ex = pr.expected;
  auto put = [&](const char* key, const auto& e) {
    if (e) j[key] = {{"value", e->value}, {"source", to_string(e->source)}};
  };
  put("eta", ex.eta);
  put("xi", ex.xi);
  put("eigenvalues", ex.eigenvalues);
  put("M_J", ex.M_J);
  return j;
}

int cmd_validate(const std::string& name, const fs::path& out) {
  const auto pr = make_preset(name);
  json j{{"preset", name}, {"expected", expected_json(pr)}};
  int code = kPass;
  try {
    validate_preset(pr);
    j["verdict"] = "PASS";
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::SelfValidationFailed) throw;
    j["verdict"] = "FAIL";
    j["error"] = e.what();
    code = kFail;
  }
  json sets = json::array();
  for (auto s : pr.declared) sets.push_back(detail::set_name(s));
  j["declared"] = sets;
  j["M_J"] = row_sum_bound(pr.op, pr.sampling()).M;
  j["operator"] = operator_to_json(pr.op);
  write_json(prepare(out.string()) / ("preset_" + name + ".json"), j);
  std::cout << name << ": " << j["verdict"].get<std::string>() << '\n';
  return code;
}

int cmd_evolve(const std::string& path, const fs::path& out) {
  const auto rc = run_config_from_json(read_json_file(path));
  const auto& pb = rc.problem;
  auto snaps = rc.snapshots;
  if (snaps.empty()) snaps.push_back(pb.T);
  const auto res = solve_cauchy(pb.op, pb.s, pb.T, sample(pb.grid, rc.datum), pb.cfg, snaps);
  const auto dir = prepare(out.string());
  std::ofstream table(dir / "snapshots.csv");
  table << "index,t,sup_norm,file\n";
  for (std::size_t i = 0; i < res.times.size(); ++i) {
    const auto stem = "u_" + std::to_string(i);
    write_grid_function((dir / stem).string(), res.snapshots[i]);
    table << i << ',' << format_number(res.times[i]) << ',' << format_number(sup_norm(res.snapshots[i])) << ',' << stem << ".csv\n";
  }
  std::cout << rc.name << ": " << res.times.size() << " snapshots written to " << dir.string() << '\n';
  return kPass;
}

int cmd_verify(const std::string& path, const fs::path& out, int workers) {
  const auto m = manifest_from_json(read_json_file(path));
  if (workers <= 0) workers = suite_workers_from_env();
  const auto s = run_suite(m, workers);
  write_suite_outputs(s, prepare(out.string()).string());
  for (std::size_t i = 0; i < s.entries.size(); ++i) {
    const auto& e = s.entries[i];
    std::cout << e.verdict() << ' ' << e.item.check << ' ' << e.item.preset;
    if (e.report && e.report->binding())
      std::cout << ' ' << e.report->binding()->name << '=' << format_number(e.report->worst_violation())
                << " (tol " << format_number(e.report->tolerance()) << ')';
    else if (!e.report)
      std::cout << ' ' << e.error;
    std::cout << '\n';
  }
  std::cout << s.count("PASS") << " passed, " << s.count("FAIL") << " failed, " << s.count("ERROR") << " errors\n";
  return s.exit_code();
}

int cmd_resolvent(const std::string& path, double lambda, std::optional<double> tbar, const std::string& method, const fs::path& out) {
  const auto rc = run_config_from_json(read_json_file(path));
  const auto& pb = rc.problem;
  const double t = tbar.value_or(pb.s);
  const auto f = sample(pb.grid, rc.datum);
  const auto dir = prepare(out.string());
  if (method == "both") {
    const auto rep = check_resolvent_agreement(pb, t, lambda, f);
    write_json(dir / "resolvent_agreement.json", to_json(rep));
    std::cout << rep.verdict() << " resolvent_agreement " << rep.binding()->name << '=' << format_number(rep.worst_violation()) << '\n';
    return rep.pass() ? kPass : kFail;
  }
  require(method == "direct" || method == "quadrature", ErrorKind::ConfigError, "method is direct, quadrature or both");
  const auto r = resolvent(method == "direct" ? ResolventMethod::Direct : ResolventMethod::Quadrature, pb.op, t, lambda, f, pb.cfg);
  write_grid_function((dir / "u").string(), r.u);
  write_json(dir / "resolvent.json", {{"lambda", r.lambda},
                                      {"tbar", r.tbar},
                                      {"method", to_string(r.method)},
                                      {"horizon", r.horizon ? json(*r.horizon) : json()},
                                      {"step", r.step ? json(*r.step) : json()},
                                      {"tail_bound", r.tail_bound},
                                      {"residual", r.residual},
                                      {"sup_norm", sup_norm(r.u)}});
  std::cout << "R(" << format_number(lambda) << ")f: sup " << format_number(sup_norm(r.u)) << ", residual " << format_number(r.residual)
            << '\n';
  return kPass;
}

int cmd_invariant(const std::string& name, std::optional<double> radius, std::optional<int> points, const fs::path& out) {
  const auto pr = load_preset(name);
  auto pb = pr.problem();
  if (radius || points)
    pb.grid = UniformGrid(BoxDomain(radius.value_or(pb.grid.radius()), pb.op.dim()), points.value_or(pb.grid.points_per_axis()));
  const auto a = analyze_coupling(pb.op, grid_points(pb.grid, 20));
  const auto mu = scalar_invariant_density_stationary(pb.op.component(0, false), pb.grid);
  const auto dir = prepare(out.string());
  write_grid_function((dir / "density").string(), mu);
  json j{{"preset", name}, {"eta", to_vector(a.eta)}, {"xi", to_vector(a.xi)}, {"margin", a.margin}, {"left_half_plane", a.left_half_plane},
         {"zero_simple", a.zero_simple}, {"eta_constant", a.eta_constant}, {"irreducible", a.irreducible}};
  if (!a.samples.empty()) j["eigenvalues"] = to_vector(a.samples.front().eigenvalues.real());
  if (pb.op.dim() == 1) {
    const auto scalar = pb.op.component(0, false);
    j["density_l1_error"] = l1_distance(mu, scalar_invariant_density_1d(scalar.q(0, 0, 0), scalar.b(0, 0), pb.grid));
  }
  write_json(dir / "measures.json", j);
  std::cout << name << ": eta = " << json(to_vector(a.eta)).dump() << ", margin " << format_number(a.margin) << '\n';
  return a.pass() ? kPass : kFail;
}

int cmd_decay(const std::string& name, int h, int k, const fs::path& out) {
  const auto pr = load_preset(name);
  const json params = json::object();
  const auto st = detail::decay_settings(params);
  const auto pb = detail::decay_setup(pr, params, st);
  const auto fit = measure_derivative_decay(pb, sample(pb.grid, detail::decay_field(pb, h)), h, k, st);
  const auto rep = decay_report(fit, "derivative_decay", name);
  const auto dir = prepare(out.string());
  std::ofstream csv(dir / "decay.csv");
  csv << "lag,weighted_norm\n";
  for (std::size_t i = 0; i < fit.lags.size(); ++i) csv << format_number(fit.lags[i]) << ',' << format_number(fit.norms[i]) << '\n';
  write_json(dir / "decay.json", to_json(rep));
  std::cout << rep.verdict() << " slope " << format_number(fit.slope) << " target " << format_number(fit.target) << '\n';
  return rep.pass() ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly coupled parabolic systems: solvers and verification suite"};
  app.require_subcommand(1);
  std::string out = "out";
  app.add_option("--out", out, "output directory")->capture_default_str();

  std::string preset, path, method = "direct";
  int workers = 0, h = 0, k = 1;
  double lambda = 0.0;
  std::optional<double> tbar, radius;
  std::optional<int> points;

  auto* validate = app.add_subcommand("validate", "load a preset and reproduce its expected values");
  validate->add_option("preset", preset)->required();
  auto* evolve = app.add_subcommand("evolve", "solve the Cauchy problem described by a config file");
  evolve->add_option("config", path)->required()->check(CLI::ExistingFile);
  auto* verify = app.add_subcommand("verify", "run a suite manifest");
  verify->add_option("manifest", path)->required()->check(CLI::ExistingFile);
  verify->add_option("--workers", workers, "concurrent items (default: WCSYS_WORKERS or 1)");
  auto* res = app.add_subcommand("resolvent", "resolvent of the frozen operator applied to the config datum");
  res->add_option("config", path)->required()->check(CLI::ExistingFile);
  res->add_option("--lambda", lambda)->required();
  res->add_option("--tbar", tbar);
  res->add_option("--method", method)->check(CLI::IsMember({"direct", "quadrature", "both"}))->capture_default_str();
  auto* inv = app.add_subcommand("invariant", "coupling kernels and stationary density of a preset");
  inv->add_option("preset", preset)->required();
  inv->add_option("--radius", radius);
  inv->add_option("--points", points);
  auto* decay = app.add_subcommand("decay", "derivative decay fit for a preset");
  decay->add_option("preset", preset)->required();
  decay->add_option("--data-order", h, "derivative order h of the datum norm")->capture_default_str();
  decay->add_option("--order", k, "derivative order k of the solution norm")->capture_default_str();
  for (auto* sub : {validate, evolve, verify, res, inv, decay}) sub->add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfig;
  }

  try {
    if (*validate) return cmd_validate(preset, out);
    if (*evolve) return cmd_evolve(path, out);
    if (*verify) return cmd_verify(path, out, workers);
    if (*res) return cmd_resolvent(path, lambda, tbar, method, out);
    if (*inv) return cmd_invariant(preset, radius, points, out);
    if (*decay) return cmd_decay(preset, h, k, out);
  } catch (const Error& e) {
    std::cerr << "wcsys: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::ConfigError:
      case ErrorKind::UnknownPreset:
      case ErrorKind::InvalidArgument: return kConfig;
      default: return kFail;
    }
  } catch (const std::exception& e) {
    std::cerr << "wcsys: " << e.what() << '\n';
    return kFail;
  }
  return kConfig;
}
