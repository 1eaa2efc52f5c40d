#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "wcsys/evolution.hpp"
#include "wcsys/presets.hpp"
#include "wcsys/random_field.hpp"

// JSON run configuration.
//
//   {
//     "preset": "example1-d1m2",                       (or an explicit operator below)
//     "operator": {
//       "d": 1, "m": 2,
//       "Q": [{"k": 0, "i": 0, "j": 0, "coef": 1.0, "power": 0.5, "time": "const"}],
//       "b": [{"k": 0, "i": 0, "coef": -1.0, "power": 0.5, "axis": 0}],
//       "C": [{"k": 0, "h": 1, "coef": 2.0, "time": {"sin": {"amp": 0.2, "freq": 2, "phase": 0}}}]
//     },
//     "domain": {"radius": 8, "points": 401},
//     "interval": {"s": 0, "T": 1},
//     "solver": {"theta": 1, "dt": 0.01, "linear_tol": 1e-10, "max_linear_iters": 1000},
//     "datum": {"type": "random", "seed": 1, "amplitude": 1, "modes": 4, "bandwidth": 1, "scale": 1, "window": 4},
//     "snapshots": [0.25, 0.5]
//   }
//
// "time" is "const", {"sin": {...}} or {"table": [[t, v], ...]}. Datum types
// are "random", "constant" ({"values": [...]}) and "gaussian" ({"width": w,
// "values": [...]}).

namespace wcsys {

using nlohmann::json;

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

/// Runs `fn`, turning JSON access errors into ConfigError.
template <class F>
auto config_guard(const std::string& where, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigError, where + ": " + e.what());
  }
}

}  // namespace detail

inline TimeFactor time_factor_from_json(const json& j) {
  if (j.is_string()) {
    require(j.get<std::string>() == "const", ErrorKind::ConfigError, "unknown time factor '" + j.get<std::string>() + "'");
    return TimeFactor::constant();
  }
  require(j.is_object() && j.size() == 1, ErrorKind::ConfigError, "time factor must be \"const\", {\"sin\": ...} or {\"table\": ...}");
  if (j.contains("sin")) {
    const auto& s = j.at("sin");
    return TimeFactor::sinusoidal(s.at("amp").get<double>(), detail::get_or(s, "freq", 1.0), detail::get_or(s, "phase", 0.0));
  }
  if (j.contains("table")) {
    std::vector<std::pair<double, double>> knots;
    for (const auto& row : j.at("table")) {
      require(row.is_array() && row.size() == 2, ErrorKind::ConfigError, "table rows are [t, value] pairs");
      knots.emplace_back(row[0].get<double>(), row[1].get<double>());
    }
    return TimeFactor::table(std::move(knots));
  }
  fail(ErrorKind::ConfigError, "unknown time factor form " + j.dump());
}

inline json time_factor_to_json(const TimeFactor& tf) {
  if (tf.is_constant()) return "const";
  if (const auto* s = std::get_if<TimeFactor::Sinusoidal>(&tf.form()))
    return json{{"sin", {{"amp", s->amp}, {"freq", s->freq}, {"phase", s->phase}}}};
  json rows = json::array();
  for (const auto& [t, v] : std::get<TimeFactor::Table>(tf.form()).knots) rows.push_back({t, v});
  return json{{"table", rows}};
}

inline CoefficientExpr coefficient_from_json(const json& j) {
  std::optional<int> axis;
  if (j.contains("axis")) axis = j.at("axis").get<int>();
  return CoefficientExpr(j.at("coef").get<double>(), detail::get_or(j, "power", 0.0),
                         j.contains("time") ? time_factor_from_json(j.at("time")) : TimeFactor::constant(), axis);
}

inline json coefficient_to_json(const CoefficientExpr& e) {
  json j{{"coef", e.coef()}, {"power", e.power()}, {"time", time_factor_to_json(e.time_factor())}};
  if (e.axis()) j["axis"] = *e.axis();
  return j;
}

inline OperatorFamily operator_from_json(const json& j) {
  return detail::config_guard("operator", [&] {
    const int d = j.at("d").get<int>(), m = j.at("m").get<int>();
    require(d >= 1 && d <= 2, ErrorKind::ConfigError, "operator dimension must be 1 or 2");
    require(m >= 1, ErrorKind::ConfigError, "operator needs at least one component");
    OperatorFamily op(d, m);
    auto index = [](const json& e, const char* key, int bound) {
      const int v = e.at(key).get<int>();
      require(v >= 0 && v < bound, ErrorKind::ConfigError, std::string("index '") + key + "' out of range");
      return v;
    };
    for (const auto& e : detail::get_or(j, "Q", json::array()))
      op.set_q(index(e, "k", m), index(e, "i", d), index(e, "j", d), coefficient_from_json(e));
    for (const auto& e : detail::get_or(j, "b", json::array())) op.set_b(index(e, "k", m), index(e, "i", d), coefficient_from_json(e));
    for (const auto& e : detail::get_or(j, "C", json::array())) op.set_c(index(e, "k", m), index(e, "h", m), coefficient_from_json(e));
    return op;
  });
}

inline json operator_to_json(const OperatorFamily& op) {
  const int d = op.dim(), m = op.components();
  json Q = json::array(), b = json::array(), C = json::array();
  for (int k = 0; k < m; ++k) {
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j)
        if (!op.q(k, i, j).is_zero()) {
          auto e = coefficient_to_json(op.q(k, i, j));
          e["k"] = k, e["i"] = i, e["j"] = j;
          Q.push_back(e);
        }
      if (!op.b(k, i).is_zero()) {
        auto e = coefficient_to_json(op.b(k, i));
        e["k"] = k, e["i"] = i;
        b.push_back(e);
      }
    }
    for (int h = 0; h < m; ++h)
      if (!op.c(k, h).is_zero()) {
        auto e = coefficient_to_json(op.c(k, h));
        e["k"] = k, e["h"] = h;
        C.push_back(e);
      }
  }
  return json{{"d", d}, {"m", m}, {"Q", Q}, {"b", b}, {"C", C}};
}

inline SolverConfig solver_from_json(const json& j) {
  return detail::config_guard("solver", [&] {
    SolverConfig c;
    c.theta = detail::get_or(j, "theta", c.theta);
    if (j.contains("dt")) c.dt = j.at("dt").get<double>();
    c.linear_tol = detail::get_or(j, "linear_tol", c.linear_tol);
    c.max_linear_iters = detail::get_or(j, "max_linear_iters", c.max_linear_iters);
    try {
      c.validate();
    } catch (const Error& e) {
      fail(ErrorKind::ConfigError, std::string("solver: ") + e.what());
    }
    return c;
  });
}

inline Field datum_from_json(const json& j, int m, int d) {
  return detail::config_guard("datum", [&]() -> Field {
    const auto type = detail::get_or<std::string>(j, "type", "random");
    auto values = [&] {
      auto v = j.at("values").get<std::vector<double>>();
      require(static_cast<int>(v.size()) == m, ErrorKind::ConfigError, "datum needs one value per component");
      return v;
    };
    if (type == "random") {
      RandomFieldSpec spec;
      spec.components = m;
      spec.dim = d;
      spec.amplitude = detail::get_or(j, "amplitude", spec.amplitude);
      spec.modes = detail::get_or(j, "modes", spec.modes);
      spec.bandwidth = detail::get_or(j, "bandwidth", spec.bandwidth);
      spec.scale = detail::get_or(j, "scale", spec.scale);
      if (j.contains("window")) spec.window = j.at("window").get<double>();
      return random_smooth_field(spec, detail::get_or<std::uint64_t>(j, "seed", 1));
    }
    if (type == "constant") return constant_field(values());
    if (type == "gaussian") {
      const double w = j.at("width").get<double>();
      require(w > 0.0, ErrorKind::ConfigError, "gaussian width must be positive");
      return Field{m, [v = values(), w](int k, std::span<const double> x) {
                     double r2 = 0.0;
                     for (double a : x) r2 += a * a;
                     return v[static_cast<std::size_t>(k)] * std::exp(-0.5 * r2 / (w * w));
                   }};
    }
    fail(ErrorKind::ConfigError, "unknown datum type '" + type + "'");
  });
}

/// Fully resolved run: operator, grid, interval, solver, datum and snapshots.
struct RunConfig {
  std::string name;
  Problem problem;
  Field datum;
  std::vector<double> snapshots;
};

inline RunConfig run_config_from_json(const json& j) {
  return detail::config_guard("config", [&] {
    require(j.is_object(), ErrorKind::ConfigError, "config must be a JSON object");
    require(j.contains("preset") != j.contains("operator"), ErrorKind::ConfigError, "give exactly one of 'preset' and 'operator'");
    RunConfig rc;
    Problem& pb = rc.problem;
    if (j.contains("preset")) {
      const auto pr = load_preset(j.at("preset").get<std::string>());
      rc.name = pr.name;
      pb = pr.problem();
    } else {
      rc.name = detail::get_or<std::string>(j, "name", "custom");
      pb.name = rc.name;
      pb.op = operator_from_json(j.at("operator"));
      pb.grid = UniformGrid(BoxDomain(8.0, pb.op.dim()), pb.op.dim() == 1 ? 401 : 101);
    }
    if (j.contains("domain")) {
      const auto& dj = j.at("domain");
      const double R = detail::get_or(dj, "radius", pb.grid.radius());
      const int n = detail::get_or(dj, "points", pb.grid.points_per_axis());
      require(R > 0.0 && n >= 5, ErrorKind::ConfigError, "domain needs radius > 0 and at least 5 points");
      pb.grid = UniformGrid(BoxDomain(R, pb.op.dim()), n);
    }
    if (j.contains("interval")) {
      pb.s = detail::get_or(j.at("interval"), "s", pb.s);
      pb.T = detail::get_or(j.at("interval"), "T", pb.T);
      require(pb.T > pb.s, ErrorKind::ConfigError, "interval needs T > s");
    }
    if (j.contains("solver")) pb.cfg = solver_from_json(j.at("solver"));
    rc.datum = datum_from_json(detail::get_or(j, "datum", json::object()), pb.op.components(), pb.op.dim());
    rc.snapshots = detail::get_or(j, "snapshots", std::vector<double>{});
    for (double t : rc.snapshots) require(t >= pb.s && t <= pb.T, ErrorKind::ConfigError, "snapshot outside [s, T]");
    return rc;
  });
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::ConfigError, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigError, "'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace wcsys
