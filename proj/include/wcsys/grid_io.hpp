#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "wcsys/grid.hpp"

// Grid functions on disk: a CSV with columns component,x_1,...,x_d,value
// (components 1-based, points in storage order) and a JSON sidecar
// {"R": radius, "n_g": points per axis, "m": components, "d": dimension}.

namespace wcsys {

namespace detail {

inline std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline void write_grid_csv(std::ostream& out, const GridFunction& u) {
  const auto& g = u.grid();
  out << "component";
  for (int a = 1; a <= g.dim(); ++a) out << ",x_" << a;
  out << ",value\n";
  std::vector<double> x(static_cast<std::size_t>(g.dim()));
  for (int k = 0; k < u.components(); ++k)
    for (std::size_t p = 0; p < g.size(); ++p) {
      g.coords(p, x);
      out << k + 1;
      for (double v : x) out << ',' << detail::fmt17(v);
      out << ',' << detail::fmt17(u(k, p)) << '\n';
    }
}

inline nlohmann::json grid_sidecar(const GridFunction& u) {
  return {{"R", u.grid().radius()}, {"n_g", u.grid().points_per_axis()}, {"m", u.components()}, {"d", u.grid().dim()}};
}

/// Writes <stem>.csv and <stem>.json.
inline void write_grid_function(const std::string& stem, const GridFunction& u) {
  std::ofstream csv(stem + ".csv");
  require(static_cast<bool>(csv), ErrorKind::ConfigError, "cannot write '" + stem + ".csv'");
  write_grid_csv(csv, u);
  std::ofstream side(stem + ".json");
  side << grid_sidecar(u).dump(2) << '\n';
}

inline GridFunction read_grid_csv(std::istream& in, const nlohmann::json& sidecar) {
  const UniformGrid g(BoxDomain(sidecar.at("R").get<double>(), sidecar.at("d").get<int>()), sidecar.at("n_g").get<int>());
  const int m = sidecar.at("m").get<int>();
  GridFunction u(g, m);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::ConfigError, "grid CSV is empty");
  const std::size_t cols = static_cast<std::size_t>(g.dim()) + 2;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> fields;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) fields.push_back(std::stod(cell));
    require(fields.size() == cols, ErrorKind::ConfigError, "grid CSV row " + std::to_string(row + 2) + " has wrong width");
    const int k = static_cast<int>(fields.front()) - 1;
    const std::size_t p = row % g.size();
    require(k == static_cast<int>(row / g.size()) && k < m, ErrorKind::ConfigError, "grid CSV rows out of order");
    u(k, p) = fields.back();
    ++row;
  }
  require(row == g.size() * static_cast<std::size_t>(m), ErrorKind::ConfigError, "grid CSV has the wrong number of rows");
  return u;
}

inline GridFunction read_grid_function(const std::string& stem) {
  std::ifstream side(stem + ".json"), csv(stem + ".csv");
  require(side && csv, ErrorKind::ConfigError, "cannot open '" + stem + "'.csv/.json");
  return read_grid_csv(csv, nlohmann::json::parse(side));
}

}  // namespace wcsys
