#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "wcsys/grid.hpp"

namespace wcsys {

/// Parameters of fixed-seed smooth random data: low-order trigonometric sums
/// scaled into [-amplitude, amplitude].
struct RandomFieldSpec {
  int components = 1;
  int dim = 1;
  double amplitude = 1.0;
  int modes = 4;             ///< terms per component
  double bandwidth = 1.0;    ///< largest angular frequency, in units of pi / scale
  double scale = 1.0;        ///< length scale of the oscillations
  std::optional<double> window{};  ///< localize to the box of this radius
};

/// Smooth compactly supported bump exp(1 - 1/(1 - s^2)) on |s| < 1.
inline double smooth_bump(double s) {
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

inline Field random_smooth_field(const RandomFieldSpec& spec, std::uint64_t seed) {
  struct Term {
    double amp, phase;
    std::vector<double> freq;
  };
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<std::vector<Term>> terms(static_cast<std::size_t>(spec.components));
  std::vector<double> norm(static_cast<std::size_t>(spec.components), 0.0);
  for (int k = 0; k < spec.components; ++k)
    for (int j = 0; j < spec.modes; ++j) {
      Term t{U(rng), std::numbers::pi * U(rng), std::vector<double>(static_cast<std::size_t>(spec.dim))};
      for (double& w : t.freq) w = spec.bandwidth * std::numbers::pi / spec.scale * U(rng);
      norm[static_cast<std::size_t>(k)] += std::abs(t.amp);
      terms[static_cast<std::size_t>(k)].push_back(std::move(t));
    }
  return Field{spec.components, [terms, norm, spec](int k, std::span<const double> x) {
                 double v = 0.0;
                 for (const auto& t : terms[static_cast<std::size_t>(k)]) {
                   double arg = t.phase;
                   for (std::size_t a = 0; a < x.size(); ++a) arg += t.freq[a] * x[a];
                   v += t.amp * std::cos(arg);
                 }
                 v *= spec.amplitude / std::max(norm[static_cast<std::size_t>(k)], 1e-300);
                 if (spec.window)
                   for (double xa : x) v *= smooth_bump(xa / *spec.window);
                 return v;
               }};
}

/// Scales u so that max_k sup |u_k| = 1 (zero stays zero).
inline GridFunction normalized(GridFunction u) {
  const double s = sup_norm(u);
  if (s > 0.0) u *= 1.0 / s;
  return u;
}

}  // namespace wcsys
