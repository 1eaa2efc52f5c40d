#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "wcsys/error.hpp"

namespace wcsys {

/// Time profile multiplying a coefficient. Sinusoidal profiles are
/// 1 + amp*sin(freq*t + phase) so that a small amplitude is a small
/// perturbation of the constant profile.
class TimeFactor {
 public:
  struct Constant {};
  struct Sinusoidal {
    double amp = 0.0;
    double freq = 1.0;
    double phase = 0.0;
  };
  /// Piecewise-linear interpolation through (t, value) knots, constant
  /// extrapolation outside the knot range.
  struct Table {
    std::vector<std::pair<double, double>> knots;
  };

  TimeFactor() = default;
  TimeFactor(Sinusoidal s) : form_(s) {}
  TimeFactor(Table t) : form_(std::move(t)) {
    auto& k = std::get<Table>(form_).knots;
    require(!k.empty(), ErrorKind::InvalidArgument, "time factor table must not be empty");
    std::sort(k.begin(), k.end());
    for (const auto& [t0, v] : k)
      require(std::isfinite(t0) && std::isfinite(v), ErrorKind::InvalidArgument, "non-finite table knot");
  }

  static TimeFactor constant() { return {}; }
  static TimeFactor sinusoidal(double amp, double freq, double phase = 0.0) {
    return TimeFactor(Sinusoidal{amp, freq, phase});
  }
  static TimeFactor table(std::vector<std::pair<double, double>> knots) {
    return TimeFactor(Table{std::move(knots)});
  }

  double operator()(double t) const {
    if (std::holds_alternative<Constant>(form_)) return 1.0;
    if (const auto* s = std::get_if<Sinusoidal>(&form_)) return 1.0 + s->amp * std::sin(s->freq * t + s->phase);
    const auto& k = std::get<Table>(form_).knots;
    if (t <= k.front().first) return k.front().second;
    if (t >= k.back().first) return k.back().second;
    auto hi = std::upper_bound(k.begin(), k.end(), t, [](double v, const auto& p) { return v < p.first; });
    auto lo = hi - 1;
    const double w = (t - lo->first) / (hi->first - lo->first);
    return (1.0 - w) * lo->second + w * hi->second;
  }

  bool is_constant() const { return std::holds_alternative<Constant>(form_); }
  bool is_tabulated() const { return std::holds_alternative<Table>(form_); }
  const auto& form() const { return form_; }

 private:
  std::variant<Constant, Sinusoidal, Table> form_{Constant{}};
};

/// Coefficient of the radial-power class:
///   value(t, x) = coef * time(t) * [x_axis] * (1 + |x|^2)^power
/// The axis factor is optional and expresses drifts of the form
/// -theta * x_i * (1 + |x|^2)^beta.
class CoefficientExpr {
 public:
  CoefficientExpr() = default;
  CoefficientExpr(double coef, double power = 0.0, TimeFactor time = {}, std::optional<int> axis = std::nullopt)
      : coef_(coef), power_(power), time_(std::move(time)), axis_(axis) {
    require(std::isfinite(coef), ErrorKind::InvalidArgument, "coefficient must be finite");
    require(power >= 0.0 && std::isfinite(power), ErrorKind::InvalidArgument, "radial power must be >= 0");
    require(!axis || *axis >= 0, ErrorKind::InvalidArgument, "axis index must be >= 0");
  }

  static CoefficientExpr zero() { return {}; }

  double coef() const { return coef_; }
  double power() const { return power_; }
  const TimeFactor& time_factor() const { return time_; }
  std::optional<int> axis() const { return axis_; }

  bool is_zero() const { return coef_ == 0.0; }
  bool is_autonomous() const { return time_.is_constant(); }

  double time_value(double t) const { return coef_ * time_(t); }

  double operator()(double t, std::span<const double> x) const {
    if (coef_ == 0.0) return 0.0;
    double v = time_value(t) * std::pow(radial(x), power_);
    if (axis_) v *= x[static_cast<std::size_t>(*axis_)];
    return v;
  }

  /// Radial factor (1 + |x|^2)^power; with value_from this splits
  /// operator() so the factor can be cached per grid point.
  double radial_factor(std::span<const double> x) const { return std::pow(radial(x), power_); }

  /// Same result as operator()(t, x) given time_value(t) and radial_factor(x).
  double value_from(double time_value, double radial_factor, std::span<const double> x) const {
    if (coef_ == 0.0) return 0.0;
    double v = time_value * radial_factor;
    if (axis_) v *= x[static_cast<std::size_t>(*axis_)];
    return v;
  }

  /// Closed-form spatial derivative D_{a_1...a_n} for n = axes.size() <= 3.
  double derivative(double t, std::span<const double> x, std::span<const int> axes) const {
    require(axes.size() <= 3, ErrorKind::InvalidArgument, "derivative order above 3");
    if (coef_ == 0.0) return 0.0;
    return time_value(t) * spatial_derivative(x, axes);
  }

  /// Same spatial shape with the time profile evaluated at t.
  CoefficientExpr frozen(double t) const {
    CoefficientExpr out = *this;
    out.coef_ = time_value(t);
    out.time_ = TimeFactor::constant();
    return out;
  }

 private:
  static double radial(std::span<const double> x) {
    double r = 1.0;
    for (double xi : x) r += xi * xi;
    return r;
  }

  // Derivatives of P(x) = r^p with r = 1 + |x|^2.
  double power_derivative(std::span<const double> x, std::span<const int> a) const {
    const double p = power_;
    const double r = radial(x);
    auto X = [&](int i) { return x[static_cast<std::size_t>(i)]; };
    auto del = [](int i, int j) { return i == j ? 1.0 : 0.0; };
    switch (a.size()) {
      case 0: return std::pow(r, p);
      case 1: return 2.0 * p * X(a[0]) * std::pow(r, p - 1.0);
      case 2:
        return 2.0 * p * del(a[0], a[1]) * std::pow(r, p - 1.0) +
               4.0 * p * (p - 1.0) * X(a[0]) * X(a[1]) * std::pow(r, p - 2.0);
      default: {
        const int i = a[0], j = a[1], k = a[2];
        return 4.0 * p * (p - 1.0) * (del(i, j) * X(k) + del(i, k) * X(j) + del(j, k) * X(i)) * std::pow(r, p - 2.0) +
               8.0 * p * (p - 1.0) * (p - 2.0) * X(i) * X(j) * X(k) * std::pow(r, p - 3.0);
      }
    }
  }

  double spatial_derivative(std::span<const double> x, std::span<const int> a) const {
    if (!axis_) return power_derivative(x, a);
    // Leibniz rule for x_axis * P(x); x_axis is linear so only one factor can hit it.
    const int ax = *axis_;
    double v = x[static_cast<std::size_t>(ax)] * power_derivative(x, a);
    for (std::size_t drop = 0; drop < a.size(); ++drop) {
      if (a[drop] != ax) continue;
      int rest[3];
      std::size_t n = 0;
      for (std::size_t i = 0; i < a.size(); ++i)
        if (i != drop) rest[n++] = a[i];
      v += power_derivative(x, std::span<const int>(rest, n));
    }
    return v;
  }

  double coef_ = 0.0;
  double power_ = 0.0;
  TimeFactor time_{};
  std::optional<int> axis_{};
};

}  // namespace wcsys
