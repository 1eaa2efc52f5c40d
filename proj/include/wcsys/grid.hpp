#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "wcsys/error.hpp"

namespace wcsys {

/// Box [-R, R]^d; the exhausting convex domain of the truncated problems.
struct BoxDomain {
  double radius = 1.0;
  int dim = 1;

  BoxDomain() = default;
  BoxDomain(double r, int d) : radius(r), dim(d) {
    require(r > 0.0 && std::isfinite(r), ErrorKind::InvalidArgument, "box radius must be positive");
    require(d >= 1, ErrorKind::InvalidArgument, "dimension must be >= 1");
  }
  bool operator==(const BoxDomain&) const = default;
};

/// Uniform tensor grid with an odd number of points per axis, so that the
/// origin is a grid point.
class UniformGrid {
 public:
  UniformGrid() = default;
  UniformGrid(BoxDomain domain, int points_per_axis) : domain_(domain), n_(points_per_axis) {
    require(n_ >= 5 && n_ % 2 == 1, ErrorKind::InvalidArgument, "points per axis must be odd and >= 5");
    h_ = 2.0 * domain_.radius / static_cast<double>(n_ - 1);
    size_ = 1;
    for (int a = 0; a < domain_.dim; ++a) size_ *= static_cast<std::size_t>(n_);
  }

  /// Grid over the box of radius n_cells_half * spacing with the given spacing.
  static UniformGrid with_spacing(double radius, int dim, double spacing) {
    const double cells = radius / spacing;
    const long half = std::lround(cells);
    require(half >= 2 && std::abs(cells - static_cast<double>(half)) < 1e-9 * std::max(1.0, cells),
            ErrorKind::NotNested, "radius is not an integer multiple of the spacing");
    return UniformGrid(BoxDomain(radius, dim), static_cast<int>(2 * half + 1));
  }

  const BoxDomain& domain() const { return domain_; }
  int dim() const { return domain_.dim; }
  int points_per_axis() const { return n_; }
  double spacing() const { return h_; }
  double radius() const { return domain_.radius; }
  std::size_t size() const { return size_; }

  std::size_t stride(int axis) const {
    std::size_t s = 1;
    for (int a = 0; a < axis; ++a) s *= static_cast<std::size_t>(n_);
    return s;
  }

  int index_along(std::size_t flat, int axis) const {
    return static_cast<int>((flat / stride(axis)) % static_cast<std::size_t>(n_));
  }

  double coordinate(int i) const { return -domain_.radius + h_ * static_cast<double>(i); }

  void coords(std::size_t flat, std::span<double> x) const {
    for (int a = 0; a < dim(); ++a) {
      x[static_cast<std::size_t>(a)] = coordinate(static_cast<int>(flat % static_cast<std::size_t>(n_)));
      flat /= static_cast<std::size_t>(n_);
    }
  }

  std::vector<double> coords(std::size_t flat) const {
    std::vector<double> x(static_cast<std::size_t>(dim()));
    coords(flat, x);
    return x;
  }

  /// Sup-norm radius of a grid point.
  double box_norm(std::size_t flat) const {
    double r = 0.0;
    for (int a = 0; a < dim(); ++a) r = std::max(r, std::abs(coordinate(index_along(flat, a))));
    return r;
  }

  /// Twice as fine over the same box.
  UniformGrid refined() const { return UniformGrid(domain_, 2 * n_ - 1); }

  bool operator==(const UniformGrid& o) const { return domain_ == o.domain_ && n_ == o.n_; }

 private:
  BoxDomain domain_{};
  int n_ = 0;
  double h_ = 0.0;
  std::size_t size_ = 0;
};

/// m-component field over a grid, stored component-major.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(UniformGrid grid, int m, double fill = 0.0)
      : grid_(std::move(grid)), m_(m), data_(static_cast<std::size_t>(m) * grid_.size(), fill) {
    require(m >= 1, ErrorKind::InvalidArgument, "component count must be >= 1");
  }

  const UniformGrid& grid() const { return grid_; }
  int components() const { return m_; }
  std::size_t points() const { return grid_.size(); }

  double& operator()(int k, std::size_t p) { return data_[static_cast<std::size_t>(k) * grid_.size() + p]; }
  double operator()(int k, std::size_t p) const { return data_[static_cast<std::size_t>(k) * grid_.size() + p]; }

  std::span<double> component(int k) {
    return {data_.data() + static_cast<std::size_t>(k) * grid_.size(), grid_.size()};
  }
  std::span<const double> component(int k) const {
    return {data_.data() + static_cast<std::size_t>(k) * grid_.size(), grid_.size()};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  GridFunction& operator+=(const GridFunction& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  GridFunction& operator-=(const GridFunction& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  GridFunction& operator*=(double a) {
    for (double& v : data_) v *= a;
    return *this;
  }
  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(double s, GridFunction a) { return a *= s; }

  GridFunction abs() const {
    GridFunction out = *this;
    for (double& v : out.data_) v = std::abs(v);
    return out;
  }

 private:
  void check_same(const GridFunction& o) const {
    require(grid_ == o.grid_ && m_ == o.m_, ErrorKind::InvalidArgument, "grid functions live on different grids");
  }

  UniformGrid grid_{};
  int m_ = 0;
  std::vector<double> data_;
};

/// Analytic vector field x -> (f_1(x), ..., f_m(x)) used for initial data
/// and right-hand sides.
struct Field {
  int components = 1;
  std::function<double(int k, std::span<const double> x)> eval;
};

/// Time-dependent analytic field (t, x) -> f_k(t, x).
struct TimeField {
  int components = 1;
  std::function<double(double t, int k, std::span<const double> x)> eval;

  Field at(double t) const {
    auto e = eval;
    return Field{components, [e, t](int k, std::span<const double> x) { return e(t, k, x); }};
  }
};

inline GridFunction sample(const UniformGrid& grid, const Field& f) {
  GridFunction out(grid, f.components);
  std::vector<double> x(static_cast<std::size_t>(grid.dim()));
  for (std::size_t p = 0; p < grid.size(); ++p) {
    grid.coords(p, x);
    for (int k = 0; k < f.components; ++k) out(k, p) = f.eval(k, x);
  }
  require(out.all_finite(), ErrorKind::NonFinite, "sampled field has non-finite values");
  return out;
}

inline Field constant_field(std::vector<double> values) {
  const int m = static_cast<int>(values.size());
  return Field{m, [v = std::move(values)](int k, std::span<const double>) { return v[static_cast<std::size_t>(k)]; }};
}

/// Trapezoid-rule weights of the tensor grid.
inline std::vector<double> trapezoid_weights(const UniformGrid& grid) {
  std::vector<double> w(grid.size(), 1.0);
  const int n = grid.points_per_axis();
  for (std::size_t p = 0; p < grid.size(); ++p) {
    double wp = 1.0;
    for (int a = 0; a < grid.dim(); ++a) {
      const int i = grid.index_along(p, a);
      wp *= (i == 0 || i == n - 1) ? 0.5 * grid.spacing() : grid.spacing();
    }
    w[p] = wp;
  }
  return w;
}

inline double trapezoid(const UniformGrid& grid, std::span<const double> values) {
  const auto w = trapezoid_weights(grid);
  double s = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p) s += w[p] * values[p];
  return s;
}

inline double sup_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

/// max_k sup_x |u_k(x)|
inline double sup_norm(const GridFunction& u) { return sup_norm(std::span<const double>(u.data())); }

}  // namespace wcsys
