#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "wcsys/grid.hpp"

namespace wcsys {

namespace detail {

/// Finite-difference weights for derivative `order` at offset 0 from the
/// given stencil offsets (Fornberg's recursion).
inline std::vector<double> fd_weights(const std::vector<int>& offsets, int order) {
  const int n = static_cast<int>(offsets.size());
  std::vector<std::vector<double>> c(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(order + 1), 0.0));
  double c1 = 1.0;
  double c4 = offsets[0];
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = offsets[static_cast<std::size_t>(i)];
    for (int j = 0; j < i; ++j) {
      const double c3 = offsets[static_cast<std::size_t>(i)] - offsets[static_cast<std::size_t>(j)];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = c[i][order];
  return w;
}

/// Stencil used at node i of a line of n nodes for derivative `order`:
/// centered where it fits, otherwise a one-sided window of order+2 nodes.
struct LineStencil {
  std::vector<int> offsets;
  std::vector<double> weights;
};

inline LineStencil line_stencil(int i, int n, int order) {
  const int r = (order + 1) / 2;
  std::vector<int> offsets;
  if (i - r >= 0 && i + r <= n - 1) {
    for (int o = -r; o <= r; ++o) offsets.push_back(o);
  } else {
    const int width = order + 2;
    int lo = std::clamp(i - width / 2, 0, n - width);
    for (int j = lo; j < lo + width; ++j) offsets.push_back(j - i);
  }
  return {offsets, fd_weights(offsets, order)};
}

/// Applies the 1-d derivative of the given order along one axis, in place
/// over a flat array of size grid.size().
inline std::vector<double> line_derivative(const UniformGrid& grid, const std::vector<double>& in, int axis, int order) {
  if (order == 0) return in;
  const int n = grid.points_per_axis();
  const std::size_t stride = grid.stride(axis);
  const double scale = std::pow(grid.spacing(), -order);
  std::vector<LineStencil> stencils;
  stencils.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) stencils.push_back(line_stencil(i, n, order));
  std::vector<double> out(in.size(), 0.0);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const int i = grid.index_along(p, axis);
    const auto& st = stencils[static_cast<std::size_t>(i)];
    double acc = 0.0;
    for (std::size_t s = 0; s < st.offsets.size(); ++s) {
      const long q = static_cast<long>(p) + static_cast<long>(st.offsets[s]) * static_cast<long>(stride);
      acc += st.weights[s] * in[static_cast<std::size_t>(q)];
    }
    out[p] = acc * scale;
  }
  return out;
}

inline bool in_window(const UniformGrid& grid, std::size_t p, const std::optional<BoxDomain>& window) {
  return !window || grid.box_norm(p) <= window->radius + 1e-12 * window->radius;
}

/// All sorted multi-indices of the given order over d axes.
inline std::vector<std::vector<int>> sorted_multi_indices(int d, int order) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  auto rec = [&](auto&& self, int start) -> void {
    if (static_cast<int>(cur.size()) == order) {
      out.push_back(cur);
      return;
    }
    for (int a = start; a < d; ++a) {
      cur.push_back(a);
      self(self, a);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

/// Number of distinct orderings of a sorted multi-index.
inline double multiplicity(const std::vector<int>& idx) {
  double fact = 1.0;
  for (std::size_t i = 2; i <= idx.size(); ++i) fact *= static_cast<double>(i);
  std::size_t run = 1;
  for (std::size_t i = 1; i <= idx.size(); ++i) {
    if (i < idx.size() && idx[i] == idx[i - 1]) {
      ++run;
    } else {
      for (std::size_t j = 2; j <= run; ++j) fact /= static_cast<double>(j);
      run = 1;
    }
  }
  return fact;
}

}  // namespace detail

/// D_{a_1 ... a_n} u for n <= 3, each component separately. Centered
/// second-order stencils inside, one-sided second-order stencils where the
/// centered one does not fit; mixed derivatives by composition.
inline GridFunction derivative(const GridFunction& u, const std::vector<int>& axes) {
  const auto& grid = u.grid();
  require(axes.size() <= 3, ErrorKind::InvalidArgument, "derivative order above 3");
  std::vector<int> counts(static_cast<std::size_t>(grid.dim()), 0);
  for (int a : axes) {
    require(a >= 0 && a < grid.dim(), ErrorKind::InvalidArgument, "derivative axis out of range");
    ++counts[static_cast<std::size_t>(a)];
  }
  const int order = static_cast<int>(axes.size());
  require(grid.points_per_axis() >= 2 * order + 1, ErrorKind::GridTooCoarse,
          "grid needs at least 2*order+1 points per axis");
  GridFunction out(grid, u.components());
  for (int k = 0; k < u.components(); ++k) {
    std::vector<double> v(u.component(k).begin(), u.component(k).end());
    for (int a = 0; a < grid.dim(); ++a)
      if (counts[static_cast<std::size_t>(a)] > 0) v = detail::line_derivative(grid, v, a, counts[static_cast<std::size_t>(a)]);
    std::copy(v.begin(), v.end(), out.component(k).begin());
  }
  return out;
}

/// Pointwise |D^j u_k| (Euclidean norm over all ordered multi-indices).
inline GridFunction derivative_magnitude(const GridFunction& u, int order) {
  GridFunction out(u.grid(), u.components());
  if (order == 0) return u.abs();
  for (const auto& idx : detail::sorted_multi_indices(u.grid().dim(), order)) {
    const double mult = detail::multiplicity(idx);
    const auto d = derivative(u, idx);
    for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += mult * d.data()[i] * d.data()[i];
  }
  for (double& v : out.data()) v = std::sqrt(v);
  return out;
}

/// max_k sup_{x in window} |D^j u_k(x)|
inline double derivative_sup(const GridFunction& u, int order, const std::optional<BoxDomain>& window = std::nullopt) {
  const auto mag = derivative_magnitude(u, order);
  double s = 0.0;
  for (int k = 0; k < u.components(); ++k)
    for (std::size_t p = 0; p < u.points(); ++p)
      if (detail::in_window(u.grid(), p, window)) s = std::max(s, mag(k, p));
  return s;
}

/// ||u||_{C^k} = sum_{j<=k} max_k sup |D^j u_k|, optionally restricted to an
/// inner window (derivatives are still taken on the full grid).
inline double ck_norm(const GridFunction& u, int k, const std::optional<BoxDomain>& window = std::nullopt) {
  require(k >= 0 && k <= 3, ErrorKind::InvalidArgument, "C^k norm defined for k in 0..3");
  double s = 0.0;
  for (int j = 0; j <= k; ++j) s += derivative_sup(u, j, window);
  return s;
}

/// Cap on pair separation in Hölder quotients. By default a number of cells
/// of the grid being measured; a physical length keeps the cap fixed under
/// grid refinement.
struct PairCap {
  int cells = 8;
  std::optional<double> length{};

  double resolve(double h) const { return length ? *length : cells * h; }
  static PairCap physical(double len) { return PairCap{0, len}; }
};

/// max_k max over point pairs with 0 < |x-y| <= cap of |u_k(x)-u_k(y)| / |x-y|^theta.
inline double holder_seminorm(const GridFunction& u, double theta, PairCap cap = {},
                              const std::optional<BoxDomain>& window = std::nullopt) {
  require(theta > 0.0 && theta < 1.0, ErrorKind::InvalidArgument, "Hölder exponent must lie in (0,1)");
  const auto& grid = u.grid();
  const double h = grid.spacing();
  const double r0 = cap.resolve(h);
  const int reach = std::max(1, static_cast<int>(std::floor(r0 / h + 1e-9)));
  const int d = grid.dim();
  const int n = grid.points_per_axis();

  // Half of the offset lattice (lexicographically positive) within the cap.
  std::vector<std::vector<int>> offsets;
  std::vector<double> dist;
  std::vector<int> off(static_cast<std::size_t>(d), -reach);
  while (true) {
    double r2 = 0.0;
    for (int o : off) r2 += static_cast<double>(o) * o;
    const double r = std::sqrt(r2) * h;
    int lead = 0;
    for (int a = d - 1; a >= 0; --a)
      if (off[static_cast<std::size_t>(a)] != 0) {
        lead = off[static_cast<std::size_t>(a)];
        break;
      }
    if (lead > 0 && r <= r0 * (1.0 + 1e-12)) {
      offsets.push_back(off);
      dist.push_back(r);
    }
    int a = 0;
    while (a < d && ++off[static_cast<std::size_t>(a)] > reach) off[static_cast<std::size_t>(a++)] = -reach;
    if (a == d) break;
  }
  std::vector<double> inv_pow(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) inv_pow[i] = std::pow(dist[i], -theta);

  double best = 0.0;
  std::vector<int> idx(static_cast<std::size_t>(d));
  for (std::size_t p = 0; p < grid.size(); ++p) {
    if (!detail::in_window(grid, p, window)) continue;
    for (int a = 0; a < d; ++a) idx[static_cast<std::size_t>(a)] = grid.index_along(p, a);
    for (std::size_t o = 0; o < offsets.size(); ++o) {
      std::size_t q = 0;
      bool inside = true;
      for (int a = d - 1; a >= 0; --a) {
        const int j = idx[static_cast<std::size_t>(a)] + offsets[o][static_cast<std::size_t>(a)];
        if (j < 0 || j >= n) {
          inside = false;
          break;
        }
        q = q * static_cast<std::size_t>(n) + static_cast<std::size_t>(j);
      }
      if (!inside || !detail::in_window(grid, q, window)) continue;
      for (int k = 0; k < u.components(); ++k)
        best = std::max(best, std::abs(u(k, p) - u(k, q)) * inv_pow[o]);
    }
  }
  return best;
}

/// ||u||_{C^theta}: integer part via ck_norm plus the Hölder seminorm of the
/// top-order derivatives for the fractional part.
inline double holder_norm(const GridFunction& u, double theta, PairCap cap = {},
                          const std::optional<BoxDomain>& window = std::nullopt) {
  require(theta >= 0.0 && theta <= 3.0, ErrorKind::InvalidArgument, "Hölder order must lie in [0,3]");
  const int k = static_cast<int>(std::floor(theta + 1e-12));
  const double frac = theta - k;
  double s = ck_norm(u, std::min(k, 3), window);
  if (frac <= 1e-12) return s;
  double top = 0.0;
  for (const auto& idx : detail::sorted_multi_indices(u.grid().dim(), k)) {
    const auto d = k == 0 ? u : derivative(u, idx);
    top = std::max(top, holder_seminorm(d, frac, cap, window));
  }
  return s + top;
}

/// Field sampled on the coincident sub-grid of an inner box.
inline GridFunction restrict_to(const GridFunction& u, const BoxDomain& inner) {
  const auto& grid = u.grid();
  require(inner.dim == grid.dim(), ErrorKind::NotNested, "inner box has a different dimension");
  require(inner.radius <= grid.radius() * (1.0 + 1e-12), ErrorKind::NotNested, "inner box exceeds the grid domain");
  const double cells = inner.radius / grid.spacing();
  const long half = std::lround(cells);
  require(std::abs(cells - static_cast<double>(half)) < 1e-9 * std::max(1.0, cells) && half >= 2,
          ErrorKind::NotNested, "inner box radius does not fall on grid points");
  UniformGrid sub(inner, static_cast<int>(2 * half + 1));
  const int shift = (grid.points_per_axis() - 1) / 2 - static_cast<int>(half);
  GridFunction out(sub, u.components());
  for (std::size_t p = 0; p < sub.size(); ++p) {
    std::size_t q = 0;
    for (int a = grid.dim() - 1; a >= 0; --a)
      q = q * static_cast<std::size_t>(grid.points_per_axis()) + static_cast<std::size_t>(sub.index_along(p, a) + shift);
    for (int k = 0; k < u.components(); ++k) out(k, p) = u(k, q);
  }
  return out;
}

/// Field extended by one ghost layer per face holding the even reflection of
/// the interior, so that centered normal differences vanish on the faces.
class GhostedField {
 public:
  explicit GhostedField(GridFunction extended) : extended_(std::move(extended)) {}

  const GridFunction& extended() const { return extended_; }

  GridFunction interior() const {
    const auto& g = extended_.grid();
    return restrict_to(extended_, BoxDomain(g.radius() - g.spacing(), g.dim()));
  }

 private:
  GridFunction extended_;
};

inline GhostedField neumann_close(const GridFunction& u) {
  const auto& grid = u.grid();
  const int n = grid.points_per_axis();
  UniformGrid ext(BoxDomain(grid.radius() + grid.spacing(), grid.dim()), n + 2);
  GridFunction out(ext, u.components());
  for (std::size_t p = 0; p < ext.size(); ++p) {
    std::size_t q = 0;
    for (int a = grid.dim() - 1; a >= 0; --a) {
      int j = ext.index_along(p, a) - 1;
      if (j < 0) j = -j;
      if (j > n - 1) j = 2 * (n - 1) - j;
      q = q * static_cast<std::size_t>(n) + static_cast<std::size_t>(j);
    }
    for (int k = 0; k < u.components(); ++k) out(k, p) = u(k, q);
  }
  return GhostedField(std::move(out));
}

/// Re-closing keeps the interior and recomputes the same ghost layer.
inline GhostedField neumann_close(const GhostedField& g) { return neumann_close(g.interior()); }

}  // namespace wcsys
