#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "bvspec/problem.hpp"
#include "bvspec/types.hpp"

namespace bvspec {

namespace detail {

// 8-point Gauss-Legendre rule on [-1,1].
inline constexpr std::array<double, 8> kGlNodes = {
    -0.96028985649753623168, -0.79666647741362673959, -0.52553240991632898582,
    -0.18343464249564980494, 0.18343464249564980494, 0.52553240991632898582,
    0.79666647741362673959, 0.96028985649753623168};
inline constexpr std::array<double, 8> kGlWeights = {
    0.10122853629037625915, 0.22238103445337447054, 0.31370664587788728734,
    0.36268378337836198297, 0.36268378337836198297, 0.31370664587788728734,
    0.22238103445337447054, 0.10122853629037625915};

/// P_0..P_max evaluated at s by the three-term recurrence.
inline void legendre_values(double s, int max_degree, double* out) {
  out[0] = 1.0;
  if (max_degree >= 1) out[1] = s;
  for (int k = 1; k < max_degree; ++k)
    out[k + 1] = ((2 * k + 1) * s * out[k] - k * out[k - 1]) / (k + 1);
}

}  // namespace detail

/// Panel decomposition of [0,1] with 8 Gauss-Legendre nodes per panel.
/// Sample points are the panel edges plus the GL nodes, so point index
/// 9p is edge p and 9p+1+k is GL node k of panel p.
class QuadratureGrid {
 public:
  static constexpr int kNodesPerPanel = 8;

  explicit QuadratureGrid(int panels, const std::vector<double>& extra_breakpoints = {}) {
    if (panels < 1) throw ValidationError("grid needs at least one panel");
    std::vector<double> edges;
    edges.reserve(static_cast<std::size_t>(panels) + extra_breakpoints.size() + 1);
    for (int i = 0; i <= panels; ++i)
      edges.push_back(static_cast<double>(i) / panels);
    for (double t : extra_breakpoints) {
      if (t <= 0.0 || t >= 1.0) continue;
      edges.push_back(t);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                edges.end());
    edges_ = std::move(edges);
    points_.reserve(9 * (edges_.size() - 1) + 1);
    for (std::size_t p = 0; p + 1 < edges_.size(); ++p) {
      points_.push_back(edges_[p]);
      double a = edges_[p], b = edges_[p + 1];
      for (int k = 0; k < kNodesPerPanel; ++k)
        points_.push_back(0.5 * (a + b) + 0.5 * (b - a) * detail::kGlNodes[k]);
    }
    points_.push_back(1.0);
  }

  int panel_count() const { return static_cast<int>(edges_.size()) - 1; }
  double panel_begin(int p) const { return edges_[static_cast<std::size_t>(p)]; }
  double panel_end(int p) const { return edges_[static_cast<std::size_t>(p) + 1]; }
  double panel_width(int p) const { return panel_end(p) - panel_begin(p); }

  int point_count() const { return static_cast<int>(points_.size()); }
  double point(int i) const { return points_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& points() const { return points_; }

  static int edge_index(int p) { return 9 * p; }
  static int gl_index(int p, int k) { return 9 * p + 1 + k; }

  /// Panel owning sample point i (edges belong to the panel on their right,
  /// except the final edge).
  int panel_of_point(int i) const {
    int p = i / 9;
    return std::min(p, panel_count() - 1);
  }

  bool operator==(const QuadratureGrid& o) const { return edges_ == o.edges_; }

 private:
  std::vector<double> edges_;
  std::vector<double> points_;
};

using GridPtr = std::shared_ptr<const QuadratureGrid>;

inline GridPtr make_grid(const ProblemSpec& p) {
  return std::make_shared<QuadratureGrid>(p.solver.panels, p.Q.breakpoints());
}

/// A C^2-valued function sampled at every grid point.
struct SampledFunction {
  GridPtr grid;
  std::vector<Vec2> values;

  static SampledFunction from_callable(GridPtr g,
                                       const std::function<Vec2(double)>& f) {
    SampledFunction s;
    s.grid = std::move(g);
    s.values.reserve(static_cast<std::size_t>(s.grid->point_count()));
    for (int i = 0; i < s.grid->point_count(); ++i) s.values.push_back(f(s.grid->point(i)));
    return s;
  }

  static SampledFunction zero(GridPtr g) {
    return from_callable(std::move(g), [](double) { return Vec2::Zero(); });
  }
};

inline void require_same_grid(const SampledFunction& a, const SampledFunction& b) {
  if (a.grid != b.grid && !(*a.grid == *b.grid))
    throw ValidationError("sampled functions live on incompatible grids");
}

/// L^2([0,1];C^2) inner product, linear in f and conjugate-linear in g.
inline Complex inner_product(const SampledFunction& f, const SampledFunction& g) {
  require_same_grid(f, g);
  const QuadratureGrid& grid = *f.grid;
  Complex acc{0.0, 0.0};
  for (int p = 0; p < grid.panel_count(); ++p) {
    double half = 0.5 * grid.panel_width(p);
    for (int k = 0; k < QuadratureGrid::kNodesPerPanel; ++k) {
      int i = QuadratureGrid::gl_index(p, k);
      acc += half * detail::kGlWeights[k] *
             g.values[static_cast<std::size_t>(i)].dot(f.values[static_cast<std::size_t>(i)]);
    }
  }
  return acc;
}

inline double l2_norm(const SampledFunction& f) {
  return std::sqrt(std::abs(inner_product(f, f)));
}

namespace detail {

template <typename T>
T zero_value() {
  if constexpr (requires { T::Zero(); })
    return T::Zero();
  else
    return T{};
}

/// Legendre coefficients (degree <= 7) of the interpolant through the 8 GL
/// samples of one panel: c_k = (2k+1)/2 sum_i w_i P_k(x_i) g_i.
template <typename T>
std::array<T, 8> panel_legendre_coeffs(const T* panel_values) {
  std::array<T, 8> c;
  double pk[8];
  for (int k = 0; k < 8; ++k) c[k] = zero_value<T>();
  for (int i = 0; i < 8; ++i) {
    legendre_values(kGlNodes[i], 7, pk);
    for (int k = 0; k < 8; ++k)
      c[k] += (0.5 * (2 * k + 1) * kGlWeights[i] * pk[k]) * panel_values[i];
  }
  return c;
}

/// Integral of the panel interpolant from the panel start to local coordinate s,
/// using the antiderivative identity (2k+1) int P_k = P_{k+1} - P_{k-1}.
template <typename T>
T panel_partial_integral(const std::array<T, 8>& c, double s, double half_width) {
  double pk[9];
  legendre_values(s, 8, pk);
  T acc = c[0] * (s + 1.0);
  for (int k = 1; k < 8; ++k) acc += c[k] * ((pk[k + 1] - pk[k - 1]) / (2 * k + 1));
  return acc * half_width;
}

}  // namespace detail

/// Cumulative integral I(x_i) = int_0^{x_i} g(t) dt for g sampled on the grid.
/// Exact composite Gauss-Legendre at panel edges; Legendre-expansion partial
/// integrals at interior nodes.
template <typename T>
std::vector<T> cumulative_integral(const QuadratureGrid& grid, const std::vector<T>& g) {
  std::vector<T> out(g.size());
  T running = detail::zero_value<T>();
  for (int p = 0; p < grid.panel_count(); ++p) {
    out[static_cast<std::size_t>(QuadratureGrid::edge_index(p))] = running;
    std::array<T, 8> panel;
    for (int k = 0; k < 8; ++k) panel[static_cast<std::size_t>(k)] =
        g[static_cast<std::size_t>(QuadratureGrid::gl_index(p, k))];
    auto coeffs = detail::panel_legendre_coeffs(panel.data());
    double half = 0.5 * grid.panel_width(p);
    for (int k = 0; k < 8; ++k) {
      out[static_cast<std::size_t>(QuadratureGrid::gl_index(p, k))] =
          running + detail::panel_partial_integral(coeffs, detail::kGlNodes[k], half);
    }
    running = running + detail::panel_partial_integral(coeffs, 1.0, half);
  }
  out.back() = running;
  return out;
}

/// Smooth bump (0, g) with supp g = [a,1]: g(t) = exp(-1/(1-s^2)) under the
/// affine map s of (a,1) onto (-1,1), zero elsewhere; unit-normalized by caller.
inline SampledFunction bump_second_component(GridPtr grid, double a) {
  return SampledFunction::from_callable(std::move(grid), [a](double x) {
    Vec2 v = Vec2::Zero();
    if (x > a && x < 1.0) {
      double s = (2.0 * x - (a + 1.0)) / (1.0 - a);
      if (std::abs(s) < 1.0) v(1) = std::exp(-1.0 / (1.0 - s * s));
    }
    return v;
  });
}

}  // namespace bvspec
