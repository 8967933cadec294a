#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "bvspec/integrate.hpp"
#include "bvspec/problem.hpp"
#include "bvspec/types.hpp"

namespace bvspec {

struct CharDetValue {
  Complex value;
  std::optional<Complex> derivative;
  /// Hadamard bound of C + D Phi(1,lambda); the natural relative scale of |value|.
  double scale = 1.0;
};

namespace detail {

inline CharDetValue char_det_from(const BoundarySpec& bc, const Mat2& phi1,
                                  const std::optional<Mat2>& dphi1) {
  Mat2 u = bc.C() + bc.D() * phi1;
  CharDetValue r;
  r.value = u(0, 0) * u(1, 1) - u(0, 1) * u(1, 0);
  r.scale = std::max(1.0, hadamard_scale(u));
  if (dphi1) {
    // Jacobi: Delta' = tr(adj(U) U') with U' = D dPhi/dlambda.
    Mat2 uprime = bc.D() * (*dphi1);
    Mat2 adj;
    adj << u(1, 1), -u(0, 1), -u(1, 0), u(0, 0);
    r.derivative = (adj * uprime).trace();
  }
  return r;
}

}  // namespace detail

/// Delta(lambda) = det(C + D Phi(1,lambda)); the derivative comes from the
/// co-integrated variational system when requested.
inline CharDetValue char_det(const ProblemSpec& p, Complex lambda,
                             bool want_derivative = false) {
  if (p.bc.n() != 2) throw DimensionError("char_det requires n=2");
  EndpointSolution es = integrate_endpoint(p, lambda, want_derivative);
  return detail::char_det_from(p.bc, es.phi_at_1, es.dphi_dlambda_at_1);
}

inline CharDetValue char_det(const ProblemSpec& p, const FundamentalSolution& fs) {
  return detail::char_det_from(p.bc, fs.phi_at_1, fs.dphi_dlambda_at_1);
}

/// The six-term expansion of Delta through the J-invariants and phi_jk(1,lambda):
/// J12 + J34 e^{i(b1+b2)lambda} + J32 phi11 + J13 phi12 + J42 phi21 + J14 phi22.
inline Complex char_det_via_j(const ProblemSpec& p, const FundamentalSolution& fs) {
  BoundaryInvariants j = compute_j_invariants(p.bc);
  const Mat2& f = fs.phi_at_1;
  Complex expo = std::exp(kI * (p.B.entry(0) + p.B.entry(1)) * fs.lambda);
  return j.j12 + j.j34 * expo + j.j32 * f(0, 0) + j.j13 * f(0, 1) + j.j42 * f(1, 0) +
         j.j14 * f(1, 1);
}

/// gamma with d = e^{-2 pi i gamma}, gamma = alpha + i beta, alpha in [0,1).
struct GammaDecomposition {
  double alpha = 0.0;
  double beta = 0.0;
  Complex gamma() const { return {alpha, beta}; }
};

inline GammaDecomposition gamma_of_d(Complex d) {
  if (d == Complex{0, 0}) throw ValidationError("gamma_of_d: d must be nonzero");
  GammaDecomposition g;
  g.beta = std::log(std::abs(d)) / (2.0 * M_PI);
  double a = -std::arg(d) / (2.0 * M_PI);
  a -= std::floor(a);
  if (a >= 1.0) a -= 1.0;  // guard against floor rounding at the boundary
  g.alpha = a;
  return g;
}

/// Closed form Delta_0(lambda) = (d1 e^{i b1 lambda} - 1)(d2 e^{i b2 lambda} - 1),
/// equal to det(C + D Phi(1,lambda)) for quasi-periodic rows and Q = 0.
inline Complex delta0_closed(const WeightMatrix& B, Complex d1, Complex d2,
                             Complex lambda) {
  Complex f1 = d1 * std::exp(kI * B.entry(0) * lambda) - 1.0;
  Complex f2 = d2 * std::exp(kI * B.entry(1) * lambda) - 1.0;
  return f1 * f2;
}

/// One factor Delta_0j(lambda) = e^{i(b_j lambda - 2 pi gamma_j)} - 1.
inline Complex delta0_factor(Complex b, const GammaDecomposition& g, Complex lambda) {
  return std::exp(kI * (b * lambda - 2.0 * M_PI * g.gamma())) - 1.0;
}

struct LatticePoint {
  int n;
  int j;  // family index, 1 or 2
  Complex lambda;
};

struct Lattice {
  std::vector<LatticePoint> points;
  int range = 0;

  /// Minimal pairwise distance between distinct entries (0 if a collision exists).
  double min_gap() const {
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < points.size(); ++a)
      for (std::size_t b = a + 1; b < points.size(); ++b)
        gap = std::min(gap, std::abs(points[a].lambda - points[b].lambda));
    return gap;
  }
};

/// lambda0_{n,j} = 2 pi b_j^{-1} (gamma_j + n) for |n| <= range, both families.
inline Lattice unperturbed_lattice(const WeightMatrix& B, Complex d1, Complex d2,
                                   int range) {
  if (B.n() != 2) throw DimensionError("lattice requires n=2");
  if (B.entry(0) == Complex{0, 0} || B.entry(1) == Complex{0, 0})
    throw ValidationError("lattice requires nonsingular B");
  GammaDecomposition g1 = gamma_of_d(d1), g2 = gamma_of_d(d2);
  Lattice lat;
  lat.range = range;
  lat.points.reserve(2 * (2 * static_cast<std::size_t>(range) + 1));
  for (int n = -range; n <= range; ++n) {
    lat.points.push_back(
        {n, 1, 2.0 * M_PI / B.entry(0) * (g1.gamma() + static_cast<double>(n))});
    lat.points.push_back(
        {n, 2, 2.0 * M_PI / B.entry(1) * (g2.gamma() + static_cast<double>(n))});
  }
  return lat;
}

namespace detail {

/// Fractional part with snapping: values within 1e-12 of an integer collapse to 0.
inline double frac_snapped(double x) {
  double f = x - std::floor(x);
  if (f > 1.0 - 1e-12) f = 0.0;
  if (f < 1e-12) f = 0.0;
  return f;
}

inline bool near_integer(double x) { return std::abs(x - std::round(x)) < 1e-12; }

}  // namespace detail

struct SeparationResult {
  bool separated = false;
  /// Colliding pair (n from family 1, m from family 2) when not separated.
  std::optional<std::pair<long, long>> collision;
};

/// Separation criterion for the lattice of a quasi-periodic problem:
/// with b1/b2 = c1 + i c2 (c2 != 0) the lattice is separated iff
/// alpha1 != frac((c1 beta1 - (c1^2+c2^2) beta2)/c2) or
/// alpha2 != frac((beta1 - c1 beta2)/c2).
inline SeparationResult separation_check(const WeightMatrix& B, Complex d1, Complex d2) {
  if (B.n() != 2) throw DimensionError("separation_check requires n=2");
  Complex ratio = B.entry(0) / B.entry(1);
  double c1 = ratio.real(), c2 = ratio.imag();
  if (c2 == 0.0) throw ValidationError("separation_check requires Im(b1/b2) != 0");
  GammaDecomposition g1 = gamma_of_d(d1), g2 = gamma_of_d(d2);
  double rhs1 = (c1 * g1.beta - (c1 * c1 + c2 * c2) * g2.beta) / c2;
  double rhs2 = (g1.beta - c1 * g2.beta) / c2;
  // alpha_j == frac(rhs_j) exactly when rhs_j - alpha_j is an integer.
  bool cond1 = detail::frac_snapped(rhs1 - g1.alpha) != 0.0;
  bool cond2 = detail::frac_snapped(rhs2 - g2.alpha) != 0.0;
  SeparationResult r;
  r.separated = cond1 || cond2;
  if (!r.separated) {
    long n = std::lround(rhs1 - g1.alpha);
    long m = std::lround(rhs2 - g2.alpha);
    r.collision = std::make_pair(n, m);
  }
  return r;
}

}  // namespace bvspec
