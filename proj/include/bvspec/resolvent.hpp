#pragma once

#include <cmath>
#include <vector>

#include <Eigen/SVD>

#include "bvspec/chardet.hpp"
#include "bvspec/classify.hpp"
#include "bvspec/grid.hpp"
#include "bvspec/integrate.hpp"
#include "bvspec/problem.hpp"
#include "bvspec/types.hpp"

namespace bvspec {

/// M_{C,D}(lambda) = (C + D Phi(1,lambda))^{-1} D. Requires lambda in the
/// resolvent set (|Delta| above 1e-12 relative to its Hadamard scale).
inline Mat2 m_matrix(const ProblemSpec& p, const FundamentalSolution& fs) {
  Mat2 u = p.bc.C() + p.bc.D() * fs.phi_at_1;
  Complex det = u(0, 0) * u(1, 1) - u(0, 1) * u(1, 0);
  if (std::abs(det) <= 1e-12 * std::max(1.0, hadamard_scale(u)))
    throw NotInResolventSet("lambda is (numerically) an eigenvalue");
  return u.inverse() * p.bc.D();
}

/// The explicit n=2 form of M through the J-invariants, used as the second
/// route of the dual-path check:
/// (J32 + J34 phi22, J42 - J34 phi12; J13 - J34 phi21, J14 + J34 phi11)/Delta.
inline Mat2 m_matrix_via_j(const ProblemSpec& p, const FundamentalSolution& fs) {
  BoundaryInvariants j = compute_j_invariants(p.bc);
  const Mat2& f = fs.phi_at_1;
  Complex delta = char_det(p, fs).value;
  Mat2 m;
  m << j.j32 + j.j34 * f(1, 1), j.j42 - j.j34 * f(0, 1), j.j13 - j.j34 * f(1, 0),
      j.j14 + j.j34 * f(0, 0);
  return m / delta;
}

/// rank(R_A(lambda) - R_B(lambda)) = rank(C D; C~ D~) - n, independent of lambda.
inline int rank_resolvent_diff(const BoundarySpec& a, const BoundarySpec& b) {
  if (a.n() != b.n()) throw DimensionError("rank_resolvent_diff: dimension mismatch");
  if (!a.maximal() || !b.maximal())
    throw ValidationError("rank_resolvent_diff requires maximal boundary blocks");
  int n = a.n();
  MatrixXc stacked(2 * n, 2 * n);
  stacked << a.block(), b.block();
  Eigen::JacobiSVD<MatrixXc> svd(stacked);
  const auto& s = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > 1e-10 * s(0)) ++rank;
  return rank - n;
}

/// One-dimensionality criterion for n=2 via the bilinear J-identity
/// J12 J~34 + J~12 J34 + J13 J~42 + J~13 J42 + J14 J~23 + J~14 J23 = 0.
inline bool one_dim_criterion(const BoundarySpec& a, const BoundarySpec& b) {
  if (a.n() != 2 || b.n() != 2) throw DimensionError("one_dim_criterion requires n=2");
  if (row_equivalent(a, b))
    throw IdenticalOperators("boundary conditions define identical operators");
  BoundaryInvariants ja = compute_j_invariants(a);
  BoundaryInvariants jb = compute_j_invariants(b);
  Complex expr = ja.j(1, 2) * jb.j(3, 4) + jb.j(1, 2) * ja.j(3, 4) +
                 ja.j(1, 3) * jb.j(4, 2) + jb.j(1, 3) * ja.j(4, 2) +
                 ja.j(1, 4) * jb.j(2, 3) + jb.j(1, 4) * ja.j(2, 3);
  double scale = std::max(1.0, ja.scale() * jb.scale());
  return std::abs(expr) <= 1e-10 * scale;
}

/// Rank-one data at a fixed lambda: M_general(lambda) - M_special(lambda)
/// equals alpha(lambda) beta(lambda)^*.
struct RankOneData {
  Complex lambda;
  Vec2 alpha;
  Vec2 beta;
  Complex gamma;  // J14 + J34 phi11(lambda), nonzero by precondition
};

/// alpha/beta realization for a general problem against a special-form one:
/// alpha = (h1 - J34 Delta~/gamma, 1), beta solves conj(beta1) =
/// (J13 - J34 phi21)/Delta - 1/Delta~, conj(beta2) = gamma/Delta.
inline RankOneData alpha_beta(const ProblemSpec& general, const ProblemSpec& special,
                              Complex lambda) {
  if (!(general.B == special.B) || !(general.Q == special.Q))
    throw ValidationError("alpha_beta requires a shared (B,Q)");
  if (!one_dim_criterion(general.bc, special.bc))
    throw ValidationError("alpha_beta requires the one-dimensionality criterion");
  CanonicalForm cf = canonical_form(special.bc, false);
  if (cf.kind != CanonicalKind::Special)
    throw ValidationError("alpha_beta: second problem must carry special-form BC");

  EndpointSolution es = integrate_endpoint(general, lambda, false);
  const Mat2& f = es.phi_at_1;
  BoundaryInvariants j = compute_j_invariants(general.bc);
  Complex gamma = j.j14 + j.j34 * f(0, 0);
  if (std::abs(gamma) <= 1e-12 * std::max(1.0, std::abs(j.j14) + std::abs(j.j34 * f(0, 0))))
    throw RepresentationUnavailable("gamma(lambda) = 0: retry at another lambda");

  Mat2 ug = general.bc.C() + general.bc.D() * f;
  Complex delta = ug(0, 0) * ug(1, 1) - ug(0, 1) * ug(1, 0);
  if (std::abs(delta) <= 1e-12 * std::max(1.0, hadamard_scale(ug)))
    throw NotInResolventSet("lambda is an eigenvalue of the general problem");
  // Delta~ from the canonical special rows (1,-h1,0,0), (0,-h2,1,0).
  Complex delta_t = -cf.h2 + cf.h1 * f(0, 0) + f(0, 1);
  BoundarySpec canonical_special = BoundarySpec::special(cf.h1, cf.h2);
  Mat2 us = canonical_special.C() + canonical_special.D() * f;
  if (std::abs(delta_t) <= 1e-12 * std::max(1.0, hadamard_scale(us)))
    throw NotInResolventSet("lambda is an eigenvalue of the special problem");

  RankOneData rd;
  rd.lambda = lambda;
  rd.gamma = gamma;
  rd.alpha(0) = cf.h1 - j.j34 * delta_t / gamma;
  rd.alpha(1) = 1.0;
  rd.beta(0) = std::conj((j.j13 - j.j34 * f(1, 0)) / delta - 1.0 / delta_t);
  rd.beta(1) = std::conj(gamma / delta);
  return rd;
}

/// (R_{C,D}(lambda) f)(x) = (K_lambda f)(x) - Phi(x,lambda) M(lambda) (K_lambda f)(1).
inline SampledFunction apply_resolvent(const ProblemSpec& p, const FundamentalSolution& fs,
                                       const SampledFunction& f) {
  Mat2 m = m_matrix(p, fs);
  SampledFunction kf = apply_K(p, fs, f);
  Vec2 k1 = kf.values.back();
  SampledFunction out;
  out.grid = kf.grid;
  out.values.resize(kf.values.size());
  for (std::size_t i = 0; i < kf.values.size(); ++i)
    out.values[i] = kf.values[i] - fs.phi[i] * (m * k1);
  return out;
}

inline SampledFunction apply_resolvent(const ProblemSpec& p, Complex lambda,
                                       const SampledFunction& f) {
  FundamentalSolution fs = fundamental_matrix(p, lambda, false, f.grid);
  return apply_resolvent(p, fs, f);
}

/// The rank-one action (f, Psi^*(.,lambda) beta) Phi(.,lambda) alpha, which
/// realizes R_special(lambda) - R_general(lambda) on the shared (B,Q).
inline SampledFunction apply_rank_one_diff(const RankOneData& rd, const ProblemSpec& shared,
                                           const FundamentalSolution& fs,
                                           const SampledFunction& f) {
  if (fs.lambda != rd.lambda)
    throw ValidationError("apply_rank_one_diff: lambda mismatch");
  std::vector<Mat2> psi = psi_matrices(shared, fs);
  SampledFunction weighted;
  weighted.grid = f.grid;
  weighted.values.resize(f.values.size());
  for (std::size_t i = 0; i < f.values.size(); ++i)
    weighted.values[i] = psi[i].adjoint() * rd.beta;
  Complex coeff = inner_product(f, weighted);
  SampledFunction out;
  out.grid = f.grid;
  out.values.resize(f.values.size());
  for (std::size_t i = 0; i < f.values.size(); ++i)
    out.values[i] = coeff * (fs.phi[i] * rd.alpha);
  return out;
}

}  // namespace bvspec
