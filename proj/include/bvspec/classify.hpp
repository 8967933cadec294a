#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "bvspec/chardet.hpp"
#include "bvspec/problem.hpp"
#include "bvspec/types.hpp"

namespace bvspec {

/// Angular decomposition of the lambda-plane by the lines Re(i b_j lambda) = 0,
/// with one interior sample direction per sector.
struct SectorDecomposition {
  std::vector<double> rays;            // sorted angles in [0, 2pi)
  std::vector<std::pair<double, double>> sectors;
  std::vector<Complex> sample_points;  // unit modulus, one per sector
};

inline SectorDecomposition sector_decomposition(const WeightMatrix& B) {
  std::vector<double> rays;
  for (int j = 0; j < B.n(); ++j) {
    double base = -std::arg(B.entry(j));  // Re(i b_j e^{i phi}) = 0 at phi = -arg b_j mod pi
    for (double a : {base, base + M_PI}) {
      double w = std::fmod(a, 2.0 * M_PI);
      if (w < 0) w += 2.0 * M_PI;
      rays.push_back(w);
    }
  }
  std::sort(rays.begin(), rays.end());
  rays.erase(std::unique(rays.begin(), rays.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             rays.end());
  if (!rays.empty() && rays.back() > 2.0 * M_PI - 1e-12 && rays.front() < 1e-12)
    rays.pop_back();
  SectorDecomposition sd;
  sd.rays = rays;
  for (std::size_t i = 0; i < rays.size(); ++i) {
    double a = rays[i];
    double b = (i + 1 < rays.size()) ? rays[i + 1] : rays[0] + 2.0 * M_PI;
    sd.sectors.emplace_back(a, b);
    double mid = 0.5 * (a + b);
    sd.sample_points.push_back(std::polar(1.0, mid));
  }
  return sd;
}

/// T_A(C,D): column k comes from C when Re a_k > 0 and from D when Re a_k < 0.
/// Entries with Re a_k ~ 0 are inadmissible.
inline MatrixXc t_matrix(const VectorXc& a_diag, const MatrixXc& C, const MatrixXc& D) {
  if (C.rows() != a_diag.size() || D.rows() != a_diag.size() || C.rows() != C.cols() ||
      D.rows() != D.cols())
    throw DimensionError("t_matrix: dimension mismatch");
  MatrixXc t(C.rows(), C.cols());
  for (Eigen::Index k = 0; k < a_diag.size(); ++k) {
    Complex a = a_diag(k);
    if (std::abs(a.real()) <= 1e-12 * std::abs(a))
      throw ValidationError("t_matrix: inadmissible z (Re a_k vanishes)");
    t.col(k) = (a.real() > 0.0) ? C.col(k) : D.col(k);
  }
  return t;
}

namespace detail {

inline bool t_det_nonzero(const MatrixXc& t, double rel_tol = 1e-10) {
  double scale = std::max(1e-300, hadamard_scale(t));
  return std::abs(t.determinant()) > rel_tol * scale;
}

}  // namespace detail

/// Regularity: det T_{izB}(C,D) != 0 for one sample z per sector.
inline bool regularity(const WeightMatrix& B, const BoundarySpec& bc) {
  if (bc.n() != B.n()) throw DimensionError("regularity: dimension mismatch");
  SectorDecomposition sd = sector_decomposition(B);
  for (Complex z : sd.sample_points) {
    VectorXc a(B.n());
    for (int j = 0; j < B.n(); ++j) a(j) = kI * z * B.entry(j);
    if (!detail::t_det_nonzero(t_matrix(a, bc.C(), bc.D()))) return false;
  }
  return true;
}

/// Weak regularity: three admissible directions with nonsingular T whose
/// triangle strictly contains the origin. For n=2 with Im(b1/b2) != 0 this
/// reduces to J14 J32 != 0 or J12 J34 != 0.
inline bool weak_regularity(const WeightMatrix& B, const BoundarySpec& bc) {
  if (bc.n() != B.n()) throw DimensionError("weak_regularity: dimension mismatch");
  if (B.n() == 2 && B.essential_non_dirac()) {
    BoundaryInvariants j = compute_j_invariants(bc);
    double tol = 1e-10 * std::max(1.0, j.scale());
    bool pair1 = std::abs(j.j14) > tol && std::abs(j.j32) > tol;
    bool pair2 = std::abs(j.j12) > tol && std::abs(j.j34) > tol;
    return pair1 || pair2;
  }
  // General search over sector sample directions (plus near-ray directions).
  SectorDecomposition sd = sector_decomposition(B);
  std::vector<double> angles;
  for (std::size_t s = 0; s < sd.sectors.size(); ++s) {
    auto [a, b] = sd.sectors[s];
    for (double frac : {0.5, 0.1, 0.9}) {
      double ang = a + frac * (b - a);
      VectorXc ad(B.n());
      Complex z = std::polar(1.0, ang);
      for (int j = 0; j < B.n(); ++j) ad(j) = kI * z * B.entry(j);
      try {
        if (detail::t_det_nonzero(t_matrix(ad, bc.C(), bc.D()))) angles.push_back(ang);
      } catch (const ValidationError&) {
      }
    }
  }
  std::sort(angles.begin(), angles.end());
  // A triangle of unit vectors contains 0 strictly iff all circular gaps < pi.
  std::size_t m = angles.size();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      for (std::size_t k = j + 1; k < m; ++k) {
        double g1 = angles[j] - angles[i];
        double g2 = angles[k] - angles[j];
        double g3 = 2.0 * M_PI - (angles[k] - angles[i]);
        if (g1 < M_PI - 1e-12 && g2 < M_PI - 1e-12 && g3 < M_PI - 1e-12) return true;
      }
  return false;
}

enum class CanonicalKind { QuasiPeriodic, Special, InitialValue, Other };

struct CanonicalForm {
  CanonicalKind kind = CanonicalKind::Other;
  Complex d1{0, 0}, d2{0, 0};  // QuasiPeriodic parameters
  Complex h1{0, 0}, h2{0, 0};  // Special parameters
  std::vector<Transform> transforms_used;
};

namespace detail {

inline std::optional<CanonicalForm> match_pattern(const MatrixXc& block) {
  double scale = block.cwiseAbs().maxCoeff();
  if (scale == 0.0) return std::nullopt;
  double tol = 1e-12 * scale;
  auto col_zero = [&](int c) {
    return std::abs(block(0, c)) <= tol && std::abs(block(1, c)) <= tol;
  };
  CanonicalForm cf;
  if (col_zero(2) && col_zero(3)) {
    cf.kind = CanonicalKind::InitialValue;  // y(0) = 0
    return cf;
  }
  if (col_zero(0) && col_zero(1)) {
    cf.kind = CanonicalKind::InitialValue;  // y(1) = 0
    return cf;
  }
  Mat2 a12 = block.leftCols<2>();
  double det12 = std::abs(a12.determinant());
  if (det12 > 1e-12 * std::max(1.0, hadamard_scale(a12))) {
    MatrixXc norm = a12.inverse() * block;  // (I | G)
    Mat2 g = norm.rightCols<2>();
    double nscale = std::max(1.0, norm.cwiseAbs().maxCoeff());
    if (std::abs(g(0, 1)) <= 1e-12 * nscale && std::abs(g(1, 0)) <= 1e-12 * nscale) {
      Complex d1 = -g(0, 0), d2 = -g(1, 1);
      if (std::abs(d1) > 1e-12 * nscale && std::abs(d2) > 1e-12 * nscale) {
        cf.kind = CanonicalKind::QuasiPeriodic;
        cf.d1 = d1;
        cf.d2 = d2;
        return cf;
      }
    }
  }
  if (col_zero(3)) {
    Mat2 a13;
    a13 << block(0, 0), block(0, 2), block(1, 0), block(1, 2);
    if (std::abs(a13.determinant()) > 1e-12 * std::max(1.0, hadamard_scale(a13))) {
      MatrixXc norm = a13.inverse() * block;  // rows (1,-h1,0,0), (0,-h2,1,0)
      cf.kind = CanonicalKind::Special;
      cf.h1 = -norm(0, 1);
      cf.h2 = -norm(1, 1);
      return cf;
    }
  }
  return std::nullopt;
}

inline BoundarySpec transformed_bc(const BoundarySpec& bc,
                                   const std::vector<Transform>& ts) {
  BoundarySpec cur = bc;
  for (Transform t : ts) {
    if (t == Transform::SwapComponents) {
      MatrixXc perm(2, 2);
      perm << 0, 1, 1, 0;
      cur = BoundarySpec(cur.C() * perm, cur.D() * perm);
    } else {
      cur = BoundarySpec(cur.D(), cur.C());
    }
  }
  return cur;
}

}  // namespace detail

/// Recognizes quasi-periodic, special, and initial-value patterns after row
/// normalization; optionally searches the 4-element transform group.
inline CanonicalForm canonical_form(const BoundarySpec& bc, bool allow_transforms) {
  if (bc.n() != 2) throw DimensionError("canonical_form requires n=2");
  static const std::vector<std::vector<Transform>> kGroup = {
      {},
      {Transform::SwapComponents},
      {Transform::ReflectInterval},
      {Transform::SwapComponents, Transform::ReflectInterval}};
  for (const auto& ts : kGroup) {
    if (!allow_transforms && !ts.empty()) break;
    auto m = detail::match_pattern(detail::transformed_bc(bc, ts).block());
    if (m) {
      m->transforms_used = ts;
      return *m;
    }
  }
  CanonicalForm other;
  other.kind = CanonicalKind::Other;
  return other;
}

enum class Normality { Normal, NormalConstQ, NotNormal, Unknown };

/// Normality of L_{C,D}(B,Q): either Q = 0 with unimodular quasi-periodic BC,
/// or the constant normal-form potential with BC y(1) = e^{i phi} y(0).
inline Normality normality_verdict(const ProblemSpec& p) {
  if (p.B.n() != 2) throw DimensionError("normality_verdict requires n=2");
  if (!p.B.essential_non_dirac()) return Normality::Unknown;
  CanonicalForm cf = canonical_form(p.bc, true);
  bool qp = cf.kind == CanonicalKind::QuasiPeriodic;
  if (p.Q.is_zero()) {
    if (qp && std::abs(std::abs(cf.d1) - 1.0) <= 1e-12 &&
        std::abs(std::abs(cf.d2) - 1.0) <= 1e-12)
      return Normality::Normal;
    return Normality::NotNormal;
  }
  if (p.Q.q12.is_constant() && p.Q.q21.is_constant()) {
    Complex s = 1.0 / p.B.entry(0) - 1.0 / p.B.entry(1);
    Complex q12 = p.Q.q12.constant_value(), q21 = p.Q.q21.constant_value();
    if (s != Complex{0, 0} && q12 != Complex{0, 0}) {
      Complex q = q12 / s;
      double qs = std::max(1.0, std::abs(q21) + std::abs(s * std::conj(q)));
      bool matches = std::abs(q21 - s * std::conj(q)) <= 1e-12 * qs;
      bool bc_ok = qp && std::abs(cf.d1 - cf.d2) <= 1e-12 * std::max(1.0, std::abs(cf.d1)) &&
                   std::abs(std::abs(cf.d1) - 1.0) <= 1e-12;
      if (matches && bc_ok) return Normality::NormalConstQ;
    }
  }
  return Normality::NotNormal;
}

enum class Similarity { AlmostNormal, NormalSmallQ, RieszWithParentheses, NoneEstablished };

/// Hypothesis check only (not a numerical proof): quasi-periodic BC with
/// polynomial (hence entire) Q gives similarity to an almost normal operator;
/// a separated lattice plus a user-supplied smallness bound upgrades it; any
/// bounded Q keeps the Riesz-basis-with-parentheses property.
inline Similarity similarity_verdict(const ProblemSpec& p,
                                     std::optional<double> small_q_threshold = {}) {
  if (p.B.n() != 2) throw DimensionError("similarity_verdict requires n=2");
  CanonicalForm cf = canonical_form(p.bc, true);
  if (cf.kind != CanonicalKind::QuasiPeriodic) return Similarity::NoneEstablished;
  if (p.Q.is_polynomial()) {
    if (small_q_threshold && p.B.essential_non_dirac() &&
        separation_check(p.B, cf.d1, cf.d2).separated &&
        p.Q.sup_norm() < *small_q_threshold)
      return Similarity::NormalSmallQ;
    return Similarity::AlmostNormal;
  }
  return Similarity::RieszWithParentheses;  // piecewise entries are bounded
}

struct PeculiarVerdict {
  bool is_peculiar = false;
  bool rank_one = false;
  std::vector<std::string> reasons;
};

/// Verdict for a candidate peculiar pair sharing (B,Q): requires Q identically
/// zero, the first problem quasi-periodic with unimodular d's, the second
/// special with h1 h2 != 0, all under one shared transform; rank_one iff
/// h1 = d1 h2 after normalization.
inline PeculiarVerdict peculiar_pair_verdict(const ProblemSpec& pa, const ProblemSpec& pb) {
  if (pa.B.n() != 2 || pb.B.n() != 2)
    throw DimensionError("peculiar_pair_verdict requires n=2");
  if (!(pa.B == pb.B) || !(pa.Q == pb.Q))
    throw ValidationError("peculiar_pair_verdict requires a shared (B,Q)");
  if (!pa.B.essential_non_dirac())
    throw ValidationError("peculiar_pair_verdict requires Im(b1/b2) != 0");

  PeculiarVerdict v;
  if (!pa.Q.is_zero()) {
    v.reasons.push_back("potential is not identically zero");
    return v;
  }
  static const std::vector<std::vector<Transform>> kGroup = {
      {},
      {Transform::SwapComponents},
      {Transform::ReflectInterval},
      {Transform::SwapComponents, Transform::ReflectInterval}};
  for (const auto& ts : kGroup) {
    auto ca = detail::match_pattern(detail::transformed_bc(pa.bc, ts).block());
    auto cb = detail::match_pattern(detail::transformed_bc(pb.bc, ts).block());
    if (!ca || !cb) continue;
    if (ca->kind != CanonicalKind::QuasiPeriodic || cb->kind != CanonicalKind::Special)
      continue;
    bool unimodular = std::abs(std::abs(ca->d1) - 1.0) <= 1e-12 &&
                      std::abs(std::abs(ca->d2) - 1.0) <= 1e-12;
    bool h_ok = std::abs(cb->h1) > 0.0 && std::abs(cb->h2) > 0.0;
    if (!unimodular) {
      v.reasons.push_back("quasi-periodic parameters are not unimodular");
      continue;
    }
    if (!h_ok) {
      v.reasons.push_back("special parameters must satisfy h1 h2 != 0");
      continue;
    }
    v.is_peculiar = true;
    Complex diff = cb->h1 - ca->d1 * cb->h2;
    double sc = std::max({1.0, std::abs(cb->h1), std::abs(ca->d1 * cb->h2)});
    v.rank_one = std::abs(diff) <= 1e-10 * sc;
    v.reasons.clear();
    v.reasons.push_back("Q = 0 with normal quasi-periodic and special boundary conditions");
    v.reasons.push_back(v.rank_one ? "h1 = d1 h2: resolvent difference is one-dimensional"
                                   : "h1 != d1 h2: resolvent difference has rank 2");
    return v;
  }
  if (v.reasons.empty())
    v.reasons.push_back(
        "no shared transform brings the pair to quasi-periodic/special form");
  return v;
}

struct ClassificationReport {
  bool regular = false;
  bool weakly_regular = false;
  CanonicalForm canonical;
  Normality normality = Normality::Unknown;
  Similarity similarity = Similarity::NoneEstablished;
  std::optional<double> small_q_threshold;
};

inline ClassificationReport classify_problem(const ProblemSpec& p,
                                             std::optional<double> small_q_threshold = {}) {
  ClassificationReport r;
  r.regular = regularity(p.B, p.bc);
  r.weakly_regular = weak_regularity(p.B, p.bc);
  r.canonical = canonical_form(p.bc, true);
  r.normality = (p.B.n() == 2 && p.B.essential_non_dirac()) ? normality_verdict(p)
                                                            : Normality::Unknown;
  r.similarity = similarity_verdict(p, small_q_threshold);
  r.small_q_threshold = small_q_threshold;
  return r;
}

}  // namespace bvspec
