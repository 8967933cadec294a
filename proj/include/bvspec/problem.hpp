#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "bvspec/expression.hpp"
#include "bvspec/types.hpp"

namespace bvspec {

/// Diagonal weight matrix B = diag(b_1..b_n), every b_j nonzero.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  explicit WeightMatrix(std::vector<Complex> entries) : entries_(std::move(entries)) {}
  static WeightMatrix diag2(Complex b1, Complex b2) { return WeightMatrix({b1, b2}); }

  int n() const { return static_cast<int>(entries_.size()); }
  Complex entry(int j) const { return entries_[static_cast<std::size_t>(j)]; }
  const std::vector<Complex>& entries() const { return entries_; }

  /// n=2 only: true when b1/b2 has nonzero imaginary part.
  bool essential_non_dirac() const {
    if (n() != 2) throw DimensionError("essential_non_dirac requires n=2");
    return std::imag(entries_[0] / entries_[1]) != 0.0;
  }

  MatrixXc matrix() const {
    MatrixXc m = MatrixXc::Zero(n(), n());
    for (int j = 0; j < n(); ++j) m(j, j) = entry(j);
    return m;
  }

  WeightMatrix negated() const {
    auto e = entries_;
    for (auto& b : e) b = -b;
    return WeightMatrix(std::move(e));
  }

  WeightMatrix conjugated() const {
    auto e = entries_;
    for (auto& b : e) b = std::conj(b);
    return WeightMatrix(std::move(e));
  }

  bool operator==(const WeightMatrix& o) const { return entries_ == o.entries_; }

 private:
  std::vector<Complex> entries_;
};

/// Off-diagonal 2x2 potential Q = (0 Q12; Q21 0).
struct PotentialSpec {
  ScalarExpr q12;
  ScalarExpr q21;

  bool is_zero() const { return q12.is_zero() && q21.is_zero(); }
  bool is_polynomial() const { return q12.is_polynomial() && q21.is_polynomial(); }

  Mat2 eval(double x) const {
    Mat2 q = Mat2::Zero();
    q(0, 1) = q12.eval(x);
    q(1, 0) = q21.eval(x);
    return q;
  }

  std::vector<double> breakpoints() const {
    std::vector<double> b = q12.interior_breakpoints();
    const auto& b2 = q21.interior_breakpoints();
    b.insert(b.end(), b2.begin(), b2.end());
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end(),
                        [](double u, double v) { return std::abs(u - v) < 1e-12; }),
            b.end());
    return b;
  }

  /// max of the two entrywise sup-norms, the C[0,1] norm used for smallness tests.
  double sup_norm() const { return std::max(q12.sup_norm(), q21.sup_norm()); }

  PotentialSpec swapped() const { return {q21, q12}; }
  PotentialSpec reflected() const { return {q12.reflected(), q21.reflected()}; }
  PotentialSpec adjoint() const { return {q21.conjugated(), q12.conjugated()}; }

  bool operator==(const PotentialSpec& o) const { return q12 == o.q12 && q21 == o.q21; }
};

/// Boundary conditions C y(0) + D y(1) = 0 stored as the (C, D) pair; the
/// 2x4 coefficient-row view (a_jk) is derived, never stored.
class BoundarySpec {
 public:
  BoundarySpec() = default;
  BoundarySpec(MatrixXc C, MatrixXc D) : C_(std::move(C)), D_(std::move(D)) {
    if (C_.rows() != C_.cols() || D_.rows() != D_.cols() || C_.rows() != D_.rows())
      throw DimensionError("boundary matrices must be square and same size");
  }

  /// n=2 helper: build from the two coefficient rows (a_j1, a_j2, a_j3, a_j4).
  static BoundarySpec from_rows(const std::array<Complex, 4>& r1,
                                const std::array<Complex, 4>& r2) {
    MatrixXc C(2, 2), D(2, 2);
    C << r1[0], r1[1], r2[0], r2[1];
    D << r1[2], r1[3], r2[2], r2[3];
    return BoundarySpec(std::move(C), std::move(D));
  }

  static BoundarySpec quasi_periodic(Complex d1, Complex d2) {
    return from_rows({1.0, 0.0, -d1, 0.0}, {0.0, 1.0, 0.0, -d2});
  }

  /// y1(0) - h1 y2(0) = 0, y1(1) - h2 y2(0) = 0.
  static BoundarySpec special(Complex h1, Complex h2) {
    return from_rows({1.0, -h1, 0.0, 0.0}, {0.0, -h2, 1.0, 0.0});
  }

  int n() const { return static_cast<int>(C_.rows()); }
  const MatrixXc& C() const { return C_; }
  const MatrixXc& D() const { return D_; }

  /// The n x 2n block (C D); for n=2 column order y1(0), y2(0), y1(1), y2(1).
  MatrixXc block() const {
    MatrixXc b(n(), 2 * n());
    b << C_, D_;
    return b;
  }

  int block_rank(double rel_tol = 1e-10) const {
    Eigen::JacobiSVD<MatrixXc> svd(block());
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) > rel_tol * s(0)) ++r;
    return r;
  }

  bool maximal() const { return block_rank() == n(); }

  bool finite() const {
    return C_.allFinite() && D_.allFinite();
  }

 private:
  MatrixXc C_, D_;
};

/// The six 2x2 minors J_jk = det A_jk of the coefficient block, n=2.
struct BoundaryInvariants {
  Complex j12, j13, j14, j32, j42, j34;

  /// Any J_jk including antisymmetric companions (J_kj = -J_jk, J_jj = 0).
  Complex j(int a, int b) const {
    if (a == b) return {0.0, 0.0};
    if (a > b) return -j(b, a);
    if (a == 1 && b == 2) return j12;
    if (a == 1 && b == 3) return j13;
    if (a == 1 && b == 4) return j14;
    if (a == 2 && b == 3) return -j32;
    if (a == 2 && b == 4) return -j42;
    return j34;  // (3,4)
  }

  double scale() const {
    return std::max({std::abs(j12), std::abs(j13), std::abs(j14), std::abs(j32),
                     std::abs(j42), std::abs(j34)});
  }
};

inline BoundaryInvariants compute_j_invariants(const BoundarySpec& bc) {
  if (bc.n() != 2) throw DimensionError("J-invariants are defined for n=2 only");
  MatrixXc b = bc.block();
  auto minor = [&](int c1, int c2) {
    return b(0, c1) * b(1, c2) - b(0, c2) * b(1, c1);
  };
  BoundaryInvariants j;
  j.j12 = minor(0, 1);
  j.j13 = minor(0, 2);
  j.j14 = minor(0, 3);
  j.j32 = minor(2, 1);
  j.j42 = minor(3, 1);
  j.j34 = minor(2, 3);
  return j;
}

/// True when the two blocks define the same set of boundary conditions,
/// i.e. the stacked 4x4 block still has rank 2.
inline bool row_equivalent(const BoundarySpec& a, const BoundarySpec& b) {
  if (a.n() != b.n()) return false;
  MatrixXc s(2 * a.n(), 2 * a.n());
  s << a.block(), b.block();
  Eigen::JacobiSVD<MatrixXc> svd(s);
  const auto& sv = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-10 * sv(0)) ++r;
  return r == a.n();
}

struct SolverSettings {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  int panels = 24;
  double trust_im = 50.0;  // |Im(b_j lambda)| beyond this is rejected

  bool operator==(const SolverSettings&) const = default;
};

struct ProblemSpec {
  WeightMatrix B;
  PotentialSpec Q;
  BoundarySpec bc;
  SolverSettings solver;
};

struct Diagnostic {
  std::string code;
  std::string message;
};

/// Checks every type invariant; reports all failures instead of stopping at the first.
inline std::vector<Diagnostic> validate(const ProblemSpec& p) {
  std::vector<Diagnostic> out;
  if (p.B.n() == 0) out.push_back({"empty_weight", "weight matrix has no entries"});
  for (int j = 0; j < p.B.n(); ++j) {
    if (!is_finite(p.B.entry(j)))
      out.push_back({"nonfinite_weight", "weight entry b" + std::to_string(j + 1)});
    else if (p.B.entry(j) == Complex{0, 0})
      out.push_back({"singular_weight",
                     "singular weight: b" + std::to_string(j + 1) + " = 0"});
  }
  if (p.bc.n() != p.B.n())
    out.push_back({"dimension_mismatch", "boundary matrices do not match weight size"});
  if (!p.bc.finite())
    out.push_back({"nonfinite_boundary", "boundary matrices contain NaN/Inf"});
  else if (!p.bc.maximal())
    out.push_back({"maximality_violated",
                   "maximality violated: rank(C D) < n"});
  if (!p.Q.q12.finite_coefficients() || !p.Q.q21.finite_coefficients())
    out.push_back({"nonfinite_potential", "potential coefficients contain NaN/Inf"});
  if (!(p.solver.rel_tol > 0) || !(p.solver.abs_tol > 0))
    out.push_back({"bad_tolerance", "solver tolerances must be positive"});
  if (p.solver.panels < 2)
    out.push_back({"bad_panels", "quadrature needs at least 2 panels"});
  if (!(p.solver.trust_im > 0))
    out.push_back({"bad_trust_region", "trust region bound must be positive"});
  return out;
}

enum class Transform { SwapComponents, ReflectInterval };

/// The simplest linear transforms: component swap y -> (y2,y1) and interval
/// reflection x -> 1-x. Both produce an equivalent problem.
inline ProblemSpec apply_equivalence_transform(const ProblemSpec& p, Transform t) {
  if (p.B.n() != 2) throw DimensionError("equivalence transforms require n=2");
  ProblemSpec out = p;
  if (t == Transform::SwapComponents) {
    out.B = WeightMatrix({p.B.entry(1), p.B.entry(0)});
    out.Q = p.Q.swapped();
    MatrixXc P(2, 2);
    P << 0, 1, 1, 0;
    out.bc = BoundarySpec(p.bc.C() * P, p.bc.D() * P);
  } else {
    out.B = p.B.negated();
    out.Q = p.Q.reflected();
    out.bc = BoundarySpec(p.bc.D(), p.bc.C());
  }
  return out;
}

}  // namespace bvspec
