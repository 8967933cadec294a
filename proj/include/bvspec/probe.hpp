#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "bvspec/grid.hpp"
#include "bvspec/integrate.hpp"
#include "bvspec/problem.hpp"
#include "bvspec/spectrum.hpp"
#include "bvspec/types.hpp"

namespace bvspec {

namespace detail {

/// Tolerance-cleaned reduced row echelon form; canonical representative of the
/// row space, entries snapped to exact zeros below 1e-12 of the block scale.
inline MatrixXc rref(MatrixXc m) {
  double scale = std::max(1e-300, m.cwiseAbs().maxCoeff());
  Eigen::Index pivot_row = 0;
  for (Eigen::Index col = 0; col < m.cols() && pivot_row < m.rows(); ++col) {
    Eigen::Index best = pivot_row;
    for (Eigen::Index r = pivot_row + 1; r < m.rows(); ++r)
      if (std::abs(m(r, col)) > std::abs(m(best, col))) best = r;
    if (std::abs(m(best, col)) <= 1e-12 * scale) continue;
    m.row(pivot_row).swap(m.row(best));
    m.row(pivot_row) /= m(pivot_row, col);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      if (r != pivot_row) m.row(r) -= m(r, col) * m.row(pivot_row);
    ++pivot_row;
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (std::abs(m(r, c)) <= 1e-12) m(r, c) = Complex{0, 0};
  return m;
}

}  // namespace detail

/// The adjoint BVP: weight B^*, potential Q^* (conjugate transpose), and
/// boundary rows spanning the annihilator of [iB^*C^*; -iB^*D^*], the
/// Lagrange-identity pairing of the original boundary space.
inline ProblemSpec adjoint_problem(const ProblemSpec& p) {
  if (p.B.n() != 2) throw DimensionError("adjoint_problem requires n=2");
  ProblemSpec adj = p;
  adj.B = p.B.conjugated();
  adj.Q = p.Q.adjoint();
  MatrixXc bstar = adj.B.matrix();
  int n = p.B.n();
  MatrixXc pairing(2 * n, n);
  pairing.topRows(n) = kI * bstar * p.bc.C().adjoint();
  pairing.bottomRows(n) = -kI * bstar * p.bc.D().adjoint();
  // rows r with r * pairing = 0  <=>  pairing^T r^T = 0
  Eigen::FullPivLU<MatrixXc> lu(pairing.transpose());
  lu.setThreshold(1e-10);
  MatrixXc kernel = lu.kernel();  // 2n x n
  if (kernel.cols() != n)
    throw ValidationError("adjoint annihilator has unexpected dimension");
  MatrixXc rows = detail::rref(kernel.transpose());
  adj.bc = BoundarySpec(rows.leftCols(n), rows.rightCols(n));
  return adj;
}

struct EigenfunctionResult {
  Complex lambda;
  std::vector<SampledFunction> basis;  // one entry when geometrically simple
  bool simple = true;
  double sigma_min = 0.0;
};

namespace detail {

/// Deterministic phase: the largest-modulus sample component becomes real positive.
inline void fix_phase(SampledFunction& f) {
  double best = -1.0;
  Complex pivot{1.0, 0.0};
  for (const auto& v : f.values)
    for (int c = 0; c < 2; ++c)
      if (std::abs(v(c)) > best + 1e-15) {
        best = std::abs(v(c));
        pivot = v(c);
      }
  Complex rot = std::conj(pivot) / std::abs(pivot);
  for (auto& v : f.values) v *= rot;
}

}  // namespace detail

/// Eigenfunction(s) at a refined eigenvalue: right null vector(s) of
/// C + D Phi(1,lambda) propagated as y = Phi(.,lambda) v, unit-normalized.
inline EigenfunctionResult eigenfunction(const ProblemSpec& p, Complex lambda,
                                         GridPtr grid = nullptr) {
  FundamentalSolution fs = fundamental_matrix(p, lambda, false, std::move(grid));
  Mat2 u = p.bc.C() + p.bc.D() * fs.phi_at_1;
  Eigen::JacobiSVD<Mat2> svd(u, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  double uscale = std::max(1.0, u.norm());
  EigenfunctionResult res;
  res.lambda = lambda;
  res.sigma_min = s(1);
  res.simple = s(0) > 1e-8 * uscale;
  int null_dim = res.simple ? 1 : 2;
  for (int k = 0; k < null_dim; ++k) {
    Vec2 v = svd.matrixV().col(1 - k);
    SampledFunction y;
    y.grid = fs.grid;
    y.values.resize(fs.phi.size());
    for (std::size_t i = 0; i < fs.phi.size(); ++i) y.values[i] = fs.phi[i] * v;
    double nrm = l2_norm(y);
    if (nrm == 0.0) throw ValidationError("eigenfunction has zero norm");
    for (auto& val : y.values) val /= nrm;
    detail::fix_phase(y);
    res.basis.push_back(std::move(y));
  }
  return res;
}

struct EigenfunctionBundle {
  GridPtr grid;
  std::vector<Complex> lambdas;           // one per member
  std::vector<SampledFunction> members;   // unit-normalized
};

/// Eigenvalues of the set sorted by (|lambda|, re, im); refined entries only.
inline std::vector<Complex> leading_eigenvalues(const EigenvalueSet& ev, int count) {
  std::vector<Complex> ls;
  for (const auto& e : ev.items)
    if (e.refined) ls.push_back(e.lambda);
  std::sort(ls.begin(), ls.end(), [](Complex a, Complex b) {
    double ma = std::abs(a), mb = std::abs(b);
    if (ma != mb) return ma < mb;
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  if (static_cast<int>(ls.size()) > count) ls.resize(static_cast<std::size_t>(count));
  return ls;
}

inline EigenfunctionBundle build_bundle(const ProblemSpec& p,
                                        const std::vector<Complex>& lambdas,
                                        GridPtr grid = nullptr) {
  EigenfunctionBundle b;
  b.grid = grid ? std::move(grid) : make_grid(p);
  for (Complex lambda : lambdas) {
    EigenfunctionResult ef = eigenfunction(p, lambda, b.grid);
    for (auto& f : ef.basis) {
      b.lambdas.push_back(lambda);
      b.members.push_back(std::move(f));
    }
  }
  return b;
}

/// sup_{x in [a,1]} |f_2(x)| per bundle member (unit-normalized members).
inline std::vector<double> second_component_residual(const EigenfunctionBundle& bundle,
                                                     double a) {
  if (!(a > 0.0 && a < 1.0) && a != 0.0)
    throw ValidationError("second_component_residual needs a in [0,1)");
  std::vector<double> out;
  out.reserve(bundle.members.size());
  for (const auto& f : bundle.members) {
    double sup = 0.0;
    for (int i = 0; i < bundle.grid->point_count(); ++i)
      if (bundle.grid->point(i) >= a)
        sup = std::max(sup, std::abs(f.values[static_cast<std::size_t>(i)](1)));
    out.push_back(sup);
  }
  return out;
}

namespace detail {

inline MatrixXc gram_matrix(const EigenfunctionBundle& bundle, int n) {
  MatrixXc g(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k <= j; ++k) {
      Complex v = inner_product(bundle.members[static_cast<std::size_t>(k)],
                                bundle.members[static_cast<std::size_t>(j)]);
      g(j, k) = v;
      g(k, j) = std::conj(v);
    }
  return g;
}

}  // namespace detail

struct DefectReport {
  std::string test_function;
  std::vector<std::pair<int, double>> residual_by_n;
  bool gram_flagged = false;
};

/// Relative residual of the best approximation of w from the span of the first
/// N bundle members (normal equations on the Gram matrix, Tikhonov 1e-12 when
/// ill-conditioned).
inline DefectReport completeness_defect(const EigenfunctionBundle& bundle,
                                        const SampledFunction& w,
                                        const std::vector<int>& n_list,
                                        std::string label = "w") {
  if (bundle.members.empty()) throw ValidationError("completeness_defect: empty bundle");
  DefectReport rep;
  rep.test_function = std::move(label);
  double wnorm = l2_norm(w);
  if (wnorm == 0.0) throw ValidationError("completeness_defect: w = 0");
  int max_n = 0;
  for (int n : n_list) max_n = std::max(max_n, n);
  max_n = std::min<int>(max_n, static_cast<int>(bundle.members.size()));
  MatrixXc gram = detail::gram_matrix(bundle, max_n);
  VectorXc rhs(max_n);
  for (int j = 0; j < max_n; ++j)
    rhs(j) = inner_product(w, bundle.members[static_cast<std::size_t>(j)]);
  for (int n : n_list) {
    int nn = std::min<int>(n, max_n);
    MatrixXc g = gram.topLeftCorner(nn, nn);
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(g);
    double emax = es.eigenvalues().maxCoeff();
    double emin = es.eigenvalues().minCoeff();
    if (!(emax > 0.0)) {
      rep.gram_flagged = true;
      rep.residual_by_n.emplace_back(n, 1.0);
      continue;
    }
    if (emin < 1e-12 * emax) {
      g.diagonal().array() += 1e-12;
      if (emin <= 1e-14 * emax) rep.gram_flagged = true;
    }
    VectorXc c = g.ldlt().solve(rhs.head(nn));
    SampledFunction proj;
    proj.grid = w.grid;
    proj.values.assign(w.values.size(), Vec2::Zero());
    for (int k = 0; k < nn; ++k)
      for (std::size_t i = 0; i < proj.values.size(); ++i)
        proj.values[i] += c(k) * bundle.members[static_cast<std::size_t>(k)].values[i];
    SampledFunction diff;
    diff.grid = w.grid;
    diff.values.resize(w.values.size());
    for (std::size_t i = 0; i < w.values.size(); ++i)
      diff.values[i] = w.values[i] - proj.values[i];
    rep.residual_by_n.emplace_back(n, l2_norm(diff) / wnorm);
  }
  return rep;
}

/// 2-norm condition number of the N x N Gram matrix of the first N members;
/// infinity when numerically singular.
inline double gram_condition(const EigenfunctionBundle& bundle, int n) {
  if (n < 1 || n > static_cast<int>(bundle.members.size()))
    throw ValidationError("gram_condition: N out of range");
  MatrixXc g = detail::gram_matrix(bundle, n);
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(g);
  double emax = es.eigenvalues().maxCoeff();
  double emin = es.eigenvalues().minCoeff();
  if (emin <= 1e-14 * std::max(emax, 0.0))
    return std::numeric_limits<double>::infinity();
  return emax / emin;
}

}  // namespace bvspec
