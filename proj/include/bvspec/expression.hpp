#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "bvspec/types.hpp"

namespace bvspec {

enum class ExprKind { Zero, Constant, Poly, Piecewise };

/// A scalar coefficient function on [0,1]: zero, a constant, a polynomial in x,
/// or a piecewise polynomial over a finite partition. Pieces are polynomials in
/// the global variable x; piece i lives on [t_i, t_{i+1}) with t_0 = 0, t_last = 1
/// (the last piece also covers x = 1).
class ScalarExpr {
 public:
  ScalarExpr() : kind_(ExprKind::Zero) {}

  static ScalarExpr zero() { return ScalarExpr(); }

  static ScalarExpr constant(Complex c) {
    ScalarExpr e;
    e.kind_ = ExprKind::Constant;
    e.coeffs_ = {c};
    return e;
  }

  static ScalarExpr poly(std::vector<Complex> ascending_coeffs) {
    ScalarExpr e;
    e.kind_ = ExprKind::Poly;
    e.coeffs_ = std::move(ascending_coeffs);
    return e;
  }

  static ScalarExpr piecewise(std::vector<double> interior_breakpoints,
                              std::vector<std::vector<Complex>> pieces) {
    if (pieces.size() != interior_breakpoints.size() + 1)
      throw ValidationError("piecewise expression needs breakpoints+1 pieces");
    for (std::size_t i = 0; i < interior_breakpoints.size(); ++i) {
      double t = interior_breakpoints[i];
      if (!(t > 0.0 && t < 1.0)) throw ValidationError("piecewise breakpoint outside (0,1)");
      if (i > 0 && !(t > interior_breakpoints[i - 1]))
        throw ValidationError("piecewise breakpoints not strictly increasing");
    }
    ScalarExpr e;
    e.kind_ = ExprKind::Piecewise;
    e.breaks_ = std::move(interior_breakpoints);
    e.pieces_ = std::move(pieces);
    return e;
  }

  ExprKind kind() const { return kind_; }

  Complex eval(double x) const {
    switch (kind_) {
      case ExprKind::Zero:
        return {0.0, 0.0};
      case ExprKind::Constant:
        return coeffs_[0];
      case ExprKind::Poly:
        return horner(coeffs_, x);
      case ExprKind::Piecewise: {
        std::size_t i =
            std::upper_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin();
        if (x >= 1.0) i = pieces_.size() - 1;
        return horner(pieces_[i], x);
      }
    }
    return {0.0, 0.0};
  }

  /// Symbolically zero (kind Zero, or all stored coefficients exactly zero).
  bool is_zero() const {
    if (kind_ == ExprKind::Zero) return true;
    auto all0 = [](const std::vector<Complex>& c) {
      return std::all_of(c.begin(), c.end(), [](Complex z) { return z == Complex{0, 0}; });
    };
    if (kind_ == ExprKind::Piecewise)
      return std::all_of(pieces_.begin(), pieces_.end(), all0);
    return all0(coeffs_);
  }

  /// A single polynomial on all of [0,1] (entire as a function of x).
  bool is_polynomial() const { return kind_ != ExprKind::Piecewise; }

  bool is_constant() const {
    if (kind_ == ExprKind::Zero || kind_ == ExprKind::Constant) return true;
    if (kind_ == ExprKind::Poly) {
      for (std::size_t k = 1; k < coeffs_.size(); ++k)
        if (coeffs_[k] != Complex{0, 0}) return false;
      return true;
    }
    return false;
  }

  Complex constant_value() const { return eval(0.0); }

  const std::vector<double>& interior_breakpoints() const { return breaks_; }

  /// sup-norm over [0,1] by dense sampling (plus breakpoints).
  double sup_norm(int samples = 2001) const {
    double m = 0.0;
    for (int i = 0; i < samples; ++i) {
      double x = static_cast<double>(i) / (samples - 1);
      m = std::max(m, std::abs(eval(x)));
    }
    for (double t : breaks_) m = std::max(m, std::abs(eval(t)));
    return m;
  }

  ScalarExpr conjugated() const {
    ScalarExpr e(*this);
    auto cj = [](std::vector<Complex>& c) {
      for (auto& z : c) z = std::conj(z);
    };
    cj(e.coeffs_);
    for (auto& p : e.pieces_) cj(p);
    return e;
  }

  /// Composition with x -> 1-x (breakpoints reflect, pieces reverse).
  ScalarExpr reflected() const {
    switch (kind_) {
      case ExprKind::Zero:
      case ExprKind::Constant:
        return *this;
      case ExprKind::Poly:
        return poly(compose_1_minus_x(coeffs_));
      case ExprKind::Piecewise: {
        std::vector<double> rb(breaks_.rbegin(), breaks_.rend());
        for (auto& t : rb) t = 1.0 - t;
        std::vector<std::vector<Complex>> rp(pieces_.rbegin(), pieces_.rend());
        for (auto& p : rp) p = compose_1_minus_x(p);
        return piecewise(std::move(rb), std::move(rp));
      }
    }
    return *this;
  }

  bool finite_coefficients() const {
    auto fin = [](const std::vector<Complex>& c) {
      return std::all_of(c.begin(), c.end(), [](Complex z) { return is_finite(z); });
    };
    if (kind_ == ExprKind::Piecewise)
      return std::all_of(pieces_.begin(), pieces_.end(), fin);
    return fin(coeffs_);
  }

  bool operator==(const ScalarExpr& o) const {
    return kind_ == o.kind_ && coeffs_ == o.coeffs_ && breaks_ == o.breaks_ &&
           pieces_ == o.pieces_;
  }

  const std::vector<Complex>& coefficients() const { return coeffs_; }
  const std::vector<std::vector<Complex>>& pieces() const { return pieces_; }

 private:
  static Complex horner(const std::vector<Complex>& c, double x) {
    Complex acc{0.0, 0.0};
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc;
  }

  // p(1-x) expanded in powers of x via binomial coefficients.
  static std::vector<Complex> compose_1_minus_x(const std::vector<Complex>& c) {
    std::vector<Complex> out(c.size(), Complex{0, 0});
    for (std::size_t k = 0; k < c.size(); ++k) {
      double binom = 1.0;
      for (std::size_t j = 0; j <= k; ++j) {
        double sign = (j % 2 == 0) ? 1.0 : -1.0;
        out[j] += c[k] * sign * binom;
        binom = binom * static_cast<double>(k - j) / static_cast<double>(j + 1);
      }
    }
    return out;
  }

  ExprKind kind_;
  std::vector<Complex> coeffs_;              // Constant/Poly
  std::vector<double> breaks_;               // Piecewise, interior points
  std::vector<std::vector<Complex>> pieces_; // Piecewise
};

}  // namespace bvspec
