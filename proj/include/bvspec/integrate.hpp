#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "bvspec/grid.hpp"
#include "bvspec/problem.hpp"
#include "bvspec/types.hpp"

namespace bvspec {

namespace detail {

// Dormand-Prince 5(4) tableau.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b*: weights of the embedded error estimate.
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

/// State of the co-integrated pair (Phi, W); W carries d(Phi)/d(lambda).
struct PhiState {
  Mat2 phi = Mat2::Zero();
  Mat2 w = Mat2::Zero();
  bool with_w = false;

  PhiState scaled_add(double h, const PhiState& k) const {
    PhiState r = *this;
    r.phi += h * k.phi;
    if (with_w) r.w += h * k.w;
    return r;
  }
};

class FundamentalRhs {
 public:
  FundamentalRhs(const WeightMatrix& B, const PotentialSpec& Q, Complex lambda)
      : q_(&Q), lambda_(lambda) {
    ib1_ = kI * B.entry(0);
    ib2_ = kI * B.entry(1);
  }

  // Phi' = iB(lambda I - Q(x)) Phi;  W' = iB(lambda I - Q(x)) W + iB Phi.
  PhiState operator()(double x, const PhiState& s) const {
    Mat2 a;
    a(0, 0) = ib1_ * lambda_;
    a(0, 1) = -ib1_ * q_->q12.eval(x);
    a(1, 0) = -ib2_ * q_->q21.eval(x);
    a(1, 1) = ib2_ * lambda_;
    PhiState d;
    d.with_w = s.with_w;
    d.phi = a * s.phi;
    if (s.with_w) {
      d.w = a * s.w;
      d.w.row(0) += ib1_ * s.phi.row(0);
      d.w.row(1) += ib2_ * s.phi.row(1);
    }
    return d;
  }

 private:
  const PotentialSpec* q_;
  Complex lambda_;
  Complex ib1_, ib2_;
};

inline double step_error_norm(const PhiState& y, const PhiState& ynew, const PhiState& err,
                              double atol, double rtol) {
  double acc = 0.0;
  int count = 0;
  auto add = [&](const Mat2& e, const Mat2& a, const Mat2& b) {
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        double sc = atol + rtol * std::max(std::abs(a(r, c)), std::abs(b(r, c)));
        double q = std::abs(e(r, c)) / sc;
        acc += q * q;
        ++count;
      }
  };
  add(err.phi, y.phi, ynew.phi);
  if (y.with_w) add(err.w, y.w, ynew.w);
  return std::sqrt(acc / count);
}

/// One Dormand-Prince step; fills ynew and returns the scaled error norm.
inline double dopri_step(const FundamentalRhs& f, double x, double h, const PhiState& y,
                         PhiState& ynew, double atol, double rtol) {
  using T = Dopri5;
  PhiState k1 = f(x, y);
  PhiState k2 = f(x + T::c2 * h, y.scaled_add(h * T::a21, k1));
  PhiState k3 = f(x + T::c3 * h, y.scaled_add(h * T::a31, k1).scaled_add(h * T::a32, k2));
  PhiState k4 = f(x + T::c4 * h, y.scaled_add(h * T::a41, k1)
                                     .scaled_add(h * T::a42, k2)
                                     .scaled_add(h * T::a43, k3));
  PhiState k5 = f(x + T::c5 * h, y.scaled_add(h * T::a51, k1)
                                     .scaled_add(h * T::a52, k2)
                                     .scaled_add(h * T::a53, k3)
                                     .scaled_add(h * T::a54, k4));
  PhiState k6 = f(x + h, y.scaled_add(h * T::a61, k1)
                             .scaled_add(h * T::a62, k2)
                             .scaled_add(h * T::a63, k3)
                             .scaled_add(h * T::a64, k4)
                             .scaled_add(h * T::a65, k5));
  ynew = y.scaled_add(h * T::b1, k1)
             .scaled_add(h * T::b3, k3)
             .scaled_add(h * T::b4, k4)
             .scaled_add(h * T::b5, k5)
             .scaled_add(h * T::b6, k6);
  PhiState k7 = f(x + h, ynew);
  PhiState err;
  err.with_w = y.with_w;
  err = err.scaled_add(h * T::e1, k1)
            .scaled_add(h * T::e3, k3)
            .scaled_add(h * T::e4, k4)
            .scaled_add(h * T::e5, k5)
            .scaled_add(h * T::e6, k6)
            .scaled_add(h * T::e7, k7);
  return step_error_norm(y, ynew, err, atol, rtol);
}

inline void check_trust_region(const ProblemSpec& p, Complex lambda) {
  for (int j = 0; j < p.B.n(); ++j) {
    double im = std::abs(std::imag(p.B.entry(j) * lambda));
    if (im > p.solver.trust_im)
      throw TrustRegionError("|Im(b" + std::to_string(j + 1) +
                             " lambda)| exceeds the trust region bound");
  }
}

/// Integrates Phi (and optionally W) from 0 to 1, invoking `record` at each
/// requested output point. Adaptive steps never straddle an output point, so
/// potential breakpoints included in `outputs` restart the interpolation.
template <typename Record>
void integrate_fundamental(const ProblemSpec& p, Complex lambda, bool with_w,
                           const std::vector<double>& outputs, Record&& record,
                           double fixed_step = 0.0) {
  if (p.B.n() != 2) throw DimensionError("fundamental system integration requires n=2");
  check_trust_region(p, lambda);
  FundamentalRhs rhs(p.B, p.Q, lambda);
  PhiState y;
  y.phi = Mat2::Identity();
  y.w = Mat2::Zero();
  y.with_w = with_w;

  const double atol = p.solver.abs_tol, rtol = p.solver.rel_tol;
  double x = 0.0;
  std::size_t next_out = 0;
  if (!outputs.empty() && outputs[0] == 0.0) {
    record(0.0, y);
    next_out = 1;
  }

  double qmag = std::abs(p.Q.q12.eval(0.5)) + std::abs(p.Q.q21.eval(0.5));
  double speed = std::max({std::abs(p.B.entry(0) * lambda), std::abs(p.B.entry(1) * lambda),
                           qmag * std::max(std::abs(p.B.entry(0)), std::abs(p.B.entry(1))),
                           1.0});
  double h = std::min(0.1, 0.5 / speed);
  if (fixed_step > 0.0) h = fixed_step;

  while (x < 1.0) {
    double target = (next_out < outputs.size()) ? outputs[next_out] : 1.0;
    if (target <= x + 1e-15) {
      record(target, y);
      ++next_out;
      continue;
    }
    double hstep = std::min(h, target - x);
    bool clipped = hstep < h;
    PhiState ynew;
    double err = dopri_step(rhs, x, hstep, y, ynew, atol, rtol);
    if (fixed_step > 0.0 || err <= 1.0) {
      x = (hstep == target - x) ? target : x + hstep;
      y = ynew;
      if (x >= target - 1e-15 && next_out < outputs.size()) {
        record(target, y);
        ++next_out;
        x = target;
      }
      if (fixed_step == 0.0 && !clipped) {
        double grow = (err > 1e-30) ? 0.9 * std::pow(err, -0.2) : 5.0;
        h = hstep * std::clamp(grow, 0.2, 5.0);
      }
    } else {
      h = hstep * std::clamp(0.9 * std::pow(err, -0.2), 0.2, 0.9);
    }
    if (h < 1e-14) throw StiffnessError("step size underflow while integrating Phi");
    if (!y.phi.allFinite()) throw StiffnessError("overflow while integrating Phi");
  }
}

}  // namespace detail

/// Evaluator data for Phi(.,lambda) on a grid: per-point matrices, their
/// inverses, Phi(1,lambda), and optionally dPhi/dlambda(1,lambda).
struct FundamentalSolution {
  Complex lambda;
  GridPtr grid;
  std::vector<Mat2> phi;
  std::vector<Mat2> phi_inv;
  Mat2 phi_at_1;
  std::optional<Mat2> dphi_dlambda_at_1;
};

/// Integrates the fundamental system across every grid sample point.
/// Phi(0,lambda) = I exactly; throws if any sample is numerically singular.
inline FundamentalSolution fundamental_matrix(const ProblemSpec& p, Complex lambda,
                                              bool want_derivative = false,
                                              GridPtr grid = nullptr) {
  FundamentalSolution fs;
  fs.lambda = lambda;
  fs.grid = grid ? std::move(grid) : make_grid(p);
  fs.phi.reserve(static_cast<std::size_t>(fs.grid->point_count()));
  detail::integrate_fundamental(
      p, lambda, want_derivative, fs.grid->points(),
      [&](double, const detail::PhiState& s) {
        fs.phi.push_back(s.phi);
        fs.phi_at_1 = s.phi;
        if (s.with_w) fs.dphi_dlambda_at_1 = s.w;
      });
  fs.phi_inv.reserve(fs.phi.size());
  for (const auto& m : fs.phi) {
    Complex det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    if (!(std::abs(det) > 0.0))
      throw StiffnessError("fundamental matrix became singular at a sample point");
    Mat2 inv;
    inv << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
    fs.phi_inv.push_back(inv / det);
  }
  return fs;
}

struct EndpointSolution {
  Mat2 phi_at_1;
  std::optional<Mat2> dphi_dlambda_at_1;
};

/// Phi(1,lambda) (and optionally its lambda-derivative) without grid sampling;
/// integration still restarts at potential breakpoints.
inline EndpointSolution integrate_endpoint(const ProblemSpec& p, Complex lambda,
                                           bool want_derivative = false,
                                           double fixed_step = 0.0) {
  std::vector<double> outputs = p.Q.breakpoints();
  outputs.push_back(1.0);
  EndpointSolution out;
  detail::integrate_fundamental(
      p, lambda, want_derivative, outputs,
      [&](double, const detail::PhiState& s) {
        out.phi_at_1 = s.phi;
        if (s.with_w) out.dphi_dlambda_at_1 = s.w;
      },
      fixed_step);
  return out;
}

/// (K_lambda f)(x) = Phi(x,lambda) int_0^x Phi^{-1}(t,lambda) iB f(t) dt.
inline SampledFunction apply_K(const ProblemSpec& p, const FundamentalSolution& fs,
                               const SampledFunction& f) {
  if (!(fs.grid == f.grid) && !(*fs.grid == *f.grid))
    throw ValidationError("apply_K: fundamental solution and f use different grids");
  const QuadratureGrid& grid = *fs.grid;
  Mat2 iB = Mat2::Zero();
  iB(0, 0) = kI * p.B.entry(0);
  iB(1, 1) = kI * p.B.entry(1);
  std::vector<Vec2> integrand(f.values.size());
  for (std::size_t i = 0; i < f.values.size(); ++i)
    integrand[i] = fs.phi_inv[i] * (iB * f.values[i]);
  std::vector<Vec2> cumulative = cumulative_integral(grid, integrand);
  SampledFunction out;
  out.grid = fs.grid;
  out.values.resize(cumulative.size());
  for (std::size_t i = 0; i < cumulative.size(); ++i)
    out.values[i] = fs.phi[i] * cumulative[i];
  return out;
}

/// Psi(x,lambda) = i Phi(1,lambda) Phi^{-1}(x,lambda) B at every grid point.
inline std::vector<Mat2> psi_matrices(const ProblemSpec& p, const FundamentalSolution& fs) {
  Mat2 iB = Mat2::Zero();
  iB(0, 0) = kI * p.B.entry(0);
  iB(1, 1) = kI * p.B.entry(1);
  std::vector<Mat2> out(fs.phi.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = fs.phi_at_1 * fs.phi_inv[i] * iB;
  return out;
}

}  // namespace bvspec
