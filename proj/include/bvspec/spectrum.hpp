#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <vector>

#include "bvspec/chardet.hpp"
#include "bvspec/problem.hpp"
#include "bvspec/types.hpp"

namespace bvspec {

struct Rect {
  double x0, x1, y0, y1;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double diagonal() const { return std::hypot(width(), height()); }
  Complex center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
  bool contains(Complex z, double slack = 0.0) const {
    return z.real() >= x0 - slack && z.real() <= x1 + slack && z.imag() >= y0 - slack &&
           z.imag() <= y1 + slack;
  }
  Rect dilated(double factor) const {
    double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
    double hw = 0.5 * width() * factor, hh = 0.5 * height() * factor;
    return {cx - hw, cx + hw, cy - hh, cy + hh};
  }
};

namespace detail {

struct BoundarySample {
  double t;  // arclength-like parameter along the closed boundary
  Complex lambda;
  Complex delta;
  double scale;
};

class BoundaryScan {
 public:
  BoundaryScan(const ProblemSpec& p, Rect r) : p_(&p), rect_(r) {
    perim_ = 2.0 * (r.width() + r.height());
  }

  Complex point_at(double t) const {
    double w = rect_.width(), h = rect_.height();
    double s = t * perim_;
    if (s <= w) return {rect_.x0 + s, rect_.y0};
    s -= w;
    if (s <= h) return {rect_.x1, rect_.y0 + s};
    s -= h;
    if (s <= w) return {rect_.x1 - s, rect_.y1};
    s -= w;
    return {rect_.x0, rect_.y1 - s};
  }

  BoundarySample sample(double t) const {
    CharDetValue cd = char_det(*p_, point_at(t), false);
    return {t, point_at(t), cd.value, cd.scale};
  }

  /// Adaptive phase tracking: refine until consecutive phase steps stay
  /// below max_phase_step. Returns the ordered samples of the closed loop.
  std::vector<BoundarySample> run(double max_phase_step, int initial_per_edge) {
    std::vector<BoundarySample> samples;
    int n0 = 4 * initial_per_edge;
    samples.reserve(static_cast<std::size_t>(n0) + 1);
    for (int i = 0; i <= n0; ++i)
      samples.push_back(sample(static_cast<double>(i) / n0));
    bool changed = true;
    int guard = 0;
    while (changed) {
      if (++guard > 24)
        throw BoundaryTooClose("boundary phase tracking failed to settle");
      changed = false;
      std::vector<BoundarySample> refined;
      refined.reserve(samples.size() * 2);
      for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        refined.push_back(samples[i]);
        double dp = std::arg(samples[i + 1].delta / samples[i].delta);
        double gap = samples[i + 1].t - samples[i].t;
        if (std::abs(dp) >= max_phase_step && gap > 1e-12) {
          refined.push_back(sample(0.5 * (samples[i].t + samples[i + 1].t)));
          changed = true;
        }
      }
      refined.push_back(samples.back());
      samples = std::move(refined);
    }
    return samples;
  }

 private:
  const ProblemSpec* p_;
  Rect rect_;
  double perim_;
};

struct CountResult {
  int count;
  double min_abs;  // smallest |Delta|/scale seen on the boundary
};

/// Winding number of Delta along the rectangle boundary. Throws BoundaryTooClose
/// when the zero-free-boundary guard fails.
inline CountResult count_on_boundary(const ProblemSpec& p, Rect r) {
  BoundaryScan scan(p, r);
  double step_cap = 0.5 * M_PI;
  for (int attempt = 0;; ++attempt) {
    std::vector<BoundarySample> samples = scan.run(step_cap, 16);
    std::vector<double> mags;
    mags.reserve(samples.size());
    for (const auto& s : samples) mags.push_back(std::abs(s.delta) / s.scale);
    std::vector<double> sorted = mags;
    std::sort(sorted.begin(), sorted.end());
    double median = sorted[sorted.size() / 2];
    double min_abs = sorted.front();
    if (min_abs <= 1e-8 * (1.0 + median))
      throw BoundaryTooClose("minimum |Delta| on the rectangle boundary is too small");
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i)
      total += std::arg(samples[i + 1].delta / samples[i].delta);
    double winding = total / (2.0 * M_PI);
    if (std::abs(winding - std::round(winding)) < 1e-6)
      return {static_cast<int>(std::lround(winding)), min_abs};
    if (attempt >= 3)
      throw BoundaryTooClose("winding number failed to converge to an integer");
    step_cap *= 0.5;  // re-sample more finely
  }
}

}  // namespace detail

/// Number of zeros (with multiplicity) of Delta inside the rectangle, by the
/// argument principle. The rectangle is dilated by 1% and retried up to 3
/// times when the boundary guard trips.
inline int count_zeros_rect(const ProblemSpec& p, Rect r) {
  for (int attempt = 0;; ++attempt) {
    try {
      return detail::count_on_boundary(p, r).count;
    } catch (const BoundaryTooClose&) {
      if (attempt >= 3) throw;
      r = r.dilated(1.01);
    }
  }
}

struct Eigenvalue {
  Complex lambda;
  int multiplicity = 1;
  bool refined = false;
};

struct EigenvalueSet {
  std::vector<Eigenvalue> items;
  Rect search_rect{0, 0, 0, 0};
  double guard = 0.0;
  int winding_total = 0;

  int total_multiplicity() const {
    int m = 0;
    for (const auto& e : items) m += e.multiplicity;
    return m;
  }
};

namespace detail {

struct NewtonResult {
  Complex lambda;
  bool converged = false;
};

/// Damped Newton on Delta: steps are capped (|Delta/Delta'| explodes near
/// critical points) and iterates escaping the guard radius abort the attempt.
inline NewtonResult newton_refine(const ProblemSpec& p, Complex start, double tol,
                                  double step_cap, double guard_radius,
                                  int max_iter = 50) {
  Complex z = start;
  try {
    for (int it = 0; it < max_iter; ++it) {
      CharDetValue cd = char_det(p, z, true);
      if (std::abs(cd.value) <= 1e-2 * tol * cd.scale) return {z, true};
      Complex dz;
      if (cd.derivative && std::abs(*cd.derivative) > 0.0) {
        dz = cd.value / *cd.derivative;
      } else {
        // central-difference fallback
        double h = 1e-6 * std::max(1.0, std::abs(z));
        Complex dplus = char_det(p, z + h, false).value;
        Complex dminus = char_det(p, z - h, false).value;
        Complex deriv = (dplus - dminus) / (2.0 * h);
        if (std::abs(deriv) == 0.0) return {z, false};
        dz = cd.value / deriv;
      }
      if (std::abs(dz) > step_cap) dz *= step_cap / std::abs(dz);
      z -= dz;
      if (std::abs(z - start) > guard_radius) return {z, false};
      if (std::abs(dz) <= tol * std::max(1.0, std::abs(z))) {
        CharDetValue final_cd = char_det(p, z, false);
        bool small = std::abs(final_cd.value) <= tol * final_cd.scale;
        return {z, small};
      }
    }
  } catch (const TrustRegionError&) {
    return {z, false};
  }
  return {z, false};
}

/// Splits the rectangle into 4 children at the given fractions.
inline std::array<Rect, 4> split_rect(Rect r, double fx, double fy) {
  double mx = r.x0 + fx * r.width();
  double my = r.y0 + fy * r.height();
  return {Rect{r.x0, mx, r.y0, my}, Rect{mx, r.x1, r.y0, my}, Rect{r.x0, mx, my, r.y1},
          Rect{mx, r.x1, my, r.y1}};
}

}  // namespace detail

/// Locates the zeros of Delta inside the rectangle: recursive quadtree
/// subdivision by winding counts, Newton refinement of isolated zeros, and
/// multiplicity reporting for clusters below the minimal box size.
inline EigenvalueSet find_eigenvalues(const ProblemSpec& p, Rect rect, double tol = 1e-10) {
  constexpr double kClusterFloor = 1e-6;
  EigenvalueSet out;
  out.search_rect = rect;
  out.guard = 1e-8;
  out.winding_total = count_zeros_rect(p, rect);

  struct Box {
    Rect r;
    int count;
  };
  std::deque<Box> work;
  work.push_back({rect, out.winding_total});
  while (!work.empty()) {
    Box box = work.front();
    work.pop_front();
    if (box.count == 0) continue;
    if (box.r.diagonal() < kClusterFloor) {
      out.items.push_back({box.r.center(), box.count, false});
      continue;
    }
    if (box.count == 1) {
      detail::NewtonResult nr =
          detail::newton_refine(p, box.r.center(), tol, std::max(box.r.diagonal(), 1e-3),
                                3.0 * std::max(box.r.diagonal(), 1e-3));
      if (nr.converged && box.r.contains(nr.lambda, 0.05 * box.r.diagonal())) {
        out.items.push_back({nr.lambda, 1, true});
        continue;
      }
      // Newton missed; either report the unrefined center for tiny boxes or
      // keep subdividing to improve the starting point.
      if (box.r.diagonal() < 1e-3) {
        if (nr.converged) {
          out.items.push_back({nr.lambda, 1, true});
        } else {
          out.items.push_back({box.r.center(), 1, false});
        }
        continue;
      }
    }
    // Subdivide; jiggle the split fractions when a child boundary runs too
    // close to a zero, and insist on conservation of the counts.
    static constexpr double kFractions[] = {0.5, 0.47, 0.53, 0.44, 0.56, 0.41};
    bool done = false;
    for (double f : kFractions) {
      auto children = detail::split_rect(box.r, f, f);
      std::array<int, 4> counts{};
      bool ok = true;
      int sum = 0;
      for (int i = 0; i < 4 && ok; ++i) {
        try {
          counts[static_cast<std::size_t>(i)] =
              detail::count_on_boundary(p, children[static_cast<std::size_t>(i)]).count;
          sum += counts[static_cast<std::size_t>(i)];
        } catch (const BoundaryTooClose&) {
          ok = false;
        }
      }
      if (ok && sum != box.count) ok = false;  // conservation check
      if (ok) {
        for (int i = 0; i < 4; ++i)
          work.push_back({children[static_cast<std::size_t>(i)],
                          counts[static_cast<std::size_t>(i)]});
        done = true;
        break;
      }
    }
    if (!done) {
      // A box whose every subdivision violates the zero-free boundary guard
      // is a cluster: |Delta| along any interior contour has reached the
      // evaluation noise floor, which is the resolution limit for a multiple
      // zero.
      if (box.r.diagonal() < 1e-2) {
        out.items.push_back({box.r.center(), box.count, false});
        continue;
      }
      throw BoundaryTooClose(
          "could not subdivide a box without hitting a zero on a child boundary");
    }
  }
  std::sort(out.items.begin(), out.items.end(), [](const Eigenvalue& a, const Eigenvalue& b) {
    if (a.lambda.real() != b.lambda.real()) return a.lambda.real() < b.lambda.real();
    return a.lambda.imag() < b.lambda.imag();
  });
  return out;
}

struct PairingEntry {
  int n;
  int j;
  Complex lattice_lambda;
  Complex lambda;
  double residual;
};

struct PairingReport {
  std::vector<PairingEntry> pairs;            // sorted by (|n|, j)
  std::vector<Complex> unmatched_eigenvalues;
  std::vector<LatticePoint> unmatched_lattice;
};

/// Greedy minimal-cost matching of located eigenvalues to lattice points
/// within the given radius.
inline PairingReport pair_with_lattice(const EigenvalueSet& ev, const Lattice& lat,
                                       double radius) {
  struct Cand {
    double dist;
    std::size_t ei, li;
  };
  std::vector<Cand> cands;
  for (std::size_t e = 0; e < ev.items.size(); ++e)
    for (std::size_t l = 0; l < lat.points.size(); ++l) {
      double d = std::abs(ev.items[e].lambda - lat.points[l].lambda);
      if (d <= radius) cands.push_back({d, e, l});
    }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.ei != b.ei) return a.ei < b.ei;
    return a.li < b.li;
  });
  std::vector<bool> etaken(ev.items.size(), false), ltaken(lat.points.size(), false);
  PairingReport rep;
  for (const auto& c : cands) {
    if (etaken[c.ei] || ltaken[c.li]) continue;
    etaken[c.ei] = ltaken[c.li] = true;
    const LatticePoint& lp = lat.points[c.li];
    rep.pairs.push_back({lp.n, lp.j, lp.lambda, ev.items[c.ei].lambda, c.dist});
  }
  for (std::size_t e = 0; e < ev.items.size(); ++e)
    if (!etaken[e]) rep.unmatched_eigenvalues.push_back(ev.items[e].lambda);
  for (std::size_t l = 0; l < lat.points.size(); ++l)
    if (!ltaken[l]) rep.unmatched_lattice.push_back(lat.points[l]);
  std::sort(rep.pairs.begin(), rep.pairs.end(), [](const PairingEntry& a, const PairingEntry& b) {
    if (std::abs(a.n) != std::abs(b.n)) return std::abs(a.n) < std::abs(b.n);
    if (a.n != b.n) return a.n < b.n;
    return a.j < b.j;
  });
  return rep;
}

struct SeparationGap {
  double gap = 0.0;
  bool cluster_present = false;
};

/// Minimal pairwise distance among the located eigenvalues; a multiplicity >= 2
/// cluster forces gap 0 with the cluster flag set.
inline SeparationGap separation_gap(const EigenvalueSet& ev) {
  if (ev.total_multiplicity() < 2)
    throw ValidationError("separation_gap needs at least two eigenvalues");
  SeparationGap g;
  for (const auto& e : ev.items)
    if (e.multiplicity >= 2) {
      g.cluster_present = true;
      g.gap = 0.0;
      return g;
    }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < ev.items.size(); ++a)
    for (std::size_t b = a + 1; b < ev.items.size(); ++b)
      best = std::min(best, std::abs(ev.items[a].lambda - ev.items[b].lambda));
  g.gap = best;
  return g;
}

}  // namespace bvspec
