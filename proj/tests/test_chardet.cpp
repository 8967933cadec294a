#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "bvspec/chardet.hpp"
#include "oracles.hpp"

using namespace bvspec;
using Catch::Matchers::WithinAbs;

namespace {

ProblemSpec quasi_periodic_problem(Complex d1, Complex d2, Complex b1 = {1, 0},
                                   Complex b2 = {0, 1}) {
  ProblemSpec p;
  p.B = WeightMatrix::diag2(b1, b2);
  p.bc = BoundarySpec::quasi_periodic(d1, d2);
  return p;
}

}  // namespace

TEST_CASE("quasi-periodic determinant factorizes for zero potential", "[chardet]") {
  Complex d1{0.6, 0.3}, d2{-1.2, 0.4};
  ProblemSpec p = quasi_periodic_problem(d1, d2);
  for (Complex lambda : {Complex{0.7, -0.4}, Complex{-2.2, 1.3}, Complex{4.0, 0.0}}) {
    Complex delta = char_det(p, lambda).value;
    Complex expect = (1.0 - d1 * std::exp(kI * p.B.entry(0) * lambda)) *
                     (1.0 - d2 * std::exp(kI * p.B.entry(1) * lambda));
    REQUIRE(std::abs(delta - expect) < 1e-10 * std::max(1.0, std::abs(expect)));
    // and the closed form helper agrees with the same product
    REQUIRE(std::abs(delta0_closed(p.B, d1, d2, lambda) - expect) <
            1e-12 * std::max(1.0, std::abs(expect)));
  }
}

TEST_CASE("determinant at lambda = 0 with zero potential", "[chardet]") {
  Complex d1{0.5, 0.1}, d2{2.0, -0.2};
  ProblemSpec p = quasi_periodic_problem(d1, d2);
  Complex delta = char_det(p, 0.0).value;
  Complex expect = (1.0 - d1) * (1.0 - d2);
  CHECK(std::abs(delta - expect) < 1e-12 * std::max(1.0, std::abs(expect)));
}

TEST_CASE("special-form determinant for zero potential", "[chardet]") {
  Complex h1{0.8, -0.1}, h2{1.4, 0.7};
  ProblemSpec p;
  p.B = WeightMatrix::diag2({1, 0}, {0, 1});
  p.bc = BoundarySpec::special(h1, h2);
  for (Complex lambda : {Complex{0.0, 0.0}, Complex{1.3, -0.8}, Complex{-2.5, 0.4}}) {
    Complex delta = char_det(p, lambda).value;
    Complex expect = -h2 + h1 * std::exp(kI * p.B.entry(0) * lambda);
    REQUIRE(std::abs(delta - expect) < 1e-10 * std::max(1.0, std::abs(expect)));
  }
}

TEST_CASE("dual-path agreement of the determinant and its J-expansion", "[chardet][property]") {
  std::mt19937 rng(20250101);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  ProblemSpec p;
  p.B = WeightMatrix::diag2({1.0, 0.2}, {-0.3, 0.9});
  p.Q.q12 = ScalarExpr::piecewise({0.4}, {{{0.6, -0.2}, {0.5, 0.0}}, {{-0.1, 0.3}}});
  p.Q.q21 = ScalarExpr::poly({{0.2, 0.1}, {0.0, -0.4}, {0.3, 0.0}});
  MatrixXc c(2, 2), d(2, 2);
  c << Complex{1.1, 0.2}, Complex{-0.4, 0.0}, Complex{0.3, -0.7}, Complex{0.9, 0.1};
  d << Complex{0.5, 0.5}, Complex{1.2, -0.3}, Complex{-0.8, 0.2}, Complex{0.1, 0.6};
  p.bc = BoundarySpec(c, d);
  for (int trial = 0; trial < 100; ++trial) {
    Complex lambda{4.0 * u(rng), 4.0 * u(rng)};
    FundamentalSolution fs = fundamental_matrix(p, lambda);
    Complex direct = char_det(p, fs).value;
    Complex via_j = char_det_via_j(p, fs);
    REQUIRE(std::abs(direct - via_j) <= 1e-9 * std::max(1.0, std::abs(direct)));
  }
}

TEST_CASE("J-expansion reduces to the closed form for zero potential", "[chardet]") {
  Complex d1{-0.9, 0.2}, d2{0.3, 1.0};
  ProblemSpec p = quasi_periodic_problem(d1, d2);
  BoundaryInvariants j = compute_j_invariants(p.bc);
  for (Complex lambda : {Complex{1.0, 0.3}, Complex{-0.7, -1.1}}) {
    FundamentalSolution fs = fundamental_matrix(p, lambda);
    Complex b12 = p.B.entry(0) + p.B.entry(1);
    Complex closed = j.j12 + j.j34 * std::exp(kI * b12 * lambda) +
                     j.j32 * std::exp(kI * p.B.entry(0) * lambda) +
                     j.j14 * std::exp(kI * p.B.entry(1) * lambda);
    REQUIRE(std::abs(char_det_via_j(p, fs) - closed) <
            1e-10 * std::max(1.0, std::abs(closed)));
  }
}

TEST_CASE("initial-value conditions give a constant determinant", "[chardet]") {
  ProblemSpec p;
  p.B = WeightMatrix::diag2({1, 0}, {0, 1});
  p.bc = BoundarySpec(MatrixXc::Identity(2, 2), MatrixXc::Zero(2, 2));
  for (Complex lambda : {Complex{0.0, 0.0}, Complex{2.0, 1.0}, Complex{-3.3, 0.4}}) {
    Complex delta = char_det(p, lambda).value;
    REQUIRE(std::abs(delta - 1.0) < 1e-12);
  }
}

TEST_CASE("gamma decomposition of special values", "[chardet]") {
  GammaDecomposition g = gamma_of_d({-1.0, 0.0});
  CHECK_THAT(g.alpha, WithinAbs(0.5, 1e-15));
  CHECK_THAT(g.beta, WithinAbs(0.0, 1e-15));
  g = gamma_of_d({1.0, 0.0});
  CHECK_THAT(g.alpha, WithinAbs(0.0, 1e-15));
  CHECK_THAT(g.beta, WithinAbs(0.0, 1e-15));
  CHECK_THROWS_AS(gamma_of_d({0.0, 0.0}), ValidationError);
}

TEST_CASE("gamma decomposition round trip and unimodularity", "[chardet][property]") {
  std::mt19937 rng(31337);
  std::uniform_real_distribution<double> mag(0.2, 3.0), ang(-M_PI, M_PI);
  for (int trial = 0; trial < 100; ++trial) {
    Complex d = std::polar(mag(rng), ang(rng));
    GammaDecomposition g = gamma_of_d(d);
    REQUIRE(g.alpha >= 0.0);
    REQUIRE(g.alpha < 1.0);
    Complex back = std::exp(-2.0 * M_PI * kI * g.gamma());
    REQUIRE(std::abs(back - d) < 1e-12 * std::max(1.0, std::abs(d)));
    REQUIRE((std::abs(std::abs(d) - 1.0) < 1e-15) == (std::abs(g.beta) < 1e-15));
  }
}

TEST_CASE("antiperiodic lattice is the odd pi grid", "[chardet]") {
  WeightMatrix B = WeightMatrix::diag2({1, 0}, {0, 1});
  Lattice lat = unperturbed_lattice(B, -1.0, -1.0, 3);
  for (const auto& pt : lat.points) {
    if (pt.j == 1) {
      Complex expect = M_PI * (2.0 * pt.n + 1.0);
      REQUIRE(std::abs(pt.lambda - expect) < 1e-12 * std::max(1.0, std::abs(expect)));
    } else {
      Complex expect = -kI * M_PI * (2.0 * pt.n + 1.0);
      REQUIRE(std::abs(pt.lambda - expect) < 1e-12 * std::max(1.0, std::abs(expect)));
    }
  }
  CHECK(lat.points.size() == 14);
}

TEST_CASE("every lattice point annihilates the closed-form determinant", "[chardet][property]") {
  // Desk-scale weights: |Im(b_k lambda)| stays moderate across the lattice
  // window, so the non-vanishing factor cannot amplify roundoff above 1e-10.
  std::mt19937 rng(555);
  std::uniform_real_distribution<double> mag(0.7, 1.3), ratio_re(0.8, 1.2),
      ratio_im(0.1, 0.3), dmag(0.8, 1.25), ang(-M_PI, M_PI);
  for (int trial = 0; trial < 10; ++trial) {
    Complex b1 = std::polar(mag(rng), ang(rng) / 4.0);
    double sign = (trial % 2 == 0) ? 1.0 : -1.0;
    Complex b2 = b1 * Complex{ratio_re(rng), sign * ratio_im(rng)};
    WeightMatrix B = WeightMatrix::diag2(b1, b2);
    Complex d1 = std::polar(dmag(rng), ang(rng)), d2 = std::polar(dmag(rng), ang(rng));
    Lattice lat = unperturbed_lattice(B, d1, d2, 3);
    for (const auto& pt : lat.points)
      REQUIRE(std::abs(delta0_closed(B, d1, d2, pt.lambda)) <= 1e-10);
  }
}

TEST_CASE("d1 = 1 places a lattice point at the origin", "[chardet]") {
  Lattice lat = unperturbed_lattice(WeightMatrix::diag2({1, 0}, {0, 1}), 1.0, -1.0, 1);
  bool found = false;
  for (const auto& pt : lat.points)
    if (pt.j == 1 && pt.n == 0) found = std::abs(pt.lambda) < 1e-15;
  CHECK(found);
}

TEST_CASE("factorization identity on a lambda grid", "[chardet][property]") {
  WeightMatrix B = WeightMatrix::diag2({1.0, 0.0}, {0.4, 1.1});
  Complex d1{0.7, -0.5}, d2{-0.3, 0.9};
  GammaDecomposition g1 = gamma_of_d(d1), g2 = gamma_of_d(d2);
  for (int ix = 0; ix < 41; ++ix)
    for (int iy = 0; iy < 41; ++iy) {
      Complex lambda{-10.0 + 0.5 * ix, -10.0 + 0.5 * iy};
      Complex product = delta0_factor(B.entry(0), g1, lambda) *
                        delta0_factor(B.entry(1), g2, lambda);
      Complex direct = delta0_closed(B, d1, d2, lambda);
      REQUIRE(std::abs(direct - product) <= 1e-12 * (1.0 + std::abs(direct)));
    }
}

TEST_CASE("separation criterion on the antiperiodic example", "[chardet]") {
  WeightMatrix B = WeightMatrix::diag2({1, 0}, {0, 1});
  SeparationResult r = separation_check(B, -1.0, -1.0);
  CHECK(r.separated);
  CHECK_FALSE(r.collision.has_value());
}

TEST_CASE("periodic conditions collide at the origin", "[chardet]") {
  WeightMatrix B = WeightMatrix::diag2({1, 0}, {0, 1});
  SeparationResult r = separation_check(B, 1.0, 1.0);
  REQUIRE_FALSE(r.separated);
  REQUIRE(r.collision.has_value());
  CHECK(r.collision->first == 0);
  CHECK(r.collision->second == 0);
}

TEST_CASE("separation criterion agrees with brute force", "[chardet][property]") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(-2.0, 2.0), mag(0.5, 2.0), ang(-M_PI, M_PI);
  int tested = 0;
  while (tested < 20) {
    Complex b1{u(rng), u(rng)}, b2{u(rng), u(rng)};
    if (std::abs(b1) < 0.3 || std::abs(b2) < 0.3) continue;
    if (std::abs(std::imag(b1 / b2)) < 0.1) continue;
    WeightMatrix B = WeightMatrix::diag2(b1, b2);
    Complex d1 = std::polar(mag(rng), ang(rng)), d2 = std::polar(mag(rng), ang(rng));
    SeparationResult r = separation_check(B, d1, d2);
    bool collision = oracles::brute_force_collision(B, d1, d2, 200);
    REQUIRE(r.separated == !collision);
    ++tested;
  }
}

TEST_CASE("constructed collisions are detected with the right indices", "[chardet]") {
  // Choose gamma2 so that lambda0_{n,1} = lambda0_{m,2} exactly.
  WeightMatrix B = WeightMatrix::diag2({1.0, 0.1}, {0.2, 0.9});
  Complex d1 = std::polar(1.3, 0.7);
  GammaDecomposition g1 = gamma_of_d(d1);
  for (auto [n, m] : {std::pair{2, -1}, {0, 3}, {-4, -4}}) {
    Complex gamma2 =
        B.entry(1) / B.entry(0) * (g1.gamma() + static_cast<double>(n)) -
        static_cast<double>(m);
    Complex d2 = std::exp(-2.0 * M_PI * kI * gamma2);
    SeparationResult r = separation_check(B, d1, d2);
    REQUIRE_FALSE(r.separated);
    REQUIRE(r.collision.has_value());
    // The returned indices use the canonical alpha in [0,1) labeling; the
    // named pair must actually collide.
    GammaDecomposition g2n = gamma_of_d(d2);
    Complex l1 =
        2.0 * M_PI / B.entry(0) * (g1.gamma() + static_cast<double>(r.collision->first));
    Complex l2 =
        2.0 * M_PI / B.entry(1) * (g2n.gamma() + static_cast<double>(r.collision->second));
    CHECK(std::abs(l1 - l2) < 1e-9 * std::max(1.0, std::abs(l1)));
    CHECK(oracles::brute_force_collision(B, d1, d2, 10));
  }
}

TEST_CASE("separated lattices have a positive minimal gap", "[chardet]") {
  WeightMatrix B = WeightMatrix::diag2({1, 0}, {0, 1});
  Lattice lat = unperturbed_lattice(B, -1.0, -1.0, 5);
  REQUIRE(separation_check(B, -1.0, -1.0).separated);
  CHECK(lat.min_gap() > 1e-9);
}
