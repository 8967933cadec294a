#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "bvspec/problem.hpp"

using namespace bvspec;
using Catch::Matchers::WithinAbs;

namespace {

BoundarySpec random_bc(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  while (true) {
    MatrixXc c(2, 2), d(2, 2);
    for (int r = 0; r < 2; ++r)
      for (int k = 0; k < 2; ++k) {
        c(r, k) = Complex{u(rng), u(rng)};
        d(r, k) = Complex{u(rng), u(rng)};
      }
    BoundarySpec bc(c, d);
    if (bc.maximal()) return bc;
  }
}

}  // namespace

TEST_CASE("J-invariants of quasi-periodic rows", "[model]") {
  Complex d1{0.3, -1.1}, d2{-0.7, 0.2};
  BoundaryInvariants j = compute_j_invariants(BoundarySpec::quasi_periodic(d1, d2));
  CHECK(j.j12 == Complex{1.0, 0.0});
  CHECK_THAT(std::abs(j.j34 - d1 * d2), WithinAbs(0.0, 1e-15));
  CHECK(j.j14 == -d2);
  CHECK(j.j32 == -d1);
  CHECK(j.j13 == Complex{0.0, 0.0});
  CHECK(j.j42 == Complex{0.0, 0.0});
}

TEST_CASE("J-invariants of special rows", "[model]") {
  Complex h1{1.5, 0.5}, h2{-0.25, 2.0};
  BoundaryInvariants j = compute_j_invariants(BoundarySpec::special(h1, h2));
  CHECK(j.j12 == -h2);
  CHECK(j.j13 == Complex{1.0, 0.0});
  CHECK(j.j32 == h1);
  CHECK(j.j14 == Complex{0.0, 0.0});
  CHECK(j.j42 == Complex{0.0, 0.0});
  CHECK(j.j34 == Complex{0.0, 0.0});
}

TEST_CASE("identical columns give a vanishing minor", "[model]") {
  BoundaryInvariants j = compute_j_invariants(BoundarySpec::quasi_periodic(2.0, 3.0));
  CHECK(j.j(1, 1) == Complex{0.0, 0.0});
  CHECK(j.j(3, 3) == Complex{0.0, 0.0});
  CHECK(j.j(2, 1) == -j.j(1, 2));
}

TEST_CASE("J-invariants reject n != 2", "[model]") {
  BoundarySpec bc(MatrixXc::Identity(3, 3), MatrixXc::Identity(3, 3));
  CHECK_THROWS_AS(compute_j_invariants(bc), DimensionError);
}

TEST_CASE("Pluecker relation holds for random boundary blocks", "[model][property]") {
  std::mt19937 rng(20240811);
  for (int trial = 0; trial < 50; ++trial) {
    BoundaryInvariants j = compute_j_invariants(random_bc(rng));
    Complex rel = j.j(1, 2) * j.j(3, 4) - j.j(1, 3) * j.j(2, 4) + j.j(1, 4) * j.j(2, 3);
    REQUIRE_THAT(std::abs(rel), WithinAbs(0.0, 1e-12 * std::max(1.0, j.scale())));
  }
}

TEST_CASE("J ratios are invariant under left row action", "[model][property]") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    BoundarySpec bc = random_bc(rng);
    Mat2 s;
    do {
      s << Complex{u(rng), u(rng)}, Complex{u(rng), u(rng)}, Complex{u(rng), u(rng)},
          Complex{u(rng), u(rng)};
    } while (std::abs(s.determinant()) < 0.1);
    BoundarySpec scaled(s * bc.C(), s * bc.D());
    BoundaryInvariants j0 = compute_j_invariants(bc);
    BoundaryInvariants j1 = compute_j_invariants(scaled);
    Complex det = s.determinant();
    for (auto [a, b] : {std::pair{1, 2}, {1, 3}, {1, 4}, {3, 2}, {4, 2}, {3, 4}}) {
      Complex expect = det * j0.j(a, b);
      REQUIRE_THAT(std::abs(j1.j(a, b) - expect),
                   WithinAbs(0.0, 1e-10 * std::max(1.0, std::abs(expect))));
    }
  }
}

TEST_CASE("swap_components applied twice restores the problem", "[model]") {
  ProblemSpec p;
  p.B = WeightMatrix::diag2({1, 0}, {0, 1});
  p.Q.q12 = ScalarExpr::poly({{1, 0}, {0, 2}});
  p.bc = BoundarySpec::special({1.0, 1.0}, {2.0, -1.0});
  ProblemSpec twice = apply_equivalence_transform(
      apply_equivalence_transform(p, Transform::SwapComponents), Transform::SwapComponents);
  CHECK(twice.B == p.B);
  CHECK(twice.Q == p.Q);
  CHECK((twice.bc.block() - p.bc.block()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reflect_interval on quasi-periodic boundary rows", "[model]") {
  // Substituting z(x) = y(1-x) turns (d1, d2) into (1/d1, 1/d2) and B into -B.
  Complex d1{0.5, 0.5}, d2{2.0, -1.0};
  ProblemSpec p;
  p.B = WeightMatrix::diag2({1, 0}, {0, 1});
  p.bc = BoundarySpec::quasi_periodic(d1, d2);
  ProblemSpec r = apply_equivalence_transform(p, Transform::ReflectInterval);
  CHECK(r.B == p.B.negated());
  CHECK(row_equivalent(r.bc, BoundarySpec::quasi_periodic(1.0 / d1, 1.0 / d2)));
}

TEST_CASE("reflect_interval reflects piecewise potentials", "[model]") {
  ProblemSpec p;
  p.B = WeightMatrix::diag2({1, 0}, {0, 1});
  p.Q.q12 = ScalarExpr::piecewise({0.25}, {{{1.0, 0.0}}, {}});
  p.bc = BoundarySpec::quasi_periodic(1.0, 1.0);
  ProblemSpec r = apply_equivalence_transform(p, Transform::ReflectInterval);
  CHECK(r.Q.q12.eval(0.9) == Complex{1.0, 0.0});   // was supported on [0, 0.25)
  CHECK(r.Q.q12.eval(0.5) == Complex{0.0, 0.0});
  CHECK(r.Q.q12.interior_breakpoints() == std::vector<double>{0.75});
}

TEST_CASE("swap_components on special rows permutes columns", "[model]") {
  Complex h1{0.5, 0.0}, h2{-1.5, 1.0};
  ProblemSpec p;
  p.B = WeightMatrix::diag2({1, 0}, {0, 1});
  p.bc = BoundarySpec::special(h1, h2);
  ProblemSpec s = apply_equivalence_transform(p, Transform::SwapComponents);
  MatrixXc expect(2, 4);
  expect << -h1, 1.0, 0.0, 0.0, -h2, 0.0, 0.0, 1.0;
  CHECK((s.bc.block() - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("transforms preserve maximality", "[model][property]") {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    ProblemSpec p;
    p.B = WeightMatrix::diag2({1, 0}, {0, 1});
    p.bc = random_bc(rng);
    for (Transform t : {Transform::SwapComponents, Transform::ReflectInterval})
      CHECK(apply_equivalence_transform(p, t).bc.maximal());
  }
}

TEST_CASE("validate reports rank-deficient boundary blocks", "[model]") {
  ProblemSpec p;
  p.B = WeightMatrix::diag2({1, 0}, {0, 1});
  MatrixXc c(2, 2), d(2, 2);
  c << 1, 0, 2, 0;
  d << 3, 0, 6, 0;
  p.bc = BoundarySpec(c, d);
  auto diags = validate(p);
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].code == "maximality_violated");
}

TEST_CASE("validate reports a singular weight", "[model]") {
  ProblemSpec p;
  p.B = WeightMatrix::diag2({1, 0}, {0, 0});
  p.bc = BoundarySpec::quasi_periodic(-1.0, -1.0);
  auto diags = validate(p);
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].code == "singular_weight");
}

TEST_CASE("validate accepts the antiperiodic problem", "[model]") {
  ProblemSpec p;
  p.B = WeightMatrix::diag2({1, 0}, {0, 1});
  p.bc = BoundarySpec::quasi_periodic(-1.0, -1.0);
  CHECK(validate(p).empty());
}

TEST_CASE("essential non-Dirac flag", "[model]") {
  CHECK(WeightMatrix::diag2({1, 0}, {0, 1}).essential_non_dirac());
  CHECK_FALSE(WeightMatrix::diag2({1, 0}, {-1, 0}).essential_non_dirac());
}
