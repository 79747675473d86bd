#include <catch2/catch_amalgamated.hpp>

#include "generators.hpp"
#include "qmeas/position_model.hpp"

using namespace qmeas;
using qmeas::testing::Rng;

TEST_CASE("stage unitaries match their matrix-element formulas", "[position-model]") {
  const GridSystem g = make_grid(4);
  const Matrix u1 = stage_one_unitary(g);
  const Matrix u2 = stage_two_unitary(g);
  for (Index x = 0; x < 4; ++x)
    for (Index y = 0; y < 4; ++y)
      for (Index xp = 0; xp < 4; ++xp)
        for (Index yp = 0; yp < 4; ++yp) {
          const Complex e1 = u1(x * 4 + y, xp * 4 + yp);
          const Complex e2 = u2(x * 4 + y, xp * 4 + yp);
          CHECK(e1 == Complex(x == mod_n(xp - yp, 4) && y == yp ? 1.0 : 0.0));
          CHECK(e2 == Complex(x == xp && y == mod_n(yp + xp, 4) ? 1.0 : 0.0));
        }
}

TEST_CASE("stage unitaries at N = 2 map the expected kets", "[position-model]") {
  const GridSystem g = make_grid(2);
  const Matrix u1 = stage_one_unitary(g);
  CHECK(u1(0 * 2 + 0, 0 * 2 + 0) == Complex(1.0));  // (0,0) -> (0,0)
  CHECK(u1(0 * 2 + 1, 1 * 2 + 1) == Complex(1.0));  // (1,1) -> (0,1)
  const Matrix u2 = stage_two_unitary(g);
  CHECK(u2(1 * 2 + 1, 1 * 2 + 0) == Complex(1.0));  // (1,0) -> (1,1)
}

TEST_CASE("stage unitaries are 0/1 permutation matrices", "[position-model]") {
  const GridSystem g = make_grid(4);
  for (const Matrix& u : {stage_one_unitary(g), stage_two_unitary(g), coupling_unitary(g)}) {
    CHECK(is_unitary(u, 1e-15));
    for (Index c = 0; c < u.cols(); ++c) {
      double col_sum = 0.0;
      for (Index r = 0; r < u.rows(); ++r) {
        const double a = std::abs(u(r, c));
        CHECK((a == 0.0 || a == 1.0));
        col_sum += a;
      }
      CHECK(col_sum == 1.0);
    }
  }
}

TEST_CASE("coupling unitary is the product of the stages", "[position-model]") {
  const GridSystem g = make_grid(4);
  CHECK((coupling_unitary(g) - stage_two_unitary(g) * stage_one_unitary(g)).norm() == 0.0);
}

TEST_CASE("coupling unitary records the prior position in the probe register",
          "[position-model]") {
  const GridSystem g = make_grid(4);
  const Matrix u = coupling_unitary(g);
  for (Index xp = 0; xp < 4; ++xp)
    for (Index yp = 0; yp < 4; ++yp)
      CHECK(u(mod_n(xp - yp, 4) * 4 + xp, xp * 4 + yp) == Complex(1.0));
}

TEST_CASE("grid momentum basis is unitary", "[position-model]") {
  const GridSystem g = make_grid(8);
  Matrix f(8, 8);
  for (Index p = 0; p < 8; ++p) f.col(p) = momentum_eigenstate(g, p);
  CHECK(is_unitary(f, 1e-12));
}

TEST_CASE("delta preparation reduces to an exact position readout", "[position-model]") {
  const GridSystem g = make_grid(4);
  Vector phi = Vector::Zero(4);
  phi(0) = 1.0;
  const ApparatusModel m = build_position_apparatus(g, phi);
  CHECK(measures_check(m).passes(1e-10));
  Vector psi = Vector::Zero(4);
  psi(1) = psi(3) = 1.0 / std::sqrt(2.0);
  const DensityOperator rho = from_vector(psi);
  const auto p = apparatus_outcome_distribution(m, rho);
  CHECK(p[1] == Catch::Approx(0.5));
  CHECK(p[3] == Catch::Approx(0.5));
  Vector e1 = Vector::Zero(4), e3 = Vector::Zero(4);
  e1(1) = 1.0;
  e3(3) = 1.0;
  CHECK(trace_distance(conditional_state(m, OutcomeSet::single(4, 1), rho), from_vector(e1)) <=
        1e-12);
  CHECK(trace_distance(conditional_state(m, OutcomeSet::single(4, 3), rho), from_vector(e3)) <=
        1e-12);
}

TEST_CASE("outcome distribution equals the position density", "[position-model]") {
  Rng rng(81);
  for (Index n : {2, 4, 8, 16}) {
    const GridSystem g = make_grid(n);
    const Vector phi = qmeas::testing::random_state_vector(rng, n);
    const ApparatusModel m = build_position_apparatus(g, phi);
    const Vector psi = qmeas::testing::random_state_vector(rng, n);
    const auto p = apparatus_outcome_distribution(m, from_vector(psi));
    for (Index y = 0; y < n; ++y) CHECK(std::abs(p[y] - std::norm(psi(y))) <= 1e-12);
  }
}

TEST_CASE("measures_check passes at N = 8 with random phi", "[position-model]") {
  Rng rng(82);
  const GridSystem g = make_grid(8);
  const ApparatusModel m =
      build_position_apparatus(g, qmeas::testing::random_state_vector(rng, 8));
  CHECK(measures_check(m).max_violation <= 1e-10);
}

TEST_CASE("posteriors are translates of phi, independent of the prior", "[position-model]") {
  Rng rng(83);
  const GridSystem g = make_grid(8);
  const Vector phi = qmeas::testing::random_state_vector(rng, 8);
  const DensityOperator rho1 = qmeas::testing::random_density(rng, 8);
  const DensityOperator rho2 = qmeas::testing::random_density(rng, 8);
  const TranslatedPosteriorReport r1 = verify_translated_posteriors(g, phi, rho1);
  const TranslatedPosteriorReport r2 = verify_translated_posteriors(g, phi, rho2);
  CHECK(r1.max_trace_distance <= 1e-10);
  CHECK(r2.max_trace_distance <= 1e-10);
  CHECK(r1.outcomes_checked == 8);

  const ApparatusModel m = build_position_apparatus(g, phi);
  for (Index a = 0; a < 8; ++a)
    CHECK(trace_distance(conditional_state(m, OutcomeSet::single(8, a), rho1),
                         conditional_state(m, OutcomeSet::single(8, a), rho2)) <= 1e-10);
}

TEST_CASE("posterior translation covariance", "[position-model]") {
  Rng rng(84);
  const GridSystem g = make_grid(8);
  const Vector phi = qmeas::testing::random_state_vector(rng, 8);
  const ApparatusModel m = build_position_apparatus(g, phi);
  const DensityOperator rho{Matrix::Identity(8, 8) / 8.0};
  const DensityOperator at0 = conditional_state(m, OutcomeSet::single(8, 0), rho);
  for (Index a = 1; a < 8; ++a) {
    Matrix shifted = Matrix::Zero(8, 8);
    for (Index x = 0; x < 8; ++x)
      for (Index y = 0; y < 8; ++y)
        shifted(x, y) = at0.op(mod_n(x - a, 8), mod_n(y - a, 8));
    CHECK(trace_distance(conditional_state(m, OutcomeSet::single(8, a), rho).op, shifted) <=
          1e-12);
  }
}

TEST_CASE("position-model posterior family matches the extracted instrument",
          "[position-model]") {
  Rng rng(85);
  const GridSystem g = make_grid(4);
  const Vector phi = qmeas::testing::random_state_vector(rng, 4);
  const ApparatusModel m = build_position_apparatus(g, phi);
  const Instrument ins = extract_instrument(m);
  const DensityOperator rho = qmeas::testing::random_density(rng, 4);
  const auto fam = posterior_family(ins, rho);
  for (Index a = 0; a < 4; ++a) {
    REQUIRE(fam[a].has_value());
    CHECK(trace_distance(*fam[a], from_vector(cyclic_shift(phi, a))) <= 1e-10);
  }
}

TEST_CASE("momentum non-disturbance demo N = 8, p = 3", "[position-model]") {
  const MomentumDemoReport rep = momentum_nondisturbance_demo(make_grid(8), 3);
  CHECK(1.0 - rep.min_posterior_fidelity <= 1e-10);
  CHECK(rep.max_distribution_deviation <= 1e-12);
  CHECK(rep.nonselective_distance <= 1e-10);
  CHECK(rep.contrast_fidelity < 1.0 - 0.01);
}

TEST_CASE("momentum demo smallest case N = 2, p = 0", "[position-model]") {
  const GridSystem g = make_grid(2);
  const MomentumDemoReport rep = momentum_nondisturbance_demo(g, 0);
  CHECK(1.0 - rep.min_posterior_fidelity <= 1e-10);
  CHECK(rep.max_distribution_deviation <= 1e-12);
  // p = 0: the posterior is the uniform superposition state.
  const Vector phi = momentum_eigenstate(g, 0);
  const ApparatusModel m = build_position_apparatus(g, phi);
  const DensityOperator prior = from_vector(phi);
  Vector uniform = Vector::Constant(2, 1.0 / std::sqrt(2.0));
  CHECK(trace_distance(conditional_state(m, OutcomeSet::single(2, 0), prior),
                       from_vector(uniform)) <= 1e-12);
  REQUIRE_THROWS(momentum_nondisturbance_demo(g, 5));
}
