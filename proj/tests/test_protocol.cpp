#include <catch2/catch_amalgamated.hpp>

#include "qkdrate/protocol.hpp"
#include "qkdrate/qudit.hpp"
#include "test_helpers.hpp"

using namespace qkd;

namespace {

DensityMatrix s_gate_attack_state() {
  StateVector psi = StateVector::Zero(4);
  psi(0) = 1.0 / std::sqrt(2.0);
  psi(3) = complex_t(0.0, 1.0 / std::sqrt(2.0));
  return DensityMatrix::pure(psi);
}

}  // namespace

TEST_CASE("initial_state") {
  CHECK((initial_state(0.5) - bell_state(2, 0, 0)).cwiseAbs().maxCoeff() < 1e-12);

  const StateVector b1 = initial_state(1.0);
  CHECK(std::abs(b1(0) - 1.0) < 1e-12);
  CHECK(b1.segment(1, 3).cwiseAbs().maxCoeff() < 1e-12);

  const StateVector b19 = initial_state(1.0 / 9.0);
  CHECK(std::abs(b19(0) - 1.0 / 3.0) < 1e-12);
  CHECK(std::abs(b19(3) - std::sqrt(8.0) / 3.0) < 1e-12);
  CHECK(std::abs(b19(1)) < 1e-12);
  CHECK(std::abs(b19(2)) < 1e-12);

  CHECK_THROWS_AS(initial_state(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(initial_state(1.1), std::invalid_argument);
}

TEST_CASE("statistics of the Bell state") {
  const auto dist = statistics_from_state(DensityMatrix::pure(bell_state(2, 0, 0)), 0.5);
  CHECK(std::abs(dist.p[0][0] - 0.25) < 1e-12);
  CHECK(std::abs(dist.p[1][1] - 0.25) < 1e-12);
  CHECK(std::abs(dist.p[0][2] - 0.25) < 1e-12);
  CHECK(std::abs(dist.p[1][3] - 0.25) < 1e-12);
  CHECK(std::abs(dist.p[0][1]) < 1e-12);
  CHECK(std::abs(dist.p[1][0]) < 1e-12);
}

TEST_CASE("statistics of the depolarized state split the error per basis") {
  const double eps = 0.1, p = 0.5;
  const auto dist = statistics_from_state(
      depolarize(DensityMatrix::pure(initial_state(0.5)), eps), p);
  const double p_pass = p * p + (1 - p) * (1 - p);
  // Z-round error mass: (p^2/p_pass) * eps/2; same for X rounds at b = 1/2.
  CHECK(std::abs(dist.p[0][1] + dist.p[1][0] - (p * p / p_pass) * eps / 2) < 1e-12);
  CHECK(std::abs(dist.p[0][3] + dist.p[1][2] -
                 ((1 - p) * (1 - p) / p_pass) * eps / 2) < 1e-12);
}

TEST_CASE("statistics of the S-gate attack") {
  const auto dist = statistics_from_state(s_gate_attack_state(), 0.5);
  CHECK(std::abs(dist.p[0][0] - 0.25) < 1e-12);
  CHECK(std::abs(dist.p[1][1] - 0.25) < 1e-12);
  CHECK(std::abs(dist.p[0][1]) < 1e-12);
  for (int x = 0; x < 2; ++x)
    for (int y = 2; y < 4; ++y) CHECK(std::abs(dist.p[x][y] - 0.125) < 1e-12);
}

TEST_CASE("statistics always form a distribution") {
  std::mt19937_64 rng(31);
  for (double p : {0.3, 0.5, 0.8})
    for (int trial = 0; trial < 30; ++trial) {
      const auto dist =
          statistics_from_state(DensityMatrix(qkd::testing::random_density(4, rng)), p);
      CHECK_NOTHROW(dist.validate());
    }
}

TEST_CASE("leak_ec") {
  for (double p : {0.3, 0.5, 0.7}) {
    const auto dist = statistics_from_state(DensityMatrix::pure(initial_state(0.5)), p);
    CHECK(std::abs(leak_ec(dist)) < 1e-12);
  }
  const auto noisy = statistics_from_state(
      depolarize(DensityMatrix::pure(initial_state(0.5)), 0.1), 0.5);
  CHECK(std::abs(leak_ec(noisy) - binary_entropy(0.05)) < 1e-12);

  CHECK(std::abs(leak_ec(statistics_from_state(s_gate_attack_state(), 0.5)) - 0.5) < 1e-12);
}

TEST_CASE("constraint observables") {
  const auto coarse = constraint_observables(ConstraintMode::Coarse);
  REQUIRE(coarse.size() == 2);
  CMatrix ez = CMatrix::Zero(4, 4);
  ez(1, 1) = 1.0;
  ez(2, 2) = 1.0;
  CHECK(approx_equal(coarse[0].observable, ez, 1e-12));
  CHECK(coarse[0].label == "gamma_z");

  const auto fine = constraint_observables(ConstraintMode::Fine);
  CHECK(fine.size() == 16);
}

TEST_CASE("gamma_IZ recombination identity") {
  std::mt19937_64 rng(33);
  const auto fine = constraint_observables(ConstraintMode::Fine);
  auto value_of = [&](const CMatrix& rho, const std::string& label) {
    for (const auto& c : fine)
      if (c.label == label) return (rho * c.observable).trace().real();
    FAIL("missing label " + label);
    return 0.0;
  };
  const CMatrix iz = kron(CMatrix::Identity(2, 2),
                          pauli_string_matrix(PauliString(1, {PauliLetter::Z})));
  for (int trial = 0; trial < 25; ++trial) {
    const CMatrix rho = qkd::testing::random_density(4, rng);
    const double recombined = value_of(rho, "gamma_00") - value_of(rho, "gamma_01") +
                              value_of(rho, "gamma_10") - value_of(rho, "gamma_11");
    CHECK(std::abs(recombined - (rho * iz).trace().real()) < 1e-12);
  }
}

TEST_CASE("simulate_constraints values") {
  ScenarioConfig coarse_cfg;
  coarse_cfg.b = 0.5;
  coarse_cfg.eps = 0.1;
  coarse_cfg.constraint_mode = ConstraintMode::Coarse;
  const ConstraintSet coarse = simulate_constraints(coarse_cfg);
  REQUIRE(coarse.equalities.size() == 5);  // gamma_z, gamma_x + three marginals
  CHECK(std::abs(coarse.equalities[0].value - 0.05) < 1e-12);
  CHECK(std::abs(coarse.equalities[1].value - 0.05) < 1e-12);

  ScenarioConfig fine_cfg;
  fine_cfg.b = 0.5;
  fine_cfg.eps = 0.0;
  fine_cfg.constraint_mode = ConstraintMode::Fine;
  const ConstraintSet fine = simulate_constraints(fine_cfg);
  for (const auto& c : fine.equalities) {
    if (c.label == "gamma_00" || c.label == "gamma_11" || c.label == "gamma_++" ||
        c.label == "gamma_--") {
      CHECK(std::abs(c.value - 0.5) < 1e-12);
    } else if (c.label == "gamma_01" || c.label == "gamma_10" || c.label == "gamma_+-" ||
               c.label == "gamma_-+") {
      CHECK(std::abs(c.value) < 1e-12);
    } else if (c.label.rfind("gamma_", 0) == 0) {
      CHECK(std::abs(c.value - 0.25) < 1e-12);  // mixed-basis pairs
    }
  }

  ScenarioConfig b1_cfg;
  b1_cfg.b = 1.0;
  b1_cfg.eps = 0.3;
  const ConstraintSet b1 = simulate_constraints(b1_cfg);
  for (const auto& c : b1.equalities)
    if (c.label == "alice_Z") CHECK(std::abs(c.value - 1.0) < 1e-12);

  // Clifford-mix mode carries no Alice-marginal rows.
  ScenarioConfig mix_cfg;
  mix_cfg.eve_mode = EveMode::CliffordMix;
  const ConstraintSet mix = simulate_constraints(mix_cfg);
  for (const auto& c : mix.equalities) CHECK(c.label.rfind("alice_", 0) != 0);
}

TEST_CASE("objective_reduced values") {
  CHECK(std::abs(objective_reduced(DensityMatrix(CMatrix::Identity(4, 4) / 4.0), 0.5)) <
        1e-10);
  CHECK(std::abs(objective_reduced(DensityMatrix::pure(bell_state(2, 0, 0)), 0.5) - 0.5) <
        1e-10);
  CHECK(std::abs(objective_reduced(s_gate_attack_state(), 0.5) - 0.5) < 1e-10);
}

TEST_CASE("dilated objective agrees with the reduced one") {
  const DensityMatrix bell = DensityMatrix::pure(bell_state(2, 0, 0));
  CHECK(std::abs(objective_dilated(bell, 0.5) - objective_reduced(bell, 0.5)) < 1e-9);
  CHECK(std::abs(objective_dilated(DensityMatrix(CMatrix::Identity(4, 4) / 4.0), 0.5)) <
        1e-9);

  std::mt19937_64 rng(35);
  for (double p : {0.3, 0.5, 0.9})
    for (int trial = 0; trial < 20; ++trial) {
      const DensityMatrix rho(qkd::testing::random_density(4, rng));
      CHECK(std::abs(objective_dilated(rho, p) - objective_reduced(rho, p)) < 1e-9);
    }
}

TEST_CASE("G map has exactly the two post-selected diagonal blocks") {
  std::mt19937_64 rng(37);
  for (double p : {0.3, 0.5}) {
    const CMatrix rho = qkd::testing::random_density(4, rng);
    const CMatrix g = detail::g_map(rho, p);
    // 4x4 grid of 16x16 blocks indexed by the basis-announcement registers.
    for (int br = 0; br < 4; ++br)
      for (int bc = 0; bc < 4; ++bc) {
        const CMatrix block = g.block(16 * br, 16 * bc, 16, 16);
        if (br == 0 && bc == 0) {
          CHECK(std::abs(block.trace().real() - p * p) < 1e-12);
        } else if (br == 3 && bc == 3) {
          CHECK(std::abs(block.trace().real() - (1 - p) * (1 - p)) < 1e-12);
        } else {
          CHECK(block.cwiseAbs().maxCoeff() < 1e-14);
        }
      }
  }
}

TEST_CASE("objective_gradient vanishes on doubly pinching-invariant states") {
  std::mt19937_64 rng(39);
  const CMatrix rho_b = qkd::testing::random_density(2, rng);
  const DensityMatrix rho(kron(CMatrix::Identity(2, 2) / 2.0, rho_b));
  CHECK(objective_gradient(rho, 0.4).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("objective_gradient matches finite differences") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const double p = trial % 2 ? 0.5 : 0.3;
    const CMatrix rho = qkd::testing::random_density_pd(4, rng, 0.02);
    CMatrix dir = qkd::testing::random_traceless_hermitian(4, rng);
    dir /= dir.norm();
    const double h = 1e-5;
    const double f_plus = detail::objective_nats(rho + h * dir, p);
    const double f_minus = detail::objective_nats(rho - h * dir, p);
    const double fd = (f_plus - f_minus) / (2 * h);
    const double analytic =
        (objective_gradient(DensityMatrix(rho), p) * dir).trace().real();
    CHECK(std::abs(fd - analytic) / std::max(std::abs(fd), 1e-12) < 1e-5);
  }

  CHECK_THROWS_AS(
      objective_gradient(DensityMatrix::pure(bell_state(2, 0, 0)), 0.5),
      std::domain_error);
}

TEST_CASE("keyrate_eval") {
  ScenarioConfig cfg;
  const KeyRateResult perfect =
      keyrate_eval(DensityMatrix::pure(initial_state(0.5)), cfg);
  CHECK(std::abs(perfect.keyrate - 0.5) < 1e-10);

  const KeyRateResult s_attack = keyrate_eval(s_gate_attack_state(), cfg);
  CHECK(std::abs(s_attack.r - 0.5) < 1e-10);
  CHECK(std::abs(s_attack.leak - 0.5) < 1e-10);
  CHECK(std::abs(s_attack.keyrate - 0.25) < 1e-10);

  const KeyRateResult mixed = keyrate_eval(DensityMatrix(CMatrix::Identity(4, 4) / 4.0), cfg);
  CHECK(mixed.keyrate_raw <= 0.0);
  CHECK(mixed.keyrate == 0.0);
}
