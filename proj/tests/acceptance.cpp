// Acceptance suite: one test case per criterion, each printing a PASS/FAIL line.
#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cstdio>

#include "qkdrate/qkdrate.hpp"
#include "test_helpers.hpp"

using namespace qkd;

namespace {

struct Criterion {
  int number;
  const char* name;
  bool ok = true;

  Criterion(int n, const char* name_) : number(n), name(name_) {}
  ~Criterion() {
    std::printf("[acceptance] criterion %d (%s): %s\n", number, name, ok ? "PASS" : "FAIL");
    std::fflush(stdout);
  }
};

#define CRITERION_CHECK(crit, cond)  \
  do {                               \
    const bool c_ = (cond);          \
    (crit).ok = (crit).ok && c_;     \
    CHECK(c_);                       \
  } while (0)

ConstraintSet make_cs(double b, double eps, ConstraintMode cm, EveMode em) {
  ScenarioConfig cfg;
  cfg.b = b;
  cfg.p = 0.5;
  cfg.eps = eps;
  cfg.constraint_mode = cm;
  cfg.eve_mode = em;
  return simulate_constraints(cfg);
}

double elapsed_s(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

TEST_CASE("criterion 1: symmetric-BB84 analytic oracle") {
  Criterion crit(1, "symmetric analytic oracle");
  for (double eps : {0.0, 0.05, 0.10, 0.15}) {
    const auto start = std::chrono::steady_clock::now();
    const auto [rho, res] =
        solve_unrestricted(make_cs(0.5, eps, ConstraintMode::Fine, EveMode::Unrestricted), 0.5);
    const double seconds = elapsed_s(start);
    const double oracle = 0.5 * (1.0 - 2.0 * binary_entropy(eps / 2.0));
    CRITERION_CHECK(crit, res.converged);
    CRITERION_CHECK(crit, std::abs(res.keyrate - oracle) <= 1e-3);
    CRITERION_CHECK(crit, seconds < 10.0);
  }
}

TEST_CASE("criterion 2: Clifford-attack table") {
  Criterion crit(2, "Clifford-attack table");
  const auto records = enumerate_attacks();
  CRITERION_CHECK(crit, records.size() == 48);
  int valid = 0;
  for (const auto& rec : records) valid += rec.valid;
  CRITERION_CHECK(crit, valid == 24);

  for (const auto& rec : records) {
    if (!rec.valid) continue;
    bool on_grid = false;
    for (double q : {0.0, 0.25, 0.5, 0.75, 1.0})
      if (std::abs(rec.q - q) < 1e-10) on_grid = true;
    CRITERION_CHECK(crit, on_grid);
  }

  const auto rows = compare_report();
  CRITERION_CHECK(crit, rows.size() == 5);
  for (const auto& row : rows) {
    if (std::abs(row.q) < 1e-10 || std::abs(row.q - 0.5) < 1e-10 ||
        std::abs(row.q - 1.0) < 1e-10) {
      CRITERION_CHECK(crit,
                      std::abs(row.clifford_keyrate - row.worst_case_keyrate) <= 1e-6);
    } else {
      CRITERION_CHECK(crit, row.clifford_keyrate > 0.1);
      CRITERION_CHECK(crit, std::abs(row.worst_case_keyrate) <= 1e-12);
    }
    if (std::abs(row.q - 0.25) < 1e-10)
      CRITERION_CHECK(crit, std::abs(row.clifford_keyrate - 0.25) <= 1e-9);
  }
}

TEST_CASE("criterion 3: restriction equality under fine constraints") {
  Criterion crit(3, "fine-grained restriction equality");
  for (double b : {0.5, 1.0 / 9.0}) {
    const auto restricted = solve_restricted(
        make_cs(b, 0.1, ConstraintMode::Fine, EveMode::CliffordMix), 0.5, b, CliffSumMode::Eq3);
    const auto [rho, unrestricted] =
        solve_unrestricted(make_cs(b, 0.1, ConstraintMode::Fine, EveMode::Unrestricted), 0.5);
    CRITERION_CHECK(crit, restricted.result.converged);
    CRITERION_CHECK(crit, unrestricted.converged);
    CRITERION_CHECK(crit,
                    std::abs(restricted.result.keyrate - unrestricted.keyrate) <= 2e-3);
  }
}

TEST_CASE("criterion 4: restriction advantage under coarse constraints") {
  Criterion crit(4, "coarse-grained restriction advantage");
  const double b = 1.0 / 9.0;
  const auto restricted = solve_restricted(
      make_cs(b, 0.1, ConstraintMode::Coarse, EveMode::CliffordMix), 0.5, b, CliffSumMode::Eq3);
  const auto [rho, unrestricted] =
      solve_unrestricted(make_cs(b, 0.1, ConstraintMode::Coarse, EveMode::Unrestricted), 0.5);
  CRITERION_CHECK(crit, restricted.result.converged);
  CRITERION_CHECK(crit, unrestricted.converged);
  const double margin = restricted.result.keyrate - unrestricted.keyrate;
  CRITERION_CHECK(crit, margin > 0.01);
  // Regression pin from the first derivation.
  CRITERION_CHECK(crit, std::abs(margin - 0.015590) < 1e-3);

  const auto fine = solve_restricted(
      make_cs(b, 0.1, ConstraintMode::Fine, EveMode::CliffordMix), 0.5, b, CliffSumMode::Eq3);
  CRITERION_CHECK(crit, std::abs(fine.result.keyrate - restricted.result.keyrate) <= 2e-3);
}

TEST_CASE("criterion 5: dilated objective brute force") {
  Criterion crit(5, "dilated-objective equivalence");
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  for (double p : {0.3, 0.5, 0.9}) {
    for (int trial = 0; trial < 100; ++trial) {
      const DensityMatrix rho(qkd::testing::random_density(4, rng));
      CRITERION_CHECK(crit,
                      std::abs(objective_dilated(rho, p) - objective_reduced(rho, p)) <= 1e-9);
    }
  }
  CRITERION_CHECK(crit, elapsed_s(start) < 60.0);
}

TEST_CASE("criterion 6: gradient against central finite differences") {
  Criterion crit(6, "analytic gradient check");
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 50; ++trial) {
    const double p = trial % 3 == 0 ? 0.3 : (trial % 3 == 1 ? 0.5 : 0.9);
    const CMatrix rho = qkd::testing::random_density_pd(4, rng, 0.02);
    CMatrix dir = qkd::testing::random_traceless_hermitian(4, rng);
    dir /= dir.norm();
    const double h = 1e-5;
    const double fd =
        (detail::objective_nats(rho + h * dir, p) - detail::objective_nats(rho - h * dir, p)) /
        (2.0 * h);
    const double analytic =
        (objective_gradient(DensityMatrix(rho), p) * dir).trace().real();
    CRITERION_CHECK(crit, std::abs(fd - analytic) / std::max(std::abs(fd), 1e-12) < 1e-5);
  }
}

TEST_CASE("criterion 7: Choi coefficient structure of Clifford attacks") {
  Criterion crit(7, "Clifford Choi coefficient structure");
  int count = 0;
  for (int ancillas = 0; ancillas <= 3; ++ancillas) {
    for (int trial = 0; trial < 25; ++trial, ++count) {
      const int n = ancillas + 1;
      ChoiState choi = choi_of_unitary_attack(n, random_circuit(n, 30, 7000 + count));
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          const double c = std::abs(pauli_coeff(choi.state.mat, static_cast<PauliLetter>(a),
                                                static_cast<PauliLetter>(b)));
          CRITERION_CHECK(crit, c < 1e-10 || std::abs(c - 0.5) < 1e-10);
        }
    }
  }
  CRITERION_CHECK(crit, count == 100);
}

TEST_CASE("criterion 8: algebraic identities") {
  Criterion crit(8, "displacement, Bell-decomposition and gamma_IZ identities");
  for (int d : {2, 3, 5}) {
    const StateVector base = bell_state(d, 0, 0);
    for (int r = 0; r < d; ++r)
      for (int s = 0; s < d; ++s) {
        const StateVector displaced =
            kron(CMatrix::Identity(d, d), gen_pauli(d, r, s)) * base;
        CRITERION_CHECK(crit,
                        (displaced - bell_state(d, r, s)).cwiseAbs().maxCoeff() <= 1e-12);
      }

    // Bell projector in the Pauli basis: 1/d^2 exactly on the label pairs
    // (r, s), (r, s') with s + s' = 0 mod d, zero elsewhere.
    const auto coeffs = pauli_decompose(base * base.adjoint(), d, 2);
    for (const auto& [labels, c] : coeffs) {
      const bool selected =
          labels[0].r == labels[1].r && (labels[0].s + labels[1].s) % d == 0;
      CRITERION_CHECK(crit, std::abs(c - (selected ? 1.0 / (d * d) : 0.0)) <= 1e-12);
    }
  }

  const CMatrix iz = kron(CMatrix::Identity(2, 2),
                          pauli_string_matrix(PauliString(1, {PauliLetter::Z})));
  for (double b : {0.5, 1.0 / 9.0, 0.8}) {
    for (double eps : {0.0, 0.1}) {
      const ConstraintSet cs = make_cs(b, eps, ConstraintMode::Fine, EveMode::Unrestricted);
      auto value_of = [&](const std::string& label) {
        for (const auto& c : cs.equalities)
          if (c.label == label) return c.value;
        return std::numeric_limits<double>::quiet_NaN();
      };
      const double recombined = value_of("gamma_00") - value_of("gamma_01") +
                                value_of("gamma_10") - value_of("gamma_11");
      const double direct = ((*cs.reference_state) * iz).trace().real();
      CRITERION_CHECK(crit, std::abs(recombined - direct) <= 1e-12);
    }
  }
}

TEST_CASE("criterion 9: certificate discipline") {
  Criterion crit(9, "certificate discipline and tolerance stability");
  SolverOptions loose;
  loose.mu_final = 1e-6;
  for (double eps : {0.0, 0.05, 0.10, 0.15}) {
    const ConstraintSet cs = make_cs(0.5, eps, ConstraintMode::Fine, EveMode::Unrestricted);
    const auto [rho_a, fine_res] = solve_unrestricted(cs, 0.5);
    const auto [rho_b, loose_res] = solve_unrestricted(cs, 0.5, loose);
    CRITERION_CHECK(crit, fine_res.certificate_lb <= fine_res.r + 1e-9);
    CRITERION_CHECK(crit,
                    fine_res.gap <= 2.0 * fine_res.mu_final * fine_res.nu / kLn2 + 1e-9);
    CRITERION_CHECK(crit, loose_res.certificate_lb <= loose_res.r + 1e-9);
    const double denom = std::max({std::abs(fine_res.r), std::abs(loose_res.r), 1e-9});
    CRITERION_CHECK(crit, std::abs(fine_res.r - loose_res.r) / denom < 1e-3);
  }

  // Full re-solve check at mu_final / 10 on the reference configuration.
  const ConstraintSet cs = make_cs(0.5, 0.1, ConstraintMode::Fine, EveMode::Unrestricted);
  const auto [rho, res] = solve_unrestricted(cs, 0.5);
  const bool cert = certificate_check(res, [&](double mu) {
    SolverOptions opts;
    opts.mu_final = mu;
    return solve_unrestricted(cs, 0.5, opts).second;
  });
  CRITERION_CHECK(crit, cert);

  const auto restricted = solve_restricted(
      make_cs(1.0 / 9.0, 0.1, ConstraintMode::Coarse, EveMode::CliffordMix), 0.5, 1.0 / 9.0,
      CliffSumMode::Eq3);
  CRITERION_CHECK(crit, restricted.result.certificate_lb <= restricted.result.r + 1e-9);
  CRITERION_CHECK(crit, restricted.result.gap <= 2.0 * restricted.result.mu_final *
                                                     restricted.result.nu / kLn2 + 1e-9);
}

TEST_CASE("criterion 10: ordering across the (b, eps) grid") {
  Criterion crit(10, "feasible-set ordering on a 5x5 grid");
  for (double b : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    for (double eps : {0.0, 0.05, 0.10, 0.15, 0.20}) {
      const auto [r1, uc] = solve_unrestricted(
          make_cs(b, eps, ConstraintMode::Coarse, EveMode::Unrestricted), 0.5);
      const auto [r2, uf] = solve_unrestricted(
          make_cs(b, eps, ConstraintMode::Fine, EveMode::Unrestricted), 0.5);
      const auto rc = solve_restricted(
          make_cs(b, eps, ConstraintMode::Coarse, EveMode::CliffordMix), 0.5, b,
          CliffSumMode::Eq3);
      const auto rf = solve_restricted(
          make_cs(b, eps, ConstraintMode::Fine, EveMode::CliffordMix), 0.5, b,
          CliffSumMode::Eq3);
      CRITERION_CHECK(crit, uf.keyrate >= uc.keyrate - 1e-6);
      CRITERION_CHECK(crit, rc.result.keyrate >= uc.keyrate - 1e-6);
      CRITERION_CHECK(crit, rf.result.keyrate >= uf.keyrate - 1e-6);
    }
  }
}
