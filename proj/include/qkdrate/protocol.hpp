/**
 * This code is part of qkdrate.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.
 */

#ifndef QKDRATE_PROTOCOL_HPP_
#define QKDRATE_PROTOCOL_HPP_

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qkdrate/channels.hpp"
#include "qkdrate/entropy.hpp"
#include "qkdrate/matrix.hpp"

namespace qkd {

enum class ConstraintMode { Coarse, Fine };
enum class EveMode { Unrestricted, CliffordMix };
enum class CliffSumMode { Eq3, Le3 };

inline const char* to_string(ConstraintMode m) {
  return m == ConstraintMode::Coarse ? "coarse" : "fine";
}
inline const char* to_string(EveMode m) {
  return m == EveMode::Unrestricted ? "unrestricted" : "clifford-mix";
}
inline const char* to_string(CliffSumMode m) { return m == CliffSumMode::Eq3 ? "eq3" : "le3"; }

/// One evaluation point of the protocol: source asymmetry b, Z-basis
/// probability p, channel error eps, and the analysis options.
struct ScenarioConfig {
  double b = 0.5;
  double p = 0.5;
  double eps = 0.0;
  ConstraintMode constraint_mode = ConstraintMode::Fine;
  EveMode eve_mode = EveMode::Unrestricted;
  CliffSumMode cliff_sum_mode = CliffSumMode::Eq3;

  void validate() const {
    if (b < 0.0 || b > 1.0) throw std::invalid_argument("ScenarioConfig: b out of [0,1]");
    if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("ScenarioConfig: p out of (0,1)");
    if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("ScenarioConfig: eps out of [0,1]");
  }

  double p_pass() const { return p * p + (1.0 - p) * (1.0 - p); }
};

struct KeyRateResult {
  double r = 0.0;               // objective value, bits
  double leak = 0.0;            // leak_EC, bits
  double p_pass = 0.0;
  double keyrate = 0.0;         // max(0, keyrate_raw)
  double keyrate_raw = 0.0;     // r - p_pass * leak
  double certificate_lb = 0.0;  // certified lower bound on the objective, bits
  double gap = 0.0;             // r - certificate_lb
  int iterations = 0;
  bool converged = false;
  // solver diagnostics
  double mu_final = 0.0;        // final barrier weight used
  double nu = 0.0;              // barrier parameter entering the certificate
  double perturbation = 0.0;    // constraint perturbation applied in phase I, 0 if none
};

/// sqrt(b)|00> + sqrt(1-b)|11>.
inline StateVector initial_state(double b) {
  if (b < 0.0 || b > 1.0) throw std::invalid_argument("initial_state: b out of [0,1]");
  StateVector v = StateVector::Zero(4);
  v(0) = std::sqrt(b);
  v(3) = std::sqrt(1.0 - b);
  return v;
}

namespace detail {

inline StateVector qubit_ket(int which) {
  // 0 -> |0>, 1 -> |1>, 2 -> |+>, 3 -> |->
  StateVector v(2);
  const double s = 1.0 / std::sqrt(2.0);
  switch (which) {
    case 0: v << 1, 0; break;
    case 1: v << 0, 1; break;
    case 2: v << s, s; break;
    default: v << s, -s; break;
  }
  return v;
}

inline CMatrix qubit_proj(int which) {
  StateVector v = qubit_ket(which);
  return v * v.adjoint();
}

}  // namespace detail

/// Pinching of Alice's qubit in the Z basis: projectors |0><0| (x) I, |1><1| (x) I.
inline const PinchingSpec& pinch_alice_z() {
  static const PinchingSpec spec({kron(detail::qubit_proj(0), CMatrix::Identity(2, 2)),
                                  kron(detail::qubit_proj(1), CMatrix::Identity(2, 2))});
  return spec;
}

/// Pinching of Alice's qubit in the X basis.
inline const PinchingSpec& pinch_alice_x() {
  static const PinchingSpec spec({kron(detail::qubit_proj(2), CMatrix::Identity(2, 2)),
                                  kron(detail::qubit_proj(3), CMatrix::Identity(2, 2))});
  return spec;
}

/// Sifted joint distribution over (key character, Bob outcome).
///
/// Same-basis events only: Z rounds carry weight p^2 and X rounds (1-p)^2,
/// renormalized by p_pass = p^2 + (1-p)^2. Alice's outcomes are mapped to key
/// characters as {0,+} -> 0 and {1,-} -> 1.
inline JointDistribution statistics_from_state(const DensityMatrix& rho, double p) {
  if (rho.dim() != 4) throw std::invalid_argument("statistics_from_state: expected 4x4 state");
  if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("statistics_from_state: p out of (0,1)");
  const double p_pass = p * p + (1.0 - p) * (1.0 - p);
  const double wz = p * p / p_pass;
  const double wx = (1.0 - p) * (1.0 - p) / p_pass;

  JointDistribution dist;
  auto prob = [&](int a, int bo) {
    double v = (rho.mat * kron(detail::qubit_proj(a), detail::qubit_proj(bo))).trace().real();
    return std::max(v, 0.0);
  };
  for (int a = 0; a < 2; ++a)
    for (int bo = 0; bo < 2; ++bo) dist.p[a][bo] = wz * prob(a, bo);
  for (int a = 2; a < 4; ++a)
    for (int bo = 2; bo < 4; ++bo) dist.p[a - 2][bo] = wx * prob(a, bo);
  return dist;
}

/// Error-correction leakage at the Shannon limit.
inline double leak_ec(const JointDistribution& dist) { return cond_shannon(dist); }

struct Constraint {
  CMatrix observable;
  double value = 0.0;
  std::string label;
};

/// Equality constraints Tr[rho Obs] = value plus the implicit unit trace.
struct ConstraintSet {
  std::vector<Constraint> equalities;
  ConstraintMode mode = ConstraintMode::Coarse;
  bool alice_marginals = false;
  std::optional<ScenarioConfig> config;       // provenance, when simulated
  std::optional<CMatrix> reference_state;     // a state satisfying the equalities
  double sim_leak = 0.0;                      // leak_EC of the simulated statistics
};

/// Coarse: the two basis-error observables. Fine: the 16 products M_i (x) M_j
/// over M in {|0><0|, |1><1|, |+><+|, |-><-|}.
inline std::vector<Constraint> constraint_observables(ConstraintMode mode) {
  std::vector<Constraint> obs;
  if (mode == ConstraintMode::Coarse) {
    obs.push_back({detail::error_observable(Basis::Z), 0.0, "gamma_z"});
    obs.push_back({detail::error_observable(Basis::X), 0.0, "gamma_x"});
    return obs;
  }
  static const char* kNames = "01+-";
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      std::string label = std::string("gamma_") + kNames[i] + kNames[j];
      obs.push_back({kron(detail::qubit_proj(i), detail::qubit_proj(j)), 0.0, label});
    }
  return obs;
}

/// Expectations of the constraint observables on the depolarized initial state.
/// For an unrestricted eavesdropper the three Alice-marginal constraints are
/// appended (<X^A> = <Y^A> = 0, <Z^A> = 2b-1).
inline ConstraintSet simulate_constraints(const ScenarioConfig& config) {
  config.validate();
  const DensityMatrix rho_sim = depolarize(DensityMatrix::pure(initial_state(config.b)),
                                           config.eps);
  ConstraintSet cs;
  cs.mode = config.constraint_mode;
  cs.config = config;
  cs.reference_state = rho_sim.mat;
  cs.sim_leak = leak_ec(statistics_from_state(rho_sim, config.p));
  cs.equalities = constraint_observables(config.constraint_mode);
  for (auto& c : cs.equalities) c.value = (rho_sim.mat * c.observable).trace().real();

  if (config.eve_mode == EveMode::Unrestricted) {
    cs.alice_marginals = true;
    const CMatrix id2 = CMatrix::Identity(2, 2);
    auto pauli = [](PauliLetter l) { return pauli_string_matrix(PauliString(1, {l})); };
    cs.equalities.push_back({kron(pauli(PauliLetter::X), id2), 0.0, "alice_X"});
    cs.equalities.push_back({kron(pauli(PauliLetter::Y), id2), 0.0, "alice_Y"});
    cs.equalities.push_back({kron(pauli(PauliLetter::Z), id2), 2.0 * config.b - 1.0, "alice_Z"});
  }
  return cs;
}

namespace detail {

/// p^2 D(rho||Z_Z(rho)) + (1-p)^2 D(rho||Z_X(rho)) in nats, on a raw PSD matrix.
inline double objective_nats(const CMatrix& rho, double p) {
  const double dz = rel_entropy_nats(rho, pinch_matrix(rho, pinch_alice_z()));
  const double dx = rel_entropy_nats(rho, pinch_matrix(rho, pinch_alice_x()));
  return p * p * dz + (1.0 - p) * (1.0 - p) * dx;
}

/// log of a positive-definite Hermitian matrix.
inline CMatrix logm_pd(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m);
  if (es.info() != Eigen::Success) throw std::runtime_error("logm: eigendecomposition failed");
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::domain_error("logm: matrix is not positive definite");
  Eigen::VectorXd logs = es.eigenvalues().array().log();
  return es.eigenvectors() * logs.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

/// Reduced two-term objective in bits; support violations give +infinity.
inline double objective_reduced(const DensityMatrix& rho, double p) {
  if (rho.dim() != 4) throw std::invalid_argument("objective_reduced: expected 4x4 state");
  return detail::objective_nats(rho.mat, p) / kLn2;
}

/// Analytic gradient of the reduced objective, in nats. Requires rho > 0.
inline CMatrix objective_gradient(const DensityMatrix& rho, double p) {
  if (rho.dim() != 4) throw std::invalid_argument("objective_gradient: expected 4x4 state");
  const CMatrix log_rho = detail::logm_pd(rho.mat);
  const CMatrix log_z = detail::logm_pd(pinch_matrix(rho.mat, pinch_alice_z()));
  const CMatrix log_x = detail::logm_pd(pinch_matrix(rho.mat, pinch_alice_x()));
  return p * p * (log_rho - log_z) + (1.0 - p) * (1.0 - p) * (log_rho - log_x);
}

namespace detail {

// Dilated measurement/key-map machinery on [At, Bt, Ab, Bb, A, B] (64 dims).
// At/Bt record the basis choice, Ab/Bb the outcomes; Ab doubles as the key
// register. Kept solely as a brute-force oracle for the reduced objective.

inline CMatrix kraus_bob(Basis basis, double p) {
  const double amp = basis == Basis::Z ? std::sqrt(p) : std::sqrt(1.0 - p);
  const int tilde = basis == Basis::Z ? 0 : 1;
  CMatrix out = CMatrix::Zero(16, 4);
  for (int y = 0; y < 2; ++y) {
    const int outcome = basis == Basis::Z ? y : 2 + y;
    out += amp * kron({qubit_ket(tilde), qubit_ket(y),
                       kron(CMatrix::Identity(2, 2), qubit_proj(outcome))});
  }
  return out;
}

inline CMatrix kraus_alice(Basis basis, double p) {
  const double amp = basis == Basis::Z ? std::sqrt(p) : std::sqrt(1.0 - p);
  const int tilde = basis == Basis::Z ? 0 : 1;
  CMatrix out = CMatrix::Zero(64, 16);
  for (int x = 0; x < 2; ++x) {
    const int outcome = basis == Basis::Z ? x : 2 + x;
    out += amp * kron({StateVector(qubit_ket(tilde)), CMatrix::Identity(2, 2),
                       StateVector(qubit_ket(x)), CMatrix::Identity(2, 2),
                       qubit_proj(outcome), CMatrix::Identity(2, 2)});
  }
  return out;
}

inline const CMatrix& postselect_same_basis() {
  static const CMatrix pi = [] {
    CMatrix m = CMatrix::Zero(64, 64);
    for (int c = 0; c < 2; ++c) {
      CMatrix proj = kron({qubit_proj(c), qubit_proj(c), CMatrix::Identity(16, 16)});
      m += proj;
    }
    return m;
  }();
  return pi;
}

/// The measurement/announcement/post-selection map G on the dilated space.
inline CMatrix g_map(const CMatrix& rho, double p) {
  CMatrix out = CMatrix::Zero(64, 64);
  for (Basis a : {Basis::Z, Basis::X})
    for (Basis b : {Basis::Z, Basis::X}) {
      CMatrix k = kraus_alice(a, p) * kraus_bob(b, p);
      out += k * rho * k.adjoint();
    }
  const CMatrix& pi = postselect_same_basis();
  return pi * out * pi;
}

/// Pinching of the key register Ab on the dilated space.
inline const PinchingSpec& pinch_key_register() {
  static const PinchingSpec spec([] {
    std::vector<CMatrix> projs;
    for (int x = 0; x < 2; ++x)
      projs.push_back(kron({CMatrix::Identity(4, 4), qubit_proj(x), CMatrix::Identity(8, 8)}));
    return projs;
  }());
  return spec;
}

}  // namespace detail

/// Brute-force objective through the dilated G map; agrees with
/// objective_reduced on every state.
inline double objective_dilated(const DensityMatrix& rho, double p) {
  if (rho.dim() != 4) throw std::invalid_argument("objective_dilated: expected 4x4 state");
  const CMatrix g = detail::g_map(rho.mat, p);
  const CMatrix pinched = pinch_matrix(g, detail::pinch_key_register());
  return rel_entropy_nats(g, pinched) / kLn2;
}

/// Evaluate the key rate of a fixed state: no optimization, leak from the
/// state's own sifted statistics.
inline KeyRateResult keyrate_eval(const DensityMatrix& rho, const ScenarioConfig& config) {
  config.validate();
  KeyRateResult res;
  res.r = objective_reduced(rho, config.p);
  res.leak = leak_ec(statistics_from_state(rho, config.p));
  res.p_pass = config.p_pass();
  res.keyrate_raw = res.r - res.p_pass * res.leak;
  res.keyrate = std::max(0.0, res.keyrate_raw);
  res.certificate_lb = res.r;
  res.gap = 0.0;
  res.converged = true;
  return res;
}

}  // namespace qkd

#endif  // QKDRATE_PROTOCOL_HPP_
