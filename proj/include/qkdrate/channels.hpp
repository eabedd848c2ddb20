/**
 * This code is part of qkdrate.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.
 */

#ifndef QKDRATE_CHANNELS_HPP_
#define QKDRATE_CHANNELS_HPP_

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "qkdrate/matrix.hpp"
#include "qkdrate/qudit.hpp"
#include "qkdrate/tableau.hpp"

namespace qkd {

/// Hermitian, unit-trace, PSD matrix (within numerical slack).
struct DensityMatrix {
  CMatrix mat;

  DensityMatrix() : mat(CMatrix::Zero(1, 1)) { mat(0, 0) = 1.0; }

  explicit DensityMatrix(CMatrix m) : mat(std::move(m)) {
    if (mat.rows() != mat.cols()) throw std::invalid_argument("DensityMatrix: not square");
    if (!is_hermitian(mat, kEqTol)) throw std::invalid_argument("DensityMatrix: not Hermitian");
    if (std::abs(mat.trace().real() - 1.0) > kEqTol || std::abs(mat.trace().imag()) > kEqTol)
      throw std::invalid_argument("DensityMatrix: trace is not 1");
    if (min_eigenvalue(mat) < -kPsdSlack)
      throw std::invalid_argument("DensityMatrix: not positive semidefinite");
  }

  long dim() const { return mat.rows(); }

  static DensityMatrix pure(const StateVector& psi) {
    return DensityMatrix(psi * psi.adjoint());
  }
};

/// Convex weights over the d^2 labels (r, s).
struct PauliWeights {
  int d = 2;
  Eigen::MatrixXd w;  // w(r, s)

  PauliWeights(int d_, Eigen::MatrixXd w_) : d(d_), w(std::move(w_)) {
    if (!is_prime(d)) throw std::invalid_argument("PauliWeights: dimension must be prime");
    if (w.rows() != d || w.cols() != d)
      throw std::invalid_argument("PauliWeights: weight table must be d x d");
    if (w.minCoeff() < 0.0) throw std::invalid_argument("PauliWeights: negative weight");
    if (std::abs(w.sum() - 1.0) > kEqTol)
      throw std::invalid_argument("PauliWeights: weights must sum to 1");
  }

  static PauliWeights point(int d, int r, int s) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d, d);
    w(r, s) = 1.0;
    return PauliWeights(d, w);
  }

  /// Qubit weights of the optimal-attack channel at average bit-error rate Q:
  /// (1-Q)^2 on I, Q^2 on the (1,1) label, Q(1-Q) on each of X and Z.
  static PauliWeights bb84_optimal(double q) {
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("PauliWeights: Q out of [0,1]");
    Eigen::MatrixXd w(2, 2);
    w(0, 0) = (1 - q) * (1 - q);
    w(1, 0) = q * (1 - q);
    w(0, 1) = q * (1 - q);
    w(1, 1) = q * q;
    return PauliWeights(2, w);
  }
};

/// Choi dual-state of a trace-preserving channel on a d-level system,
/// normalized to trace 1; the reduced state on the reference factor is I/d.
struct ChoiState {
  int d = 2;
  DensityMatrix state;

  ChoiState(int d_, DensityMatrix s) : d(d_), state(std::move(s)) {
    if (state.dim() != static_cast<long>(d) * d)
      throw std::invalid_argument("ChoiState: state dimension must be d^2");
    CMatrix ref = partial_trace(state.mat, {d, d}, {0});
    if (!approx_equal(ref, CMatrix::Identity(d, d) / d, 1e-10))
      throw std::invalid_argument("ChoiState: reference marginal is not maximally mixed");
  }
};

/// Apply the Pauli-random channel sum_{r,s} w_{r,s} P rho P^dagger.
inline DensityMatrix pauli_random_apply(const PauliWeights& w, const DensityMatrix& rho) {
  if (rho.dim() != w.d) throw std::invalid_argument("pauli_random_apply: dimension mismatch");
  CMatrix out = CMatrix::Zero(w.d, w.d);
  for (int r = 0; r < w.d; ++r)
    for (int s = 0; s < w.d; ++s) {
      if (w.w(r, s) == 0.0) continue;
      CMatrix p = gen_pauli(w.d, r, s);
      out += w.w(r, s) * p * rho.mat * p.adjoint();
    }
  return DensityMatrix(out);
}

/// Bell-diagonal Choi state sum_{r,s} w_{r,s} |B_{r,s}><B_{r,s}|.
inline ChoiState choi_of_pauli_random(const PauliWeights& w) {
  const long dim = static_cast<long>(w.d) * w.d;
  CMatrix out = CMatrix::Zero(dim, dim);
  for (int r = 0; r < w.d; ++r)
    for (int s = 0; s < w.d; ++s) {
      if (w.w(r, s) == 0.0) continue;
      StateVector b = bell_state(w.d, r, s);
      out += w.w(r, s) * (b * b.adjoint());
    }
  return ChoiState(w.d, DensityMatrix(out));
}

/// Choi state computed generically: apply the channel to half of |B_{0,0}>.
inline ChoiState choi_of_channel(int d, const std::function<CMatrix(const CMatrix&)>& channel) {
  const long dim = static_cast<long>(d) * d;
  StateVector b00 = bell_state(d, 0, 0);
  CMatrix full = b00 * b00.adjoint();
  CMatrix out = CMatrix::Zero(dim, dim);
  // Act blockwise: the channel touches the second factor of each d x d block.
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      CMatrix block = full.block(i * d, j * d, d, d);
      out.block(i * d, j * d, d, d) = channel(block);
    }
  return ChoiState(d, DensityMatrix(out));
}

/// Choi state on Bob's qubit of a unitary attack on qubit B plus N_E ancillas,
/// built from the maximally entangled state on D = 2^(N_E+1) levels per side,
/// with the ancilla factors traced out of both sides.
/// Factor order on each side: [B, E_1 ... E_NE].
inline ChoiState choi_of_unitary_attack(int n_qubits, const Circuit& circuit) {
  if (n_qubits < 1) throw std::invalid_argument("choi_of_unitary_attack: need at least one qubit");
  if (n_qubits > 4)
    throw std::domain_error("choi_of_unitary_attack: at most 3 ancilla qubits supported");
  const long d_side = 1L << n_qubits;
  const long dim = d_side * d_side;

  StateVector bell = StateVector::Zero(dim);
  for (long k = 0; k < d_side; ++k) bell(k * d_side + k) = 1.0 / std::sqrt(double(d_side));

  CMatrix u = tableau_to_unitary(n_qubits, circuit);
  CMatrix iu = kron(CMatrix::Identity(d_side, d_side), u);
  StateVector psi = iu * bell;
  CMatrix full = psi * psi.adjoint();

  // 2*n_qubits qubit factors; keep B on each side (indices 0 and n_qubits).
  std::vector<int> dims(2 * n_qubits, 2);
  CMatrix reduced = partial_trace(full, dims, {0, n_qubits});
  return ChoiState(2, DensityMatrix(reduced));
}

/// (1-eps) rho + eps Tr_B[rho] (x) I/2 on a two-qubit state.
inline DensityMatrix depolarize(const DensityMatrix& rho, double eps) {
  if (rho.dim() != 4) throw std::invalid_argument("depolarize: expected a two-qubit state");
  if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("depolarize: eps out of [0,1]");
  CMatrix marginal = partial_trace(rho.mat, {2, 2}, {0});
  CMatrix out = (1.0 - eps) * rho.mat + eps * kron(marginal, CMatrix::Identity(2, 2) / 2.0);
  return DensityMatrix(out);
}

enum class Basis { Z, X };

namespace detail {

inline const CMatrix& error_observable(Basis basis) {
  static const CMatrix ez = [] {
    CMatrix m = CMatrix::Zero(4, 4);
    m(1, 1) = 1.0;  // |01><01|
    m(2, 2) = 1.0;  // |10><10|
    return m;
  }();
  static const CMatrix ex = [] {
    StateVector plus(2), minus(2);
    plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    minus << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
    StateVector pm = kron_vec(plus, minus);
    StateVector mp = kron_vec(minus, plus);
    return CMatrix(pm * pm.adjoint() + mp * mp.adjoint());
  }();
  return basis == Basis::Z ? ez : ex;
}

}  // namespace detail

/// Same-basis error probability Tr[rho E_basis] of a two-qubit state.
inline double qber(const DensityMatrix& rho, Basis basis) {
  if (rho.dim() != 4) throw std::invalid_argument("qber: expected a two-qubit state");
  return (rho.mat * detail::error_observable(basis)).trace().real();
}

inline double avg_qber(const DensityMatrix& rho) {
  return 0.5 * (qber(rho, Basis::Z) + qber(rho, Basis::X));
}

/// Coefficient of P_a (x) P_b in the normalized two-qubit Pauli expansion,
/// i.e. Tr[rho (P_a (x) P_b)] / 2 over the Hermitian letters {I,X,Y,Z}.
/// A Clifford-attack Choi state has all moduli in {0, 1/2}.
inline double pauli_coeff(const CMatrix& rho, PauliLetter a, PauliLetter b) {
  CMatrix word = kron(pauli_string_matrix(PauliString(1, {a})),
                      pauli_string_matrix(PauliString(1, {b})));
  return (rho * word).trace().real() / 2.0;
}

}  // namespace qkd

#endif  // QKDRATE_CHANNELS_HPP_
