/**
 * This code is part of qkdrate.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.
 */

#ifndef QKDRATE_QUDIT_HPP_
#define QKDRATE_QUDIT_HPP_

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "qkdrate/matrix.hpp"

namespace qkd {

inline bool is_prime(int d) {
  if (d < 2) return false;
  for (int k = 2; k * k <= d; ++k)
    if (d % k == 0) return false;
  return true;
}

/// Label (r, s) of a shift-and-phase operator in prime dimension d.
struct PauliLabel {
  int d = 2;
  int r = 0;
  int s = 0;

  PauliLabel() = default;
  PauliLabel(int d_, int r_, int s_) : d(d_), r(r_), s(s_) {
    if (!is_prime(d)) throw std::invalid_argument("PauliLabel: dimension must be prime");
    if (r < 0 || r >= d || s < 0 || s >= d)
      throw std::invalid_argument("PauliLabel: indices must lie in [0, d)");
  }

  bool operator<(const PauliLabel& o) const {
    if (d != o.d) return d < o.d;
    if (r != o.r) return r < o.r;
    return s < o.s;
  }
  bool operator==(const PauliLabel& o) const { return d == o.d && r == o.r && s == o.s; }
};

/// Shift-and-phase operator: sum_k exp(2*pi*i*k*s/d) |k+r><k|, index arithmetic mod d.
inline CMatrix gen_pauli(const PauliLabel& label) {
  const int d = label.d;
  CMatrix m = CMatrix::Zero(d, d);
  const double w = 2.0 * std::numbers::pi / d;
  for (int k = 0; k < d; ++k)
    m((k + label.r) % d, k) = std::polar(1.0, w * k * label.s);
  return m;
}

inline CMatrix gen_pauli(int d, int r, int s) { return gen_pauli(PauliLabel(d, r, s)); }

/// Two-qudit Bell state (1/sqrt(d)) sum_k exp(2*pi*i*k*s/d) |k>|k+r>, on dimension d^2.
/// The first ket is the most significant index.
inline StateVector bell_state(int d, int r, int s) {
  PauliLabel label(d, r, s);  // validates ranges
  StateVector v = StateVector::Zero(static_cast<long>(d) * d);
  const double w = 2.0 * std::numbers::pi / d;
  const double norm = 1.0 / std::sqrt(static_cast<double>(d));
  for (int k = 0; k < d; ++k)
    v(static_cast<long>(k) * d + (k + r) % d) = std::polar(norm, w * k * s);
  return v;
}

using PauliCoefficients = std::map<std::vector<PauliLabel>, complex_t>;

/// Coefficients c_L = Tr[M (tensor_i P_{L_i})^dagger] / d^n over all n-tuples of labels.
/// Reassembling sum_L c_L tensor_i P_{L_i} reproduces M.
inline PauliCoefficients pauli_decompose(const CMatrix& m, int d, int n) {
  if (!is_prime(d)) throw std::invalid_argument("pauli_decompose: dimension must be prime");
  if (n < 1) throw std::invalid_argument("pauli_decompose: factor count must be positive");
  long dim = 1;
  for (int i = 0; i < n; ++i) dim *= d;
  if (m.rows() != dim || m.cols() != dim)
    throw std::invalid_argument("pauli_decompose: matrix dimension does not equal d^n");

  // Single-qudit operators, indexed r*d + s.
  std::vector<CMatrix> singles;
  singles.reserve(static_cast<std::size_t>(d) * d);
  for (int r = 0; r < d; ++r)
    for (int s = 0; s < d; ++s) singles.push_back(gen_pauli(d, r, s));

  PauliCoefficients coeffs;
  std::vector<int> idx(n, 0);
  const double scale = 1.0 / static_cast<double>(dim);
  while (true) {
    std::vector<CMatrix> factors;
    std::vector<PauliLabel> labels;
    factors.reserve(n);
    labels.reserve(n);
    for (int i = 0; i < n; ++i) {
      factors.push_back(singles[idx[i]]);
      labels.emplace_back(d, idx[i] / d, idx[i] % d);
    }
    const CMatrix word = kron(factors);
    coeffs[labels] = (m * word.adjoint()).trace() * scale;

    int pos = n - 1;
    while (pos >= 0 && ++idx[pos] == d * d) idx[pos--] = 0;
    if (pos < 0) break;
  }
  return coeffs;
}

/// Rebuild a matrix from its Pauli coefficient map.
inline CMatrix pauli_reassemble(const PauliCoefficients& coeffs, int d, int n) {
  long dim = 1;
  for (int i = 0; i < n; ++i) dim *= d;
  CMatrix out = CMatrix::Zero(dim, dim);
  for (const auto& [labels, c] : coeffs) {
    std::vector<CMatrix> factors;
    factors.reserve(labels.size());
    for (const auto& l : labels) factors.push_back(gen_pauli(l));
    out += c * kron(factors);
  }
  return out;
}

}  // namespace qkd

#endif  // QKDRATE_QUDIT_HPP_
