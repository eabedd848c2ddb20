/**
 * This code is part of qkdrate.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.
 */

#ifndef QKDRATE_CLIFFORD_ATTACK_HPP_
#define QKDRATE_CLIFFORD_ATTACK_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "qkdrate/channels.hpp"
#include "qkdrate/entropy.hpp"
#include "qkdrate/protocol.hpp"

namespace qkd {

/// One of the 48 signed permutations of the Pauli letters {X, Y, Z}.
struct SignedPermutation {
  std::array<PauliLetter, 3> image;  // image of X, Y, Z
  std::array<int, 3> sign;           // sign of each image, +1 or -1

  std::string perm_string() const {
    std::string s;
    for (auto l : image) s += letter_char(l);
    return s;
  }
  std::string sign_string() const {
    std::string s;
    for (int v : sign) s += v > 0 ? '+' : '-';
    return s;
  }

  /// Apply this after `first`: (this o first)(P) for each letter.
  SignedPermutation compose(const SignedPermutation& first) const {
    SignedPermutation out;
    for (int j = 0; j < 3; ++j) {
      const int mid = static_cast<int>(first.image[j]) - 1;
      out.image[j] = image[mid];
      out.sign[j] = first.sign[j] * sign[mid];
    }
    return out;
  }

  bool operator==(const SignedPermutation& o) const {
    return image == o.image && sign == o.sign;
  }
};

inline std::vector<SignedPermutation> all_signed_permutations() {
  std::vector<SignedPermutation> out;
  std::array<PauliLetter, 3> letters = {PauliLetter::X, PauliLetter::Y, PauliLetter::Z};
  std::sort(letters.begin(), letters.end());
  do {
    for (int bits = 0; bits < 8; ++bits) {
      SignedPermutation sp;
      sp.image = letters;
      for (int j = 0; j < 3; ++j) sp.sign[j] = (bits >> (2 - j)) & 1 ? -1 : +1;
      out.push_back(sp);
    }
  } while (std::next_permutation(letters.begin(), letters.end()));
  return out;
}

/// Candidate Choi matrix of a signed-permutation attack: the Bell-state Pauli
/// decomposition with the B-side letters permuted and signed.
inline CMatrix signed_permutation_choi(const SignedPermutation& sp) {
  auto pauli = [](PauliLetter l) { return pauli_string_matrix(PauliString(1, {l})); };
  const std::array<PauliLetter, 3> src = {PauliLetter::X, PauliLetter::Y, PauliLetter::Z};
  // Bell-state correlations <P_j (x) P_j>: +1 for X and Z, -1 for Y.
  const std::array<double, 3> bell_t = {1.0, -1.0, 1.0};
  CMatrix out = kron(CMatrix::Identity(2, 2), CMatrix::Identity(2, 2));
  for (int j = 0; j < 3; ++j)
    out += bell_t[j] * sp.sign[j] * kron(pauli(src[j]), pauli(sp.image[j]));
  return out / 4.0;
}

struct AttackRecord {
  SignedPermutation sp;
  CMatrix choi;  // Hermitian, unit trace; PSD only when valid
  bool valid = false;
  double q = 0.0;
  double clifford_keyrate = std::numeric_limits<double>::quiet_NaN();
  double worst_case_keyrate = std::numeric_limits<double>::quiet_NaN();
};

/// Key rate of the optimal (Pauli-random) attack at average error rate q:
/// p_pass * max(0, 1 - 2 h(min(q, 1-q))).
inline double worst_case_keyrate(double q, double p) {
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("worst_case_keyrate: q out of [0,1]");
  if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("worst_case_keyrate: p out of (0,1)");
  const double p_pass = p * p + (1.0 - p) * (1.0 - p);
  const double h = binary_entropy(std::min(q, 1.0 - q));
  return p_pass * std::max(0.0, 1.0 - 2.0 * h);
}

/// All 48 signed-permutation candidates, filtered for positivity, each valid
/// one scored at the symmetric evaluation point (b = 1/2).
inline std::vector<AttackRecord> enumerate_attacks(double p = 0.5) {
  std::vector<AttackRecord> records;
  ScenarioConfig config;
  config.b = 0.5;
  config.p = p;
  for (const SignedPermutation& sp : all_signed_permutations()) {
    AttackRecord rec;
    rec.sp = sp;
    rec.choi = signed_permutation_choi(sp);
    rec.valid = min_eigenvalue(rec.choi) >= -kPsdSlack;
    // QBER is a linear functional, well defined also for invalid candidates.
    rec.q = 0.5 * ((rec.choi * detail::error_observable(Basis::Z)).trace().real() +
                   (rec.choi * detail::error_observable(Basis::X)).trace().real());
    if (rec.valid) {
      KeyRateResult kr = keyrate_eval(DensityMatrix(rec.choi), config);
      rec.clifford_keyrate = kr.keyrate;
      rec.worst_case_keyrate = worst_case_keyrate(rec.q, p);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

struct ComparisonRow {
  double q = 0.0;
  double clifford_keyrate = 0.0;   // minimum over valid attacks at this q
  double worst_case_keyrate = 0.0;
  double margin = 0.0;
};

/// One row per distinct QBER among the valid attacks.
inline std::vector<ComparisonRow> compare_report(double p = 0.5) {
  std::vector<ComparisonRow> rows;
  for (const AttackRecord& rec : enumerate_attacks(p)) {
    if (!rec.valid) continue;
    auto it = std::find_if(rows.begin(), rows.end(),
                           [&](const ComparisonRow& r) { return std::abs(r.q - rec.q) < 1e-9; });
    if (it == rows.end()) {
      rows.push_back({rec.q, rec.clifford_keyrate, rec.worst_case_keyrate, 0.0});
    } else {
      it->clifford_keyrate = std::min(it->clifford_keyrate, rec.clifford_keyrate);
    }
  }
  std::sort(rows.begin(), rows.end(),
            [](const ComparisonRow& a, const ComparisonRow& b) { return a.q < b.q; });
  for (auto& row : rows) row.margin = row.clifford_keyrate - row.worst_case_keyrate;
  return rows;
}

}  // namespace qkd

#endif  // QKDRATE_CLIFFORD_ATTACK_HPP_
