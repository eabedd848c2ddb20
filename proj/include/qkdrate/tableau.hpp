/**
 * This code is part of qkdrate.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.
 */

#ifndef QKDRATE_TABLEAU_HPP_
#define QKDRATE_TABLEAU_HPP_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "qkdrate/matrix.hpp"

namespace qkd {

enum class PauliLetter : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

inline char letter_char(PauliLetter l) { return "IXYZ"[static_cast<int>(l)]; }

/// Signed n-qubit Pauli word. Hermitian by construction: sign is +1 or -1.
struct PauliString {
  int n = 0;
  std::vector<PauliLetter> letters;
  int sign = +1;

  PauliString() = default;
  PauliString(int n_, std::vector<PauliLetter> letters_, int sign_ = +1)
      : n(n_), letters(std::move(letters_)), sign(sign_) {
    if (static_cast<int>(letters.size()) != n)
      throw std::invalid_argument("PauliString: letter count does not equal qubit count");
    if (sign != 1 && sign != -1) throw std::invalid_argument("PauliString: sign must be +1 or -1");
  }

  static PauliString identity(int n) {
    return PauliString(n, std::vector<PauliLetter>(n, PauliLetter::I), +1);
  }

  static PauliString single(int n, int qubit, PauliLetter l, int sign = +1) {
    PauliString p = identity(n);
    p.letters.at(qubit) = l;
    p.sign = sign;
    return p;
  }

  bool operator==(const PauliString& o) const {
    return n == o.n && letters == o.letters && sign == o.sign;
  }

  std::string to_string() const {
    std::string s = sign > 0 ? "+" : "-";
    for (auto l : letters) s += letter_char(l);
    return s;
  }
};

namespace detail {

// Product of single-qubit letters: a*b = i^phase * letter.
struct LetterProduct {
  PauliLetter letter;
  int phase;  // exponent of i, mod 4
};

inline LetterProduct letter_mul(PauliLetter a, PauliLetter b) {
  using L = PauliLetter;
  if (a == L::I) return {b, 0};
  if (b == L::I) return {a, 0};
  if (a == b) return {L::I, 0};
  // XY=iZ, YZ=iX, ZX=iY; reversed orders pick up -i.
  static constexpr int kNext[4] = {0, 2, 3, 1};  // X->Y->Z->X
  const int c = 1 + 2 + 3 - static_cast<int>(a) - static_cast<int>(b);
  const int phase = kNext[static_cast<int>(a)] == static_cast<int>(b) ? 1 : 3;
  return {static_cast<L>(c), phase};
}

}  // namespace detail

/// Word product tracking the power of i; exponent 0 or 2 for Hermitian results.
struct SignedWord {
  int n = 0;
  std::vector<PauliLetter> letters;
  int phase = 0;  // exponent of i, mod 4

  static SignedWord from(const PauliString& p) {
    return {p.n, p.letters, p.sign > 0 ? 0 : 2};
  }

  void mul(const SignedWord& o) {
    for (int k = 0; k < n; ++k) {
      auto pr = detail::letter_mul(letters[k], o.letters[k]);
      letters[k] = pr.letter;
      phase = (phase + pr.phase) % 4;
    }
    phase = (phase + o.phase) % 4;
  }

  PauliString to_pauli() const {
    if (phase != 0 && phase != 2)
      throw std::logic_error("SignedWord: non-Hermitian phase in Pauli word");
    return PauliString(n, letters, phase == 0 ? +1 : -1);
  }
};

inline bool commutes(const PauliString& a, const PauliString& b) {
  if (a.n != b.n) throw std::invalid_argument("commutes: qubit counts differ");
  int anti = 0;
  for (int k = 0; k < a.n; ++k) {
    auto la = a.letters[k], lb = b.letters[k];
    if (la != PauliLetter::I && lb != PauliLetter::I && la != lb) ++anti;
  }
  return anti % 2 == 0;
}

enum class GateName { H, S, CNOT };

struct Gate {
  GateName name;
  int q0 = 0;       // target for H/S, control for CNOT
  int q1 = -1;      // CNOT target
};

using Circuit = std::vector<Gate>;

/// Clifford gate as its conjugation action on the X_k and Z_k generators.
struct QubitTableau {
  int n = 0;
  std::vector<PauliString> image_of_x;
  std::vector<PauliString> image_of_z;

  static QubitTableau identity(int n) {
    QubitTableau t;
    t.n = n;
    for (int k = 0; k < n; ++k) {
      t.image_of_x.push_back(PauliString::single(n, k, PauliLetter::X));
      t.image_of_z.push_back(PauliString::single(n, k, PauliLetter::Z));
    }
    return t;
  }
};

/// Conjugate P by the tableau's Clifford gate: returns U P U^dagger.
inline PauliString tableau_apply(const QubitTableau& t, const PauliString& p) {
  if (p.n != t.n) throw std::invalid_argument("tableau_apply: qubit counts differ");
  SignedWord acc = SignedWord::from(PauliString::identity(t.n));
  acc.phase = p.sign > 0 ? 0 : 2;
  for (int k = 0; k < t.n; ++k) {
    switch (p.letters[k]) {
      case PauliLetter::I:
        break;
      case PauliLetter::X:
        acc.mul(SignedWord::from(t.image_of_x[k]));
        break;
      case PauliLetter::Z:
        acc.mul(SignedWord::from(t.image_of_z[k]));
        break;
      case PauliLetter::Y: {
        // Y = i X Z, so the image is i * image(X) * image(Z).
        acc.phase = (acc.phase + 1) % 4;
        acc.mul(SignedWord::from(t.image_of_x[k]));
        acc.mul(SignedWord::from(t.image_of_z[k]));
        break;
      }
    }
  }
  return acc.to_pauli();
}

namespace detail {

inline void check_gate(const Gate& g, int n) {
  if (g.q0 < 0 || g.q0 >= n) throw std::invalid_argument("circuit: gate index out of range");
  if (g.name == GateName::CNOT) {
    if (g.q1 < 0 || g.q1 >= n) throw std::invalid_argument("circuit: CNOT target out of range");
    if (g.q1 == g.q0) throw std::invalid_argument("circuit: CNOT control equals target");
  }
}

inline QubitTableau gate_tableau(const Gate& g, int n) {
  check_gate(g, n);
  QubitTableau t = QubitTableau::identity(n);
  switch (g.name) {
    case GateName::H:
      t.image_of_x[g.q0] = PauliString::single(n, g.q0, PauliLetter::Z);
      t.image_of_z[g.q0] = PauliString::single(n, g.q0, PauliLetter::X);
      break;
    case GateName::S:
      t.image_of_x[g.q0] = PauliString::single(n, g.q0, PauliLetter::Y);
      t.image_of_z[g.q0] = PauliString::single(n, g.q0, PauliLetter::Z);
      break;
    case GateName::CNOT: {
      const int c = g.q0, tg = g.q1;
      PauliString xx = PauliString::single(n, c, PauliLetter::X);
      xx.letters[tg] = PauliLetter::X;
      PauliString zz = PauliString::single(n, tg, PauliLetter::Z);
      zz.letters[c] = PauliLetter::Z;
      t.image_of_x[c] = xx;
      t.image_of_z[tg] = zz;
      break;
    }
  }
  return t;
}

}  // namespace detail

/// Composed conjugation action of a circuit (gates applied left to right).
inline QubitTableau tableau_from_circuit(int n, const Circuit& gates) {
  if (n < 1) throw std::invalid_argument("tableau_from_circuit: need at least one qubit");
  QubitTableau t = QubitTableau::identity(n);
  for (const Gate& g : gates) {
    QubitTableau gt = detail::gate_tableau(g, n);
    for (int k = 0; k < n; ++k) {
      t.image_of_x[k] = tableau_apply(gt, t.image_of_x[k]);
      t.image_of_z[k] = tableau_apply(gt, t.image_of_z[k]);
    }
  }
  return t;
}

/// Uniform random circuit over {H, S, CNOT}; deterministic for a fixed seed.
inline Circuit random_circuit(int n, int depth, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("random_circuit: need at least one qubit");
  if (depth < 0) throw std::invalid_argument("random_circuit: negative depth");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> gate_dist(0, n >= 2 ? 2 : 1);
  std::uniform_int_distribution<int> qubit_dist(0, n - 1);
  Circuit c;
  c.reserve(depth);
  for (int i = 0; i < depth; ++i) {
    const int which = gate_dist(rng);
    if (which == 0) {
      c.push_back({GateName::H, qubit_dist(rng)});
    } else if (which == 1) {
      c.push_back({GateName::S, qubit_dist(rng)});
    } else {
      int a = qubit_dist(rng), b = qubit_dist(rng);
      while (b == a) b = qubit_dist(rng);
      c.push_back({GateName::CNOT, a, b});
    }
  }
  return c;
}

inline QubitTableau random_clifford(int n, int depth, std::uint64_t seed) {
  return tableau_from_circuit(n, random_circuit(n, depth, seed));
}

/// Dense unitary of a circuit; qubit 0 is the most significant index.
/// Capped at n <= 4: nothing in this library needs more than 16x16 per side.
inline CMatrix tableau_to_unitary(int n, const Circuit& gates) {
  if (n < 1) throw std::invalid_argument("tableau_to_unitary: need at least one qubit");
  if (n > 4) throw std::domain_error("tableau_to_unitary: dense realization capped at 4 qubits");
  const long dim = 1L << n;
  auto embed_single = [&](const CMatrix& g, int q) {
    std::vector<CMatrix> factors;
    for (int k = 0; k < n; ++k)
      factors.push_back(k == q ? g : CMatrix::Identity(2, 2));
    return kron(factors);
  };
  const complex_t i1(0.0, 1.0);
  CMatrix h(2, 2), s(2, 2);
  h << 1, 1, 1, -1;
  h /= std::sqrt(2.0);
  s << 1, 0, 0, i1;

  CMatrix u = CMatrix::Identity(dim, dim);
  for (const Gate& g : gates) {
    detail::check_gate(g, n);
    CMatrix gm;
    if (g.name == GateName::H) {
      gm = embed_single(h, g.q0);
    } else if (g.name == GateName::S) {
      gm = embed_single(s, g.q0);
    } else {
      gm = CMatrix::Zero(dim, dim);
      for (long idx = 0; idx < dim; ++idx) {
        const long cbit = (idx >> (n - 1 - g.q0)) & 1;
        const long out = cbit ? idx ^ (1L << (n - 1 - g.q1)) : idx;
        gm(out, idx) = 1.0;
      }
    }
    u = gm * u;
  }
  return u;
}

/// Dense matrix of a signed Pauli word, consistent with tableau_to_unitary ordering.
inline CMatrix pauli_string_matrix(const PauliString& p) {
  const complex_t i1(0.0, 1.0);
  CMatrix x(2, 2), y(2, 2), z(2, 2), id = CMatrix::Identity(2, 2);
  x << 0, 1, 1, 0;
  y << 0, -i1, i1, 0;
  z << 1, 0, 0, -1;
  std::vector<CMatrix> factors;
  for (auto l : p.letters) {
    switch (l) {
      case PauliLetter::I: factors.push_back(id); break;
      case PauliLetter::X: factors.push_back(x); break;
      case PauliLetter::Y: factors.push_back(y); break;
      case PauliLetter::Z: factors.push_back(z); break;
    }
  }
  return static_cast<double>(p.sign) * kron(factors);
}

}  // namespace qkd

#endif  // QKDRATE_TABLEAU_HPP_
