#ifndef QKDRATE_TESTS_TEST_HELPERS_HPP_
#define QKDRATE_TESTS_TEST_HELPERS_HPP_

#include <random>

#include "qkdrate/matrix.hpp"

namespace qkd::testing {

inline CMatrix random_complex(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  CMatrix m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = complex_t(dist(rng), dist(rng));
  return m;
}

inline CMatrix random_hermitian(int dim, std::mt19937_64& rng) {
  CMatrix g = random_complex(dim, rng);
  return (g + g.adjoint()) / 2.0;
}

inline CMatrix random_traceless_hermitian(int dim, std::mt19937_64& rng) {
  CMatrix h = random_hermitian(dim, rng);
  h -= (h.trace() / static_cast<double>(dim)) * CMatrix::Identity(dim, dim);
  return h;
}

/// Full-rank random density matrix (Wishart, normalized).
inline CMatrix random_density(int dim, std::mt19937_64& rng) {
  CMatrix g = random_complex(dim, rng);
  CMatrix w = g * g.adjoint();
  return w / w.trace().real();
}

/// Random density matrix with smallest eigenvalue at least `floor`.
inline CMatrix random_density_pd(int dim, std::mt19937_64& rng, double floor) {
  CMatrix w = random_density(dim, rng);
  CMatrix mixed = (1.0 - dim * floor) * w + floor * CMatrix::Identity(dim, dim);
  return mixed / mixed.trace().real();
}

}  // namespace qkd::testing

#endif  // QKDRATE_TESTS_TEST_HELPERS_HPP_
