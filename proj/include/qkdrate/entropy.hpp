/**
 * This code is part of qkdrate.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.
 */

#ifndef QKDRATE_ENTROPY_HPP_
#define QKDRATE_ENTROPY_HPP_

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "qkdrate/channels.hpp"
#include "qkdrate/matrix.hpp"

namespace qkd {

inline constexpr double kLn2 = 0.6931471805599453;

/// h(q) = -q log2 q - (1-q) log2 (1-q), with 0 log 0 = 0.
inline double binary_entropy(double q) {
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("binary_entropy: q out of [0,1]");
  double h = 0.0;
  if (q > 0.0) h -= q * std::log2(q);
  if (q < 1.0) h -= (1.0 - q) * std::log2(1.0 - q);
  return h;
}

/// Joint distribution over (key character, Bob outcome), outcomes ordered 0, 1, +, -.
struct JointDistribution {
  std::array<std::array<double, 4>, 2> p{};

  double sum() const {
    double s = 0.0;
    for (const auto& row : p)
      for (double v : row) s += v;
    return s;
  }

  void validate() const {
    for (const auto& row : p)
      for (double v : row)
        if (v < -kEqTol) throw std::invalid_argument("JointDistribution: negative entry");
    if (std::abs(sum() - 1.0) > kEqTol)
      throw std::invalid_argument("JointDistribution: entries must sum to 1");
  }
};

/// H(X|Y) in bits; columns with zero marginal contribute nothing.
inline double cond_shannon(const JointDistribution& dist) {
  double h = 0.0;
  for (int y = 0; y < 4; ++y) {
    const double py = dist.p[0][y] + dist.p[1][y];
    if (py <= 0.0) continue;
    for (int x = 0; x < 2; ++x) {
      const double pxy = dist.p[x][y];
      if (pxy <= 0.0) continue;
      h -= pxy * std::log2(pxy / py);
    }
  }
  return h;
}

namespace detail {

// Eigendecomposition with eigenvalues below the support threshold clipped to 0.
struct ClippedEig {
  Eigen::VectorXd values;
  CMatrix vectors;
};

inline ClippedEig clipped_eig(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  Eigen::VectorXd v = es.eigenvalues();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v(i) < kSupportTol) v(i) = 0.0;
  return {v, es.eigenvectors()};
}

}  // namespace detail

/// Von Neumann entropy -Tr[rho log2 rho] in bits.
inline double vn_entropy(const DensityMatrix& rho) {
  auto eig = detail::clipped_eig(rho.mat);
  double s = 0.0;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    const double v = eig.values(i);
    if (v > 0.0) s -= v * std::log2(v);
  }
  return s;
}

/// Relative entropy Tr[rho (log rho - log sigma)] in nats for PSD matrices of
/// any trace. Returns +infinity when supp(rho) is not contained in supp(sigma).
inline double rel_entropy_nats(const CMatrix& rho, const CMatrix& sigma) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols())
    throw std::invalid_argument("rel_entropy: dimension mismatch");
  auto er = detail::clipped_eig(rho);
  auto es = detail::clipped_eig(sigma);

  // Support check: rho must vanish on the kernel of sigma.
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    if (es.values(i) > 0.0) continue;
    const StateVector v = es.vectors.col(i);
    const double overlap = (v.adjoint() * rho * v)(0, 0).real();
    if (overlap > 1e-10) return std::numeric_limits<double>::infinity();
  }

  double tr_rho_log_rho = 0.0;
  for (Eigen::Index i = 0; i < er.values.size(); ++i)
    if (er.values(i) > 0.0) tr_rho_log_rho += er.values(i) * std::log(er.values(i));

  // log sigma on its support; the kernel never meets supp(rho) past this point.
  double tr_rho_log_sigma = 0.0;
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    if (es.values(i) <= 0.0) continue;
    const StateVector v = es.vectors.col(i);
    const double weight = (v.adjoint() * rho * v)(0, 0).real();
    tr_rho_log_sigma += weight * std::log(es.values(i));
  }
  double d = tr_rho_log_rho - tr_rho_log_sigma;
  if (d < 0.0 && d > -1e-9) d = 0.0;  // numerical drift near equality
  return d;
}

/// Relative entropy D(rho || sigma) in bits, or +infinity on support violation.
inline double rel_entropy(const DensityMatrix& rho, const DensityMatrix& sigma) {
  return rel_entropy_nats(rho.mat, sigma.mat) / kLn2;
}

/// Orthogonal projectors summing to the identity.
struct PinchingSpec {
  std::vector<CMatrix> projectors;

  explicit PinchingSpec(std::vector<CMatrix> projs) : projectors(std::move(projs)) {
    if (projectors.empty()) throw std::invalid_argument("PinchingSpec: no projectors");
    const long dim = projectors.front().rows();
    CMatrix sum = CMatrix::Zero(dim, dim);
    for (const auto& p : projectors) {
      if (p.rows() != dim || p.cols() != dim)
        throw std::invalid_argument("PinchingSpec: projector dimension mismatch");
      if (!is_hermitian(p) || !approx_equal(p * p, p, 1e-10))
        throw std::invalid_argument("PinchingSpec: not a Hermitian projector");
      sum += p;
    }
    if (!approx_equal(sum, CMatrix::Identity(dim, dim)))
      throw std::invalid_argument("PinchingSpec: projectors do not sum to identity");
    for (std::size_t i = 0; i < projectors.size(); ++i)
      for (std::size_t j = i + 1; j < projectors.size(); ++j)
        if (!approx_equal(projectors[i] * projectors[j], CMatrix::Zero(dim, dim), 1e-10))
          throw std::invalid_argument("PinchingSpec: projectors not mutually orthogonal");
  }

  long dim() const { return projectors.front().rows(); }
};

inline CMatrix pinch_matrix(const CMatrix& m, const PinchingSpec& spec) {
  if (m.rows() != spec.dim()) throw std::invalid_argument("pinch: dimension mismatch");
  CMatrix out = CMatrix::Zero(m.rows(), m.cols());
  for (const auto& p : spec.projectors) out += p * m * p;
  return out;
}

inline DensityMatrix pinch(const DensityMatrix& rho, const PinchingSpec& spec) {
  return DensityMatrix(pinch_matrix(rho.mat, spec));
}

}  // namespace qkd

#endif  // QKDRATE_ENTROPY_HPP_
