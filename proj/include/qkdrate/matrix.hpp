/**
 * This code is part of qkdrate.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.
 */

#ifndef QKDRATE_MATRIX_HPP_
#define QKDRATE_MATRIX_HPP_

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qkd {

using complex_t = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

// Default absolute tolerance for complex equality checks.
inline constexpr double kEqTol = 1e-12;

// Eigenvalues below this are treated as exact zeros for support decisions.
inline constexpr double kSupportTol = 1e-12;

// Allowed negative drift of the smallest eigenvalue of a PSD matrix.
inline constexpr double kPsdSlack = 1e-10;

inline CMatrix dagger(const CMatrix& m) { return m.adjoint(); }

inline bool is_hermitian(const CMatrix& m, double tol = kEqTol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

inline bool is_unitary(const CMatrix& m, double tol = kEqTol) {
  if (m.rows() != m.cols()) return false;
  CMatrix d = m * m.adjoint() - CMatrix::Identity(m.rows(), m.cols());
  return d.cwiseAbs().maxCoeff() <= tol;
}

inline bool approx_equal(const CMatrix& a, const CMatrix& b, double tol = kEqTol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return (a - b).cwiseAbs().maxCoeff() <= tol;
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline CMatrix kron(const std::vector<CMatrix>& factors) {
  if (factors.empty()) return CMatrix::Identity(1, 1);
  CMatrix out = factors.front();
  for (std::size_t i = 1; i < factors.size(); ++i) out = kron(out, factors[i]);
  return out;
}

inline CMatrix kron(std::initializer_list<CMatrix> factors) {
  return kron(std::vector<CMatrix>(factors));
}

inline StateVector kron_vec(const StateVector& a, const StateVector& b) {
  StateVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

/// Sorted real eigenvalues of a Hermitian matrix.
inline Eigen::VectorXd hermitian_eigenvalues(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double min_eigenvalue(const CMatrix& m) {
  return hermitian_eigenvalues(m).minCoeff();
}

/// Trace over a subset of tensor factors.
///
/// `dims` lists the dimension of each factor (leftmost factor is the most
/// significant index); `keep` lists the factor indices to retain, in their
/// original order. The trace of the output equals the trace of the input.
inline CMatrix partial_trace(const CMatrix& m, const std::vector<int>& dims,
                             const std::vector<int>& keep) {
  long total = 1;
  for (int d : dims) {
    if (d <= 0) throw std::invalid_argument("partial_trace: nonpositive factor dimension");
    total *= d;
  }
  if (total != m.rows() || total != m.cols())
    throw std::invalid_argument("partial_trace: factor dimensions do not match matrix size");
  const int n = static_cast<int>(dims.size());
  std::vector<bool> kept(n, false);
  for (int k : keep) {
    if (k < 0 || k >= n) throw std::invalid_argument("partial_trace: keep index out of range");
    kept[k] = true;
  }

  long keep_dim = 1, drop_dim = 1;
  for (int i = 0; i < n; ++i) (kept[i] ? keep_dim : drop_dim) *= dims[i];

  // Strides of each factor in the flat index.
  std::vector<long> stride(n, 1);
  for (int i = n - 2; i >= 0; --i) stride[i] = stride[i + 1] * dims[i + 1];

  std::vector<int> keep_idx, drop_idx;
  for (int i = 0; i < n; ++i) (kept[i] ? keep_idx : drop_idx).push_back(i);

  auto flat = [&](const std::vector<int>& sub_keep, const std::vector<int>& sub_drop) {
    long idx = 0;
    for (std::size_t i = 0; i < keep_idx.size(); ++i) idx += sub_keep[i] * stride[keep_idx[i]];
    for (std::size_t i = 0; i < drop_idx.size(); ++i) idx += sub_drop[i] * stride[drop_idx[i]];
    return idx;
  };

  auto next_sub = [&](std::vector<int>& sub, const std::vector<int>& which) {
    for (int i = static_cast<int>(which.size()) - 1; i >= 0; --i) {
      if (++sub[i] < dims[which[i]]) return true;
      sub[i] = 0;
    }
    return false;
  };

  CMatrix out = CMatrix::Zero(keep_dim, keep_dim);
  std::vector<int> row_keep(keep_idx.size(), 0);
  long r = 0;
  do {
    std::vector<int> col_keep(keep_idx.size(), 0);
    long c = 0;
    do {
      complex_t acc = 0.0;
      std::vector<int> sub_drop(drop_idx.size(), 0);
      do {
        acc += m(flat(row_keep, sub_drop), flat(col_keep, sub_drop));
      } while (next_sub(sub_drop, drop_idx));
      out(r, c) = acc;
      ++c;
    } while (next_sub(col_keep, keep_idx));
    ++r;
  } while (next_sub(row_keep, keep_idx));
  return out;
}

}  // namespace qkd

#endif  // QKDRATE_MATRIX_HPP_
