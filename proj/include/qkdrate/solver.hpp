/**
 * This code is part of qkdrate.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.
 */

#ifndef QKDRATE_SOLVER_HPP_
#define QKDRATE_SOLVER_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qkdrate/matrix.hpp"
#include "qkdrate/protocol.hpp"

namespace qkd {

struct infeasible_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverOptions {
  double mu_initial = 1.0;
  double mu_final = 1e-8;
  double mu_shrink = 0.1;
  double stage_grad_tol = 1e-2;  // per-stage target: ||grad|| <= stage_grad_tol * mu
  // Absolute gradient-norm floor (nats): below this the objective can no
  // longer resolve decreases in double precision. The certificate's factor-2
  // centering slack absorbs the residual.
  double grad_tol_floor = 1e-7;
  int max_iterations = 2000;     // per stage
  std::uint64_t seed = 0;

  double stage_tol(double mu) const { return std::max(stage_grad_tol * mu, grad_tol_floor); }

  void validate() const {
    if (!(mu_final < mu_initial)) throw std::invalid_argument("SolverOptions: mu_final >= mu_initial");
    if (!(mu_shrink > 0.0 && mu_shrink < 1.0))
      throw std::invalid_argument("SolverOptions: mu_shrink out of (0,1)");
  }
};

/// Every feasible Hermitian matrix is rho0 + sum_i x_i basis[i].
struct FeasibleAffine {
  CMatrix rho0;
  std::vector<CMatrix> basis;  // orthonormal traceless Hermitian directions
};

namespace detail {

/// Orthonormal Hermitian basis of 4x4 space: (P_k (x) P_j)/2, k major.
inline const std::vector<CMatrix>& pauli_pair_basis() {
  static const std::vector<CMatrix> basis = [] {
    std::vector<CMatrix> out;
    for (int k = 0; k < 4; ++k)
      for (int j = 0; j < 4; ++j) {
        CMatrix pk = pauli_string_matrix(PauliString(1, {static_cast<PauliLetter>(k)}));
        CMatrix pj = pauli_string_matrix(PauliString(1, {static_cast<PauliLetter>(j)}));
        out.push_back(kron(pk, pj) / 2.0);
      }
    return out;
  }();
  return basis;
}

inline Eigen::VectorXd coords_of(const CMatrix& m) {
  const auto& basis = pauli_pair_basis();
  Eigen::VectorXd t(16);
  for (int a = 0; a < 16; ++a) t(a) = (m * basis[a]).trace().real();
  return t;
}

inline CMatrix matrix_of(const Eigen::VectorXd& t) {
  const auto& basis = pauli_pair_basis();
  CMatrix m = CMatrix::Zero(4, 4);
  for (int a = 0; a < 16; ++a) m += t(a) * basis[a];
  return m;
}

struct AffineSystem {
  Eigen::MatrixXd a;             // functional rows in orthonormal coordinates
  Eigen::VectorXd g;             // right-hand sides
  std::vector<std::string> labels;
};

/// Min-norm particular solution plus orthonormal null-space basis, with
/// rank detection at relative singular-value threshold 1e-10.
struct AffineSolution {
  Eigen::VectorXd particular;
  Eigen::MatrixXd null_basis;    // columns span the null space
};

inline AffineSolution solve_affine(const AffineSystem& sys, double residual_tol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = 1e-10 * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++rank;

  Eigen::VectorXd ug = svd.matrixU().transpose() * sys.g;
  Eigen::VectorXd coeff = Eigen::VectorXd::Zero(sys.a.cols());
  for (int i = 0; i < rank; ++i) coeff(i) = ug(i) / sv(i);
  Eigen::VectorXd particular = svd.matrixV() * coeff;

  Eigen::VectorXd residual = sys.a * particular - sys.g;
  Eigen::Index worst;
  const double worst_abs = residual.cwiseAbs().maxCoeff(&worst);
  if (worst_abs > residual_tol)
    throw infeasible_error("inconsistent constraint system, worst residual " +
                           std::to_string(worst_abs) + " at " + sys.labels.at(worst));

  Eigen::MatrixXd null_basis = svd.matrixV().rightCols(sys.a.cols() - rank);
  return {particular, null_basis};
}

}  // namespace detail

/// Affine parameterization of the constraint-consistent Hermitian matrices.
/// Throws infeasible_error (naming the worst constraint) when inconsistent.
inline FeasibleAffine build_feasible_affine(const ConstraintSet& cs) {
  detail::AffineSystem sys;
  const int m = 1 + static_cast<int>(cs.equalities.size());
  sys.a.resize(m, 16);
  sys.g.resize(m);
  sys.labels.push_back("trace");
  sys.a.row(0).setZero();
  sys.a(0, 0) = 2.0;  // Tr[rho] = 2 * t_II
  sys.g(0) = 1.0;
  for (int r = 0; r < m - 1; ++r) {
    const Constraint& c = cs.equalities[r];
    if (!is_hermitian(c.observable, 1e-10))
      throw std::invalid_argument("build_feasible_affine: observable not Hermitian: " + c.label);
    sys.a.row(r + 1) = detail::coords_of(c.observable).transpose();
    sys.g(r + 1) = c.value;
    sys.labels.push_back(c.label);
  }
  auto sol = detail::solve_affine(sys, 1e-6);
  FeasibleAffine out;
  out.rho0 = detail::matrix_of(sol.particular);
  for (Eigen::Index i = 0; i < sol.null_basis.cols(); ++i)
    out.basis.push_back(detail::matrix_of(sol.null_basis.col(i)));
  return out;
}

namespace detail {

// ---------------------------------------------------------------------------
// BFGS minimizer with a strict-feasibility step cap.
// ---------------------------------------------------------------------------

struct BfgsCallbacks {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  // Largest step along d keeping the iterate strictly feasible (may be inf).
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> max_step;
};

struct BfgsOutcome {
  Eigen::VectorXd x;
  int iterations = 0;
  bool reached_tol = false;
};

/// Quasi-Newton stage minimizer. A stage counts as centered when either the
/// gradient norm drops below grad_tol or the estimated Newton decrement
/// sqrt(g' H g) drops below decrement_tol; the decrement is the
/// affine-invariant measure and stays meaningful on very thin feasible sets
/// where the raw gradient cannot vanish in double precision.
inline BfgsOutcome bfgs_minimize(const BfgsCallbacks& cb, Eigen::VectorXd x, double grad_tol,
                                 double decrement_tol, int max_iterations) {
  const int n = static_cast<int>(x.size());
  BfgsOutcome out;
  if (n == 0) {  // fully pinned problem
    out.x = x;
    out.reached_tol = true;
    return out;
  }
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g = cb.gradient(x);
  bool scaled = false;
  int updates = 0;
  bool decrement_ok = false;
  // Exhausting double precision is also a valid stage exit: once steepest
  // descent cannot produce a resolvable decrease, the iterate is optimal to
  // machine resolution, which is far tighter than the barrier certificate.
  bool resolution_limited = false;
  double best_f = std::numeric_limits<double>::infinity();
  int stalled = 0;
  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    if (g.norm() <= grad_tol) break;
    // Trust the decrement only once the inverse Hessian has seen curvature.
    if (updates >= 3) {
      const double dec_sq = g.dot(h * g);
      if (dec_sq >= 0.0 && std::sqrt(dec_sq) <= decrement_tol) {
        decrement_ok = true;
        break;
      }
    }
    Eigen::VectorXd d = -h * g;
    double gd = g.dot(d);
    if (!(gd < 0.0)) {  // lost positive definiteness, reset
      h.setIdentity();
      scaled = false;
      updates = 0;
      d = -g;
      gd = g.dot(d);
    }

    const double cap = cb.max_step(x, d);
    double t = std::min(1.0, 0.95 * cap);
    const double f0 = cb.value(x);
    bool accepted = false;
    while (t > 1e-18) {
      const double ft = cb.value(x + t * d);
      if (std::isfinite(ft) && ft <= f0 + 1e-4 * t * gd) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if ((h - Eigen::MatrixXd::Identity(n, n)).norm() > 0.0) {
        h.setIdentity();  // retry the stage steepest-descent before giving up
        scaled = false;
        updates = 0;
        continue;
      }
      resolution_limited = true;
      break;
    }

    // Progress in f is below what doubles can resolve: further iterations
    // only chase rounding noise.
    if (f0 < best_f - 1e-15 * (1.0 + std::abs(f0))) {
      best_f = f0;
      stalled = 0;
    } else if (++stalled >= 30) {
      resolution_limited = true;
      break;
    }

    const Eigen::VectorXd s = t * d;
    x += s;
    Eigen::VectorXd g_new = cb.gradient(x);
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        h = (sy / y.dot(y)) * Eigen::MatrixXd::Identity(n, n);
        scaled = true;
      }
      const Eigen::VectorXd hy = h * y;
      const double yhy = y.dot(hy);
      h += ((sy + yhy) / (sy * sy)) * (s * s.transpose());
      h -= (hy * s.transpose() + s * hy.transpose()) / sy;
      ++updates;
    }
    g = std::move(g_new);
  }
  if (!decrement_ok && updates >= 3) {
    const double dec_sq = g.dot(h * g);
    decrement_ok = dec_sq >= 0.0 && std::sqrt(dec_sq) <= decrement_tol;
  }
  out.reached_tol = decrement_ok || resolution_limited || g.norm() <= grad_tol;
  out.x = std::move(x);
  out.iterations = iter;
  return out;
}

// ---------------------------------------------------------------------------
// Phase I: subgradient ascent on the interiority margin.
// ---------------------------------------------------------------------------

struct PhaseOneProblem {
  // margin(x) = min(lambda_min(rho(x)), linear slacks); concave in x.
  std::function<double(const Eigen::VectorXd&)> margin;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> subgradient;
};

inline std::pair<Eigen::VectorXd, double> subgradient_ascent(const PhaseOneProblem& prob,
                                                             Eigen::VectorXd x, int max_iter) {
  if (x.size() == 0) return {x, prob.margin(x)};
  Eigen::VectorXd best_x = x;
  double best = prob.margin(x);
  for (int k = 0; k < max_iter; ++k) {
    if (best >= 1e-3) break;  // comfortably interior
    Eigen::VectorXd sg = prob.subgradient(x);
    const double norm = sg.norm();
    if (norm < 1e-15) break;
    x += (0.05 / std::sqrt(k + 1.0)) * sg / norm;
    const double val = prob.margin(x);
    if (val > best) {
      best = val;
      best_x = x;
    }
  }
  return {best_x, best};
}

/// Largest t with m + t*delta still positive definite (0.0 if m is not PD).
inline double psd_max_step(const CMatrix& m, const CMatrix& delta) {
  Eigen::LLT<CMatrix> llt(m);
  if (llt.info() != Eigen::Success) return 0.0;
  const CMatrix l = llt.matrixL();
  CMatrix w = l.triangularView<Eigen::Lower>().solve(delta);
  w = l.triangularView<Eigen::Lower>().solve(w.adjoint()).adjoint();
  const double nu_min = hermitian_eigenvalues((w + w.adjoint()) / 2.0).minCoeff();
  if (nu_min >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / nu_min;
}

/// ln det of a PD Hermitian matrix, -inf if not PD.
inline double log_det_pd(const CMatrix& m) {
  Eigen::VectorXd ev = hermitian_eigenvalues(m);
  if (ev.minCoeff() <= 0.0) return -std::numeric_limits<double>::infinity();
  return ev.array().log().sum();
}

/// Objective in nats at a strictly positive iterate (fast path: eigenvalues
/// of rho and of its two pinchings).
inline double objective_nats_interior(const CMatrix& rho, double p) {
  auto entropy_term = [](const CMatrix& m) {
    Eigen::VectorXd ev = hermitian_eigenvalues(m);
    double s = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (ev(i) <= 0.0) return std::numeric_limits<double>::infinity();
      s += ev(i) * std::log(ev(i));
    }
    return -s;  // von Neumann entropy in nats
  };
  const double s_rho = entropy_term(rho);
  const double s_z = entropy_term(pinch_matrix(rho, pinch_alice_z()));
  const double s_x = entropy_term(pinch_matrix(rho, pinch_alice_x()));
  if (!std::isfinite(s_rho) || !std::isfinite(s_z) || !std::isfinite(s_x))
    return std::numeric_limits<double>::infinity();
  const double p2 = p * p, q2 = (1.0 - p) * (1.0 - p);
  return p2 * (s_z - s_rho) + q2 * (s_x - s_rho);
}

/// Gradient matrix in nats of the barrier objective f - mu ln det.
inline CMatrix barrier_gradient_matrix(const CMatrix& rho, double p, double mu) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::domain_error("barrier gradient at a non-interior point");
  Eigen::VectorXd logs = es.eigenvalues().array().log();
  Eigen::VectorXd invs = es.eigenvalues().array().inverse();
  const CMatrix log_rho = es.eigenvectors() * logs.asDiagonal() * es.eigenvectors().adjoint();
  const CMatrix rho_inv = es.eigenvectors() * invs.asDiagonal() * es.eigenvectors().adjoint();
  const CMatrix log_z = logm_pd(pinch_matrix(rho, pinch_alice_z()));
  const CMatrix log_x = logm_pd(pinch_matrix(rho, pinch_alice_x()));
  const double p2 = p * p, q2 = (1.0 - p) * (1.0 - p);
  return p2 * (log_rho - log_z) + q2 * (log_rho - log_x) - mu * rho_inv;
}

inline std::vector<double> mu_schedule(const SolverOptions& opts) {
  std::vector<double> mus;
  double mu = opts.mu_initial;
  while (mu > opts.mu_final * (1.0 + 1e-12)) {
    mus.push_back(mu);
    mu *= opts.mu_shrink;
  }
  mus.push_back(opts.mu_final);
  return mus;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Unrestricted solve
// ---------------------------------------------------------------------------

namespace detail {

struct UnrestrictedSetup {
  FeasibleAffine affine;
  Eigen::VectorXd x0;
  double perturbation = 0.0;
};

inline ConstraintSet perturb_toward(const ConstraintSet& cs, const CMatrix& target, double delta) {
  ConstraintSet out = cs;
  for (auto& c : out.equalities) {
    const double target_value = (target * c.observable).trace().real();
    c.value = (1.0 - delta) * c.value + delta * target_value;
  }
  if (out.reference_state)
    out.reference_state = (1.0 - delta) * (*out.reference_state) + delta * target;
  return out;
}

inline std::pair<Eigen::VectorXd, double> phase_one_affine(const FeasibleAffine& affine,
                                                           const ConstraintSet& cs,
                                                           double threshold) {
  const int n = static_cast<int>(affine.basis.size());
  auto state_of = [&](const Eigen::VectorXd& x) {
    CMatrix rho = affine.rho0;
    for (int i = 0; i < n; ++i) rho += x(i) * affine.basis[i];
    return rho;
  };
  auto coords_in_basis = [&](const CMatrix& m) {
    const CMatrix diff = m - affine.rho0;
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = (diff * affine.basis[i]).trace().real();
    return x;
  };

  // Fast path: the simulated state satisfies the constraints by construction.
  if (cs.reference_state) {
    const Eigen::VectorXd x = coords_in_basis(*cs.reference_state);
    const CMatrix rho = state_of(x);
    if (approx_equal(rho, *cs.reference_state, 1e-8)) {
      const double margin = min_eigenvalue(rho);
      if (margin > threshold) return {x, margin};
    }
  }

  PhaseOneProblem prob;
  prob.margin = [&](const Eigen::VectorXd& x) { return min_eigenvalue(state_of(x)); };
  prob.subgradient = [&](const Eigen::VectorXd& x) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(state_of(x));
    StateVector v = es.eigenvectors().col(0);
    Eigen::VectorXd sg(n);
    for (int i = 0; i < n; ++i) sg(i) = (v.adjoint() * affine.basis[i] * v)(0, 0).real();
    return sg;
  };
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
  if (cs.reference_state) x0 = coords_in_basis(*cs.reference_state);
  return subgradient_ascent(prob, x0, 4000);
}

inline UnrestrictedSetup prepare_unrestricted(const ConstraintSet& cs) {
  UnrestrictedSetup setup;
  setup.affine = build_feasible_affine(cs);
  auto [x, margin] = phase_one_affine(setup.affine, cs, 1e-9);
  if (margin <= 1e-9) {
    // Boundary statistics: nudge every target toward the maximally mixed state.
    const double delta = 1e-8;
    ConstraintSet perturbed = perturb_toward(cs, CMatrix::Identity(4, 4) / 4.0, delta);
    setup.affine = build_feasible_affine(perturbed);
    auto [xp, margin_p] = phase_one_affine(setup.affine, perturbed, 1e-11);
    if (margin_p <= 1e-11)
      throw infeasible_error("phase I failed: no strictly feasible state found");
    setup.x0 = xp;
    setup.perturbation = delta;
  } else {
    setup.x0 = x;
  }
  return setup;
}

}  // namespace detail

/// Barrier central-path minimization of the reduced objective over the
/// constraint-consistent density matrices.
inline std::pair<DensityMatrix, KeyRateResult> solve_unrestricted(const ConstraintSet& cs,
                                                                  double p,
                                                                  const SolverOptions& opts = {}) {
  opts.validate();
  if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("solve_unrestricted: p out of (0,1)");
  detail::UnrestrictedSetup setup = detail::prepare_unrestricted(cs);
  const int n = static_cast<int>(setup.affine.basis.size());

  auto state_of = [&](const Eigen::VectorXd& x) {
    CMatrix rho = setup.affine.rho0;
    for (int i = 0; i < n; ++i) rho += x(i) * setup.affine.basis[i];
    return rho;
  };
  auto delta_of = [&](const Eigen::VectorXd& d) {
    CMatrix m = CMatrix::Zero(4, 4);
    for (int i = 0; i < n; ++i) m += d(i) * setup.affine.basis[i];
    return m;
  };

  Eigen::VectorXd x = setup.x0;
  int total_iterations = 0;
  bool converged = true;
  double previous_f = std::numeric_limits<double>::infinity();
  double previous_mu = opts.mu_initial;
  double mu_used = opts.mu_initial;

  for (double mu : detail::mu_schedule(opts)) {
    mu_used = mu;
    detail::BfgsCallbacks cb;
    cb.value = [&, mu](const Eigen::VectorXd& xv) {
      const CMatrix rho = state_of(xv);
      const double ld = detail::log_det_pd(rho);
      if (!std::isfinite(ld)) return std::numeric_limits<double>::infinity();
      return detail::objective_nats_interior(rho, p) - mu * ld;
    };
    cb.gradient = [&, mu](const Eigen::VectorXd& xv) {
      const CMatrix m = detail::barrier_gradient_matrix(state_of(xv), p, mu);
      Eigen::VectorXd g(n);
      for (int i = 0; i < n; ++i) g(i) = (m * setup.affine.basis[i]).trace().real();
      return g;
    };
    cb.max_step = [&](const Eigen::VectorXd& xv, const Eigen::VectorXd& d) {
      return detail::psd_max_step(state_of(xv), delta_of(d));
    };
    auto outcome = detail::bfgs_minimize(cb, x, opts.stage_tol(mu), 0.1 * std::sqrt(mu),
                                         opts.max_iterations);
    x = outcome.x;
    total_iterations += outcome.iterations;
    if (!outcome.reached_tol) converged = false;

    const double f_now = detail::objective_nats_interior(state_of(x), p) / kLn2;
    // Refinement must not drift upward beyond the coarser stage's own
    // centering allowance (proportional to its barrier weight).
    if (f_now > previous_f + 1e-9 + previous_mu / kLn2) converged = false;
    previous_f = f_now;
    previous_mu = mu;
  }

  const CMatrix rho_star = state_of(x);
  KeyRateResult res;
  res.r = detail::objective_nats_interior(rho_star, p) / kLn2;
  res.leak = cs.sim_leak;
  res.p_pass = p * p + (1.0 - p) * (1.0 - p);
  res.keyrate_raw = res.r - res.p_pass * res.leak;
  res.keyrate = std::max(0.0, res.keyrate_raw);
  res.nu = 4.0;
  res.mu_final = mu_used;
  res.gap = 2.0 * mu_used * res.nu / kLn2;
  res.certificate_lb = res.r - res.gap;
  res.iterations = total_iterations;
  res.converged = converged;
  res.perturbation = setup.perturbation;
  return {DensityMatrix(rho_star), res};
}

// ---------------------------------------------------------------------------
// Clifford-random-channel restricted solve
// ---------------------------------------------------------------------------

/// Pauli correlations T(k, j) = <P_k (x) P_j> of the initial state.
struct InitialCorrelations {
  Eigen::Matrix4d t;

  static InitialCorrelations of(double b) {
    const StateVector psi = initial_state(b);
    InitialCorrelations out;
    for (int k = 0; k < 4; ++k)
      for (int j = 0; j < 4; ++j) {
        CMatrix pk = pauli_string_matrix(PauliString(1, {static_cast<PauliLetter>(k)}));
        CMatrix pj = pauli_string_matrix(PauliString(1, {static_cast<PauliLetter>(j)}));
        out.t(k, j) = (psi.adjoint() * kron(pk, pj) * psi)(0, 0).real();
      }
    return out;
  }
};

/// The 18 mixture coefficients of a Clifford-random channel. Row j indexes
/// the conjugated B-side Pauli (X, Y, Z); columns index the signed image
/// class, ordered +X, +Y, +Z, -X, -Y, -Z.
struct RestrictedParams {
  Eigen::Matrix<double, 3, 6> c = Eigen::Matrix<double, 3, 6>::Zero();

  void validate(CliffSumMode mode) const {
    if (c.minCoeff() < -kEqTol || c.maxCoeff() > 1.0 + kEqTol)
      throw std::invalid_argument("RestrictedParams: entries out of [0,1]");
    for (int j = 0; j < 3; ++j) {
      const double row = c.row(j).sum();
      if (mode == CliffSumMode::Eq3 ? std::abs(row - 1.0) > 1e-9 : row > 1.0 + 1e-9)
        throw std::invalid_argument("RestrictedParams: row normalization violated");
    }
    if (c.sum() > 3.0 + 1e-9)
      throw std::invalid_argument("RestrictedParams: total normalization violated");
  }

  /// Exact mixture realizing the depolarizing channel with probability eps:
  /// conjugations by I, X, Y, Z with weights 1-3eps/4, eps/4, eps/4, eps/4.
  static RestrictedParams depolarizing(double eps) {
    RestrictedParams out;
    const double w_pauli = eps / 4.0;
    const double w_id = 1.0 - 3.0 * w_pauli;
    for (int j = 0; j < 3; ++j) {
      out.c(j, j) = w_id + w_pauli;       // identity and the commuting Pauli
      out.c(j, 3 + j) = 2.0 * w_pauli;    // the two anticommuting Paulis
    }
    return out;
  }

  /// Strictly interior mixture with the same output state as depolarizing(eps):
  /// paired +a/-a mass cancels in every correlation, so statistics are
  /// untouched while all 18 coefficients (and, for le3, the row slacks)
  /// become positive. Degenerates to the boundary at eps = 0.
  static RestrictedParams depolarizing_interior(double eps, CliffSumMode mode) {
    RestrictedParams out = depolarizing(eps);
    const double eta = mode == CliffSumMode::Le3 ? eps / 8.0 : 0.0;
    const double zeta = mode == CliffSumMode::Le3 ? eps / 64.0 : eps / 16.0;
    const double diag_shift = mode == CliffSumMode::Le3 ? eta : 2.0 * zeta;
    for (int j = 0; j < 3; ++j) {
      out.c(j, j) -= diag_shift;
      out.c(j, 3 + j) -= diag_shift;
      for (int a = 0; a < 3; ++a) {
        if (a == j) continue;
        out.c(j, a) += zeta;
        out.c(j, 3 + a) += zeta;
      }
    }
    return out;
  }

  /// Uniform rows; realizes complete depolarization of the B side.
  static RestrictedParams center() {
    RestrictedParams out;
    out.c.setConstant(1.0 / 6.0);
    return out;
  }

  /// Same output state as center(), with slack row sums (5/6 per row).
  static RestrictedParams center_slack() {
    RestrictedParams out;
    out.c.setConstant(5.0 / 36.0);
    return out;
  }
};

/// Assemble the two-qubit state of a Clifford-random channel attack in the
/// Pauli basis. Hermitian with unit trace by construction; positivity is
/// deliberately not checked here.
inline CMatrix restricted_state(const RestrictedParams& params, double b) {
  const InitialCorrelations init = InitialCorrelations::of(b);
  Eigen::Matrix4d t = Eigen::Matrix4d::Zero();
  for (int k = 0; k < 4; ++k) t(k, 0) = init.t(k, 0);  // B-identity column is untouched
  for (int k = 0; k < 4; ++k)
    for (int j = 1; j < 4; ++j)
      for (int a = 1; a < 4; ++a)
        t(k, j) += (params.c(j - 1, a - 1) - params.c(j - 1, 3 + a - 1)) * init.t(k, a);

  const auto& basis = detail::pauli_pair_basis();  // (P_k (x) P_j)/2
  CMatrix rho = CMatrix::Zero(4, 4);
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 4; ++j) rho += 0.5 * t(k, j) * basis[4 * k + j];
  return rho;
}

struct RestrictedSolveOutput {
  RestrictedParams c_star;
  DensityMatrix rho_star;
  KeyRateResult result;
};

namespace detail {

struct RestrictedSetup {
  Eigen::Matrix<double, 18, 1> c0;
  Eigen::MatrixXd null_basis;  // 18 x m
  std::vector<CMatrix> rho_dirs;  // d rho / d y_i
  CMatrix rho_base;               // rho at C(y) corresponding to c0
  Eigen::VectorXd y0;
  double perturbation = 0.0;
};

inline Eigen::Matrix<double, 18, 1> flatten(const RestrictedParams& p) {
  Eigen::Matrix<double, 18, 1> v;
  for (int j = 0; j < 3; ++j)
    for (int col = 0; col < 6; ++col) v(6 * j + col) = p.c(j, col);
  return v;
}

inline RestrictedParams unflatten(const Eigen::Matrix<double, 18, 1>& v) {
  RestrictedParams p;
  for (int j = 0; j < 3; ++j)
    for (int col = 0; col < 6; ++col) p.c(j, col) = v(6 * j + col);
  return p;
}

/// Constant matrices: restricted_state is rho_fixed(b) + sum_q c_q * dirs[q].
struct RestrictedAssembly {
  CMatrix rho_fixed;
  std::vector<CMatrix> dirs;  // 18 entries, index 6*j + col
};

inline RestrictedAssembly restricted_assembly(double b) {
  const InitialCorrelations init = InitialCorrelations::of(b);
  const auto& basis = pauli_pair_basis();
  RestrictedAssembly out;
  out.rho_fixed = CMatrix::Zero(4, 4);
  for (int k = 0; k < 4; ++k) out.rho_fixed += 0.5 * init.t(k, 0) * basis[4 * k + 0];
  out.dirs.resize(18, CMatrix::Zero(4, 4));
  for (int j = 1; j < 4; ++j)
    for (int a = 1; a < 4; ++a) {
      CMatrix dir = CMatrix::Zero(4, 4);
      for (int k = 0; k < 4; ++k) dir += 0.5 * init.t(k, a) * basis[4 * k + j];
      out.dirs[6 * (j - 1) + (a - 1)] = dir;         // +a column
      out.dirs[6 * (j - 1) + (3 + a - 1)] = -dir;    // -a column
    }
  return out;
}

struct RestrictedSlacks {
  // Linear slack functionals s(c) = offset + coeffs . c, required positive.
  std::vector<Eigen::Matrix<double, 18, 1>> coeffs;
  std::vector<double> offsets;

  int count() const { return static_cast<int>(coeffs.size()); }
  double value(int i, const Eigen::Matrix<double, 18, 1>& c) const {
    return offsets[i] + coeffs[i].dot(c);
  }
};

inline RestrictedSlacks restricted_slacks(CliffSumMode mode) {
  RestrictedSlacks s;
  for (int q = 0; q < 18; ++q) {  // nonnegativity of each coefficient
    Eigen::Matrix<double, 18, 1> v = Eigen::Matrix<double, 18, 1>::Zero();
    v(q) = 1.0;
    s.coeffs.push_back(v);
    s.offsets.push_back(0.0);
  }
  if (mode == CliffSumMode::Le3) {
    for (int j = 0; j < 3; ++j) {  // 1 - row sum
      Eigen::Matrix<double, 18, 1> v = Eigen::Matrix<double, 18, 1>::Zero();
      for (int col = 0; col < 6; ++col) v(6 * j + col) = -1.0;
      s.coeffs.push_back(v);
      s.offsets.push_back(1.0);
    }
    Eigen::Matrix<double, 18, 1> v = Eigen::Matrix<double, 18, 1>::Constant(-1.0);
    s.coeffs.push_back(v);  // 3 - total sum
    s.offsets.push_back(3.0);
  }
  return s;
}

inline RestrictedSetup prepare_restricted(const ConstraintSet& cs, double b, CliffSumMode mode,
                                          const RestrictedAssembly& assembly,
                                          const RestrictedSlacks& slacks, double perturbation,
                                          const ConstraintSet& original_cs) {
  // Statistics equalities (affine in c), plus row-sum equalities in eq3 mode.
  const int n_stats = static_cast<int>(cs.equalities.size());
  const int n_rows = mode == CliffSumMode::Eq3 ? 3 : 0;
  AffineSystem sys;
  sys.a.resize(n_stats + n_rows, 18);
  sys.g.resize(n_stats + n_rows);
  for (int r = 0; r < n_stats; ++r) {
    const Constraint& c = cs.equalities[r];
    for (int q = 0; q < 18; ++q)
      sys.a(r, q) = (assembly.dirs[q] * c.observable).trace().real();
    sys.g(r) = c.value - (assembly.rho_fixed * c.observable).trace().real();
    sys.labels.push_back(c.label);
  }
  for (int j = 0; j < n_rows; ++j) {
    for (int q = 0; q < 18; ++q) sys.a(n_stats + j, q) = (q / 6 == j) ? 1.0 : 0.0;
    sys.g(n_stats + j) = 1.0;
    sys.labels.push_back("row_sum_" + std::string(1, "xyz"[j]));
  }
  AffineSolution sol = solve_affine(sys, 1e-6);

  RestrictedSetup setup;
  setup.c0 = sol.particular;
  setup.null_basis = sol.null_basis;
  setup.perturbation = perturbation;
  const int m = static_cast<int>(sol.null_basis.cols());
  setup.rho_base = assembly.rho_fixed;
  for (int q = 0; q < 18; ++q) setup.rho_base += setup.c0(q) * assembly.dirs[q];
  for (int i = 0; i < m; ++i) {
    CMatrix dir = CMatrix::Zero(4, 4);
    for (int q = 0; q < 18; ++q) dir += sol.null_basis(q, i) * assembly.dirs[q];
    setup.rho_dirs.push_back(dir);
  }

  auto c_of = [&](const Eigen::VectorXd& y) {
    Eigen::Matrix<double, 18, 1> c = setup.c0;
    c += setup.null_basis * y;
    return c;
  };
  auto rho_of = [&](const Eigen::VectorXd& y) {
    CMatrix rho = setup.rho_base;
    for (int i = 0; i < m; ++i) rho += y(i) * setup.rho_dirs[i];
    return rho;
  };
  auto margin_of = [&](const Eigen::VectorXd& y) {
    const Eigen::Matrix<double, 18, 1> c = c_of(y);
    double margin = min_eigenvalue(rho_of(y));
    for (int i = 0; i < slacks.count(); ++i) margin = std::min(margin, slacks.value(i, c));
    return margin;
  };
  auto project = [&](const RestrictedParams& params) {
    return Eigen::VectorXd(setup.null_basis.transpose() * (flatten(params) - setup.c0));
  };
  auto matches = [&](const Eigen::VectorXd& y, const RestrictedParams& params) {
    return (c_of(y) - flatten(params)).cwiseAbs().maxCoeff() <= 1e-8;
  };

  const double threshold = perturbation > 0.0 ? 1e-11 : 1e-9;

  // Fast path: an interior mixture reproducing the simulated statistics is
  // known in closed form for the depolarizing channel.
  Eigen::VectorXd y0 = Eigen::VectorXd::Zero(m);
  if (cs.config) {
    RestrictedParams hint;
    if (perturbation > 0.0) {
      const RestrictedParams mix = RestrictedParams::depolarizing(cs.config->eps);
      const RestrictedParams toward = mode == CliffSumMode::Eq3
                                          ? RestrictedParams::center()
                                          : RestrictedParams::center_slack();
      hint.c = (1.0 - perturbation) * mix.c + perturbation * toward.c;
    } else {
      hint = RestrictedParams::depolarizing_interior(cs.config->eps, mode);
    }
    y0 = project(hint);
    if (matches(y0, hint)) {
      const double margin = margin_of(y0);
      if (margin > threshold) {
        setup.y0 = y0;
        return setup;
      }
    }
  }

  PhaseOneProblem prob;
  prob.margin = margin_of;
  prob.subgradient = [&](const Eigen::VectorXd& y) {
    const Eigen::Matrix<double, 18, 1> c = c_of(y);
    const CMatrix rho = rho_of(y);
    const double lam = min_eigenvalue(rho);
    int active = -1;
    double active_val = lam;
    for (int i = 0; i < slacks.count(); ++i) {
      const double v = slacks.value(i, c);
      if (v < active_val) {
        active_val = v;
        active = i;
      }
    }
    Eigen::VectorXd sg(m);
    if (active < 0) {
      Eigen::SelfAdjointEigenSolver<CMatrix> es(rho);
      StateVector v = es.eigenvectors().col(0);
      for (int i = 0; i < m; ++i) sg(i) = (v.adjoint() * setup.rho_dirs[i] * v)(0, 0).real();
    } else {
      sg = setup.null_basis.transpose() * slacks.coeffs[active];
    }
    return sg;
  };
  auto [y_best, margin] = subgradient_ascent(prob, y0, 4000);
  if (margin <= threshold) {
    if (perturbation > 0.0)
      throw infeasible_error("phase I failed: statistics admit no strictly feasible "
                             "Clifford-random channel");
    // Retry once with targets nudged toward the channel that fully
    // depolarizes the B side (the family's own center).
    const double delta = 1e-8;
    const CMatrix center = restricted_state(RestrictedParams::center(), b);
    ConstraintSet perturbed = perturb_toward(original_cs, center, delta);
    return prepare_restricted(perturbed, b, mode, assembly, slacks, delta, original_cs);
  }
  setup.y0 = y_best;
  return setup;
}

}  // namespace detail

/// Minimize the reduced objective over the Clifford-random-channel family.
/// The reported key rate is a lower bound on the restricted-eavesdropper
/// secret key rate.
inline RestrictedSolveOutput solve_restricted(const ConstraintSet& cs, double p, double b,
                                              CliffSumMode cliff_sum_mode,
                                              const SolverOptions& opts = {}) {
  opts.validate();
  if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("solve_restricted: p out of (0,1)");
  if (b < 0.0 || b > 1.0) throw std::invalid_argument("solve_restricted: b out of [0,1]");

  const detail::RestrictedAssembly assembly = detail::restricted_assembly(b);
  const detail::RestrictedSlacks slacks = detail::restricted_slacks(cliff_sum_mode);
  detail::RestrictedSetup setup =
      detail::prepare_restricted(cs, b, cliff_sum_mode, assembly, slacks, 0.0, cs);
  const int m = static_cast<int>(setup.rho_dirs.size());

  auto c_of = [&](const Eigen::VectorXd& y) {
    Eigen::Matrix<double, 18, 1> c = setup.c0;
    c += setup.null_basis * y;
    return c;
  };
  auto rho_of = [&](const Eigen::VectorXd& y) {
    CMatrix rho = setup.rho_base;
    for (int i = 0; i < m; ++i) rho += y(i) * setup.rho_dirs[i];
    return rho;
  };

  Eigen::VectorXd y = setup.y0;
  int total_iterations = 0;
  bool converged = true;
  double previous_f = std::numeric_limits<double>::infinity();
  double previous_mu = opts.mu_initial;
  double mu_used = opts.mu_initial;

  for (double mu : detail::mu_schedule(opts)) {
    mu_used = mu;
    detail::BfgsCallbacks cb;
    cb.value = [&, mu](const Eigen::VectorXd& yv) {
      const Eigen::Matrix<double, 18, 1> c = c_of(yv);
      double log_slacks = 0.0;
      for (int i = 0; i < slacks.count(); ++i) {
        const double s = slacks.value(i, c);
        if (s <= 0.0) return std::numeric_limits<double>::infinity();
        log_slacks += std::log(s);
      }
      const CMatrix rho = rho_of(yv);
      const double ld = detail::log_det_pd(rho);
      if (!std::isfinite(ld)) return std::numeric_limits<double>::infinity();
      return detail::objective_nats_interior(rho, p) - mu * (ld + log_slacks);
    };
    cb.gradient = [&, mu](const Eigen::VectorXd& yv) {
      const Eigen::Matrix<double, 18, 1> c = c_of(yv);
      const CMatrix gm = detail::barrier_gradient_matrix(rho_of(yv), p, mu);
      Eigen::VectorXd g(m);
      for (int i = 0; i < m; ++i) g(i) = (gm * setup.rho_dirs[i]).trace().real();
      for (int i = 0; i < slacks.count(); ++i) {
        const double s = slacks.value(i, c);
        g -= (mu / s) * (setup.null_basis.transpose() * slacks.coeffs[i]);
      }
      return g;
    };
    cb.max_step = [&](const Eigen::VectorXd& yv, const Eigen::VectorXd& d) {
      CMatrix delta = CMatrix::Zero(4, 4);
      for (int i = 0; i < m; ++i) delta += d(i) * setup.rho_dirs[i];
      double cap = detail::psd_max_step(rho_of(yv), delta);
      const Eigen::Matrix<double, 18, 1> c = c_of(yv);
      const Eigen::Matrix<double, 18, 1> dc = setup.null_basis * d;
      for (int i = 0; i < slacks.count(); ++i) {
        const double ds = slacks.coeffs[i].dot(dc);
        if (ds < 0.0) cap = std::min(cap, -slacks.value(i, c) / ds);
      }
      return cap;
    };
    auto outcome = detail::bfgs_minimize(cb, y, opts.stage_tol(mu), 0.1 * std::sqrt(mu),
                                         opts.max_iterations);
    y = outcome.x;
    total_iterations += outcome.iterations;
    if (!outcome.reached_tol) converged = false;

    const double f_now = detail::objective_nats_interior(rho_of(y), p) / kLn2;
    if (f_now > previous_f + 1e-9 + previous_mu / kLn2) converged = false;
    previous_f = f_now;
    previous_mu = mu;
  }

  RestrictedSolveOutput out;
  out.c_star = detail::unflatten(c_of(y));
  const CMatrix rho_star = rho_of(y);
  KeyRateResult& res = out.result;
  res.r = detail::objective_nats_interior(rho_star, p) / kLn2;
  res.leak = cs.sim_leak;
  res.p_pass = p * p + (1.0 - p) * (1.0 - p);
  res.keyrate_raw = res.r - res.p_pass * res.leak;
  res.keyrate = std::max(0.0, res.keyrate_raw);
  res.nu = 4.0 + slacks.count();
  res.mu_final = mu_used;
  res.gap = 2.0 * mu_used * res.nu / kLn2;
  res.certificate_lb = res.r - res.gap;
  res.iterations = total_iterations;
  res.converged = converged;
  res.perturbation = setup.perturbation;
  out.rho_star = DensityMatrix(rho_star);
  return out;
}

/// Certificate discipline: the definitional gap bound holds and a re-solve at
/// one tenth of the final barrier weight moves the objective by less than
/// 1e-3 relative.
inline bool certificate_check(const KeyRateResult& result,
                              const std::function<KeyRateResult(double)>& resolve) {
  if (!result.converged) return false;
  if (result.certificate_lb > result.r + 1e-9) return false;
  if (result.gap > 2.0 * result.mu_final * result.nu / kLn2 + 1e-9) return false;
  const KeyRateResult finer = resolve(result.mu_final / 10.0);
  const double denom = std::max({std::abs(result.r), std::abs(finer.r), 1e-9});
  return std::abs(finer.r - result.r) / denom < 1e-3;
}

}  // namespace qkd

#endif  // QKDRATE_SOLVER_HPP_
