#pragma once

// Globally optimal fully-digital QoS power minimization via uplink-downlink duality.
//
// With normalized channels h_k = g_k / sigma_k the virtual uplink powers solve
//   q_k = eta_k / (h_k^H (I + sum_{j != k} q_j h_j h_j^H)^{-1} h_k),
// the optimal transmit directions are the MMSE receivers of that uplink, and the downlink
// powers follow from making every SINR constraint tight.

#include <hbf/core_model.hpp>

#include <cmath>
#include <vector>

namespace hbf {

struct FdOptions {
  double fp_tol = 1e-10;
  int max_iters = 10000;
  double q_max = 1e12;
  double rcond_min = 1e-12;
};

struct DualityState {
  RVector q;
  int iterations = 0;
  double residual = 0.0;
};

struct FdSolveReport {
  FullDigitalBeamformer beamformer;
  double power = 0.0;
  int iterations = 0;
  bool feasible = false;
  RVector sinr_slack;
};

/// Runs the fixed point from q = 0. `history`, when given, receives q after every sweep.
inline DualityState duality_fixed_point(const ChannelSet& ch, const SinrTargets& targets, const FdOptions& opts = {},
                                        std::vector<RVector>* history = nullptr) {
  detail::require(targets.size() == ch.K(), "one target per user required");
  const Eigen::Index M = ch.M(), K = ch.K();
  CMatrix H(M, K);
  for (Eigen::Index k = 0; k < K; ++k) H.col(k) = ch.g(k) / ch.sigma(k);

  DualityState st{RVector::Zero(K), 0, 0.0};
  RVector next(K);
  for (int it = 1; it <= opts.max_iters; ++it) {
    CMatrix A = CMatrix::Identity(M, M);
    A.noalias() += H * st.q.cast<Complex>().asDiagonal() * H.adjoint();
    Eigen::LLT<CMatrix> llt(A);
    if (llt.info() != Eigen::Success) throw SolveError(Status::kNumericalFailure, "duality matrix not positive definite");
    const CMatrix AinvH = llt.solve(H);
    for (Eigen::Index k = 0; k < K; ++k) {
      // Remove user k's own term by Sherman-Morrison: h^H (A - q h h^H)^{-1} h = s / (1 - q s).
      const double s = H.col(k).dot(AinvH.col(k)).real();
      const double denom = 1.0 - st.q(k) * s;
      if (!(denom > 0.0) || !(s > 0.0)) throw SolveError(Status::kNumericalFailure, "duality update lost definiteness");
      next(k) = targets(k) * denom / s;
    }
    double change = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) change = std::max(change, std::abs(next(k) - st.q(k)) / next(k));
    st.q = next;
    st.iterations = it;
    st.residual = change;
    if (history) history->push_back(st.q);
    if (st.q.maxCoeff() > opts.q_max || !st.q.allFinite())
      throw SolveError(Status::kInfeasible, "uplink powers diverged: SINR targets are not jointly attainable");
    if (change < opts.fp_tol) return st;
  }
  throw SolveError(Status::kNoConvergence, "duality fixed point did not converge");
}

/// Minimum-power loading for fixed unit-norm directions making every SINR equal to its target.
/// Returns the per-user powers; throws Infeasible when no non-negative solution exists.
inline RVector equality_power_loading(const ChannelSet& ch, const SinrTargets& targets, const CMatrix& directions,
                                      double rcond_min = 1e-12) {
  detail::require(directions.rows() == ch.M() && directions.cols() == ch.K(), "directions must be M x K");
  const Eigen::Index K = ch.K();
  const RMatrix gain = (ch.G() * directions).cwiseAbs2();  // gain(k, i) = |g_k^H u_i|^2
  RMatrix A = -gain;
  for (Eigen::Index k = 0; k < K; ++k) A(k, k) = gain(k, k) / targets(k);
  Eigen::PartialPivLU<RMatrix> lu(A);
  if (!(lu.rcond() > rcond_min)) throw SolveError(Status::kInfeasible, "power loading system is singular");
  const RVector p = lu.solve(ch.sigma2());
  for (Eigen::Index k = 0; k < K; ++k)
    if (!(p(k) > 0.0) || !std::isfinite(p(k)))
      throw SolveError(Status::kInfeasible, "power loading requires negative power");
  return p;
}

namespace detail {

inline FdSolveReport make_fd_report(const ChannelSet& ch, const SinrTargets& targets, const CMatrix& directions,
                                    const RVector& p, int iterations) {
  CMatrix WD = directions * p.cwiseSqrt().cast<Complex>().asDiagonal();
  const CMatrix I = CMatrix::Identity(ch.M(), ch.M());
  WD = phase_normalize(ch, I, WD);
  FdSolveReport r;
  r.power = WD.squaredNorm();
  r.sinr_slack = sinr_all(ch, I, WD) - targets.eta();
  r.beamformer.WD = std::move(WD);
  r.iterations = iterations;
  r.feasible = true;
  return r;
}

}  // namespace detail

/// Global optimum of min ||W_D||_F^2 subject to every SINR_k >= eta_k.
inline FdSolveReport solve_fd(const ChannelSet& ch, const SinrTargets& targets, const FdOptions& opts = {}) {
  detail::require(targets.size() == ch.K(), "one target per user required");
  detail::require(ch.K() <= ch.M(), "fully-digital solve needs K <= M");
  const DualityState st = duality_fixed_point(ch, targets, opts);

  const Eigen::Index M = ch.M(), K = ch.K();
  CMatrix H(M, K);
  for (Eigen::Index k = 0; k < K; ++k) H.col(k) = ch.g(k) / ch.sigma(k);
  CMatrix A = CMatrix::Identity(M, M);
  A.noalias() += H * st.q.cast<Complex>().asDiagonal() * H.adjoint();
  CMatrix U = A.llt().solve(H);
  for (Eigen::Index k = 0; k < K; ++k) U.col(k).normalize();

  const RVector p = equality_power_loading(ch, targets, U, opts.rcond_min);
  return detail::make_fd_report(ch, targets, U, p, st.iterations);
}

inline bool is_fd_feasible(const ChannelSet& ch, const SinrTargets& targets, const FdOptions& opts = {}) {
  try {
    solve_fd(ch, targets, opts);
    return true;
  } catch (const SolveError&) {
    return false;
  }
}

}  // namespace hbf
