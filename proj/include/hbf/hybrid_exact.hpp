#pragma once

// Optimal hybrid beamformer when the RF chains outnumber the users (K <= N).
//
// Any N x K digital stage W with independent columns paired with
//   V = W_D (W^H W)^{-1} W^H
// reproduces the optimal fully-digital precoder exactly, V W = W_D, so the hybrid design
// attains the fully-digital minimum power.

#include <hbf/qos_power_min.hpp>
#include <hbf/rng.hpp>

#include <chrono>
#include <cstdint>
#include <optional>

namespace hbf {

struct SeedOptions {
  double cond_floor = 1e-3;  // sigma_min(W) >= cond_floor * sigma_max(W)
  int max_attempts = 16;
};

/// N x K matrix with linearly independent columns: a Gaussian draw, redrawn while badly
/// conditioned, falling back to [I_K; 0].
inline CMatrix construct_digital_seed(Eigen::Index N, Eigen::Index K, std::uint64_t seed, const SeedOptions& opts = {}) {
  detail::require(K >= 1 && K <= N, "digital seed needs 1 <= K <= N");
  Rng rng(seed);
  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    CMatrix W = rng.complex_normal(N, K);
    Eigen::JacobiSVD<CMatrix> svd(W);
    const RVector& s = svd.singularValues();
    if (s(K - 1) >= opts.cond_floor * s(0)) return W;
  }
  CMatrix W = CMatrix::Zero(N, K);
  W.topRows(K).setIdentity();
  return W;
}

struct SolveReport {
  double power = 0.0;
  bool feasible = false;
  int iterations = 0;
  double wall_time_ms = 0.0;
  RVector sinr_slack;
};

struct HybridSolution {
  HybridBeamformer beamformer;
  SolveReport report;
};

struct ExactOptions {
  FdOptions fd;
  SeedOptions seed_opts;
  std::uint64_t seed = 0;
  std::optional<CMatrix> digital_seed;  // overrides the random draw when set
  double feas_tol = kFeasTol;
};

/// V = W_D (W^H W)^{-1} W^H, with the Gram system solved by Cholesky.
inline CMatrix analog_from_digital(const CMatrix& WD, const CMatrix& W) {
  detail::require(WD.cols() == W.cols(), "W_D and W must have the same number of columns");
  Eigen::LLT<CMatrix> llt(W.adjoint() * W);
  if (llt.info() != Eigen::Success) throw SolveError(Status::kRankDeficient, "digital seed columns are dependent");
  return WD * llt.solve(W.adjoint());
}

inline HybridSolution solve_exact(const ChannelSet& ch, const SinrTargets& targets, Eigen::Index N,
                                  const ExactOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  if (ch.K() > N) throw SolveError(Status::kDimensionError, "exact hybrid design needs K <= N");
  detail::require(N <= ch.M(), "more RF chains than antennas");

  const FdSolveReport fd = solve_fd(ch, targets, opts.fd);
  CMatrix W = opts.digital_seed ? *opts.digital_seed : construct_digital_seed(N, ch.K(), opts.seed, opts.seed_opts);
  detail::require(W.rows() == N && W.cols() == ch.K(), "digital seed must be N x K");
  const CMatrix V = analog_from_digital(fd.beamformer.WD, W);

  HybridSolution out{{V, std::move(W)}, {}};
  const auto check = check_feasible(ch, targets, out.beamformer.V, out.beamformer.W, opts.feas_tol);
  out.report.power = power(out.beamformer.V, out.beamformer.W);
  out.report.feasible = check.feasible;
  out.report.sinr_slack = check.slack;
  out.report.iterations = fd.iterations;
  out.report.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace hbf
