#pragma once

// Zero-forcing and maximum-ratio fully-digital baselines, loaded with the minimum power that
// meets every SINR target for the fixed directions.

#include <hbf/qos_power_min.hpp>

namespace hbf {

inline FdSolveReport zf_beamformer(const ChannelSet& ch, const SinrTargets& targets, double rcond_min = 1e-12) {
  detail::require(targets.size() == ch.K(), "one target per user required");
  detail::require(ch.K() <= ch.M(), "zero-forcing needs K <= M");
  const CMatrix gram = ch.G() * ch.G().adjoint();
  Eigen::PartialPivLU<CMatrix> lu(gram);
  if (!(lu.rcond() > rcond_min)) throw SolveError(Status::kRankDeficient, "channel Gram matrix is singular");
  CMatrix U = ch.G().adjoint() * lu.inverse();
  for (Eigen::Index k = 0; k < ch.K(); ++k) U.col(k).normalize();

  // Zero interference, so each user decouples.
  RVector p(ch.K());
  for (Eigen::Index k = 0; k < ch.K(); ++k)
    p(k) = targets(k) * ch.sigma2()(k) / std::norm((ch.G().row(k) * U.col(k)).value());
  return detail::make_fd_report(ch, targets, U, p, 0);
}

inline FdSolveReport mrt_beamformer(const ChannelSet& ch, const SinrTargets& targets, double rcond_min = 1e-12) {
  detail::require(targets.size() == ch.K(), "one target per user required");
  CMatrix U = ch.G().adjoint();
  for (Eigen::Index k = 0; k < ch.K(); ++k) U.col(k).normalize();
  const RVector p = equality_power_loading(ch, targets, U, rcond_min);
  return detail::make_fd_report(ch, targets, U, p, 0);
}

}  // namespace hbf
