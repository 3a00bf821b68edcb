#pragma once

// Problem data, beamformer types and the SINR / power evaluators shared by all solvers.

#include <hbf/detail/linalg.hpp>
#include <hbf/error.hpp>

#include <cmath>
#include <utility>
#include <vector>

namespace hbf {

inline constexpr double kPsdTol = 1e-9;
inline constexpr double kFeasTol = 1e-6;

/// Channels of K single-antenna users seen from an M-antenna array.
///
/// Row k of `G` is g_k^H. Noise powers are linear scale and strictly positive.
class ChannelSet {
 public:
  ChannelSet(CMatrix g, RVector sigma2) : g_(std::move(g)), sigma2_(std::move(sigma2)) {
    detail::require(g_.rows() > 0 && g_.cols() > 0, "channel matrix must be non-empty");
    detail::require(sigma2_.size() == g_.rows(), "one noise power per user required");
    for (Eigen::Index k = 0; k < g_.rows(); ++k) {
      detail::require(g_.row(k).squaredNorm() > 0.0, "channel row is all-zero");
      detail::require(sigma2_(k) > 0.0 && std::isfinite(sigma2_(k)), "noise power must be positive");
    }
  }

  /// Unit noise power for every user.
  explicit ChannelSet(CMatrix g) : ChannelSet(g, RVector::Ones(g.rows())) {}

  const CMatrix& G() const noexcept { return g_; }
  const RVector& sigma2() const noexcept { return sigma2_; }
  Eigen::Index M() const noexcept { return g_.cols(); }
  Eigen::Index K() const noexcept { return g_.rows(); }

  /// g_k as a column vector.
  CVector g(Eigen::Index k) const { return g_.row(k).adjoint(); }
  double sigma(Eigen::Index k) const { return std::sqrt(sigma2_(k)); }

 private:
  CMatrix g_;
  RVector sigma2_;
};

/// Per-user linear SINR thresholds, all strictly positive.
class SinrTargets {
 public:
  explicit SinrTargets(RVector eta) : eta_(std::move(eta)) {
    detail::require(eta_.size() > 0, "targets must be non-empty");
    for (Eigen::Index k = 0; k < eta_.size(); ++k)
      detail::require(eta_(k) > 0.0 && std::isfinite(eta_(k)), "SINR target must be positive");
  }

  static SinrTargets uniform(Eigen::Index K, double eta) {
    return SinrTargets(RVector::Constant(K, eta));
  }

  const RVector& eta() const noexcept { return eta_; }
  double operator()(Eigen::Index k) const { return eta_(k); }
  Eigen::Index size() const noexcept { return eta_.size(); }

 private:
  RVector eta_;
};

struct HybridBeamformer {
  CMatrix V;  // M x N analog stage
  CMatrix W;  // N x K digital stage

  Eigen::Index N() const noexcept { return V.cols(); }
  CMatrix product() const { return V * W; }
};

struct FullDigitalBeamformer {
  CMatrix WD;  // M x K
};

/// Hermitian PSD matrix of size (M+K) x (M+K) with the analog block in the top-left corner.
///
/// Selector conventions: S_v keeps the first M rows, S_w keeps the last K columns, d_k is
/// the unit vector at position M+k. `S_v X S_w` is therefore the top-right M x K block.
class LiftedMatrix {
 public:
  LiftedMatrix(CMatrix x, Eigen::Index M) : x_(detail::hermitian_part(x)), m_(M) {
    detail::require(x_.rows() == x_.cols(), "lifted matrix must be square");
    detail::require(M > 0 && M < x_.rows(), "analog block size out of range");
  }

  /// X = U U^H with U = [V; W^H].
  static LiftedMatrix from_factors(const CMatrix& V, const CMatrix& W) {
    detail::require(V.cols() == W.rows(), "V and W inner dimensions differ");
    CMatrix U(V.rows() + W.cols(), V.cols());
    U << V, W.adjoint();
    return LiftedMatrix(U * U.adjoint(), V.rows());
  }

  const CMatrix& X() const noexcept { return x_; }
  Eigen::Index M() const noexcept { return m_; }
  Eigen::Index K() const noexcept { return x_.rows() - m_; }
  Eigen::Index size() const noexcept { return x_.rows(); }

  /// S_v X S_w.
  CMatrix cross_block() const { return x_.topRightCorner(m_, K()); }
  double trace() const { return x_.trace().real(); }

  bool is_psd(double eps = kPsdTol) const { return detail::min_eigenvalue(x_) >= -eps; }

 private:
  CMatrix x_;
  Eigen::Index m_;
};

namespace detail {

inline void check_dims(const ChannelSet& ch, const CMatrix& V, const CMatrix& W) {
  require(V.rows() == ch.M(), "V must have M rows");
  require(V.cols() == W.rows(), "V and W inner dimensions differ");
  require(W.cols() == ch.K(), "W must have K columns");
}

}  // namespace detail

/// |g_k^H V w_k|^2 / (sum_{i != k} |g_k^H V w_i|^2 + sigma_k^2).
inline double sinr(const ChannelSet& ch, const CMatrix& V, const CMatrix& W, Eigen::Index k) {
  detail::check_dims(ch, V, W);
  detail::require(k >= 0 && k < ch.K(), "user index out of range");
  const Eigen::RowVectorXcd row = ch.G().row(k) * V * W;
  const double signal = std::norm(row(k));
  const double interference = row.squaredNorm() - signal;
  return signal / (std::max(interference, 0.0) + ch.sigma2()(k));
}

inline RVector sinr_all(const ChannelSet& ch, const CMatrix& V, const CMatrix& W) {
  RVector out(ch.K());
  for (Eigen::Index k = 0; k < ch.K(); ++k) out(k) = sinr(ch, V, W, k);
  return out;
}

/// Transmission power ||V W||_F^2.
inline double power(const CMatrix& V, const CMatrix& W) {
  detail::require(V.cols() == W.rows(), "V and W inner dimensions differ");
  return (V * W).squaredNorm();
}

struct FeasibilityCheck {
  bool feasible = false;
  RVector slack;  // sinr_k - eta_k
};

inline FeasibilityCheck check_feasible(const ChannelSet& ch, const SinrTargets& targets,
                                       const CMatrix& V, const CMatrix& W, double tol = kFeasTol) {
  detail::require(targets.size() == ch.K(), "one target per user required");
  detail::require(tol >= 0.0, "tolerance must be non-negative");
  FeasibilityCheck out{true, sinr_all(ch, V, W) - targets.eta()};
  for (Eigen::Index k = 0; k < ch.K(); ++k)
    if (out.slack(k) < -tol) out.feasible = false;
  return out;
}

struct SocResidual {
  double residual = 0.0;  // >= 0 iff the cone constraint holds
  double signal_re = 0.0;  // Re(g_k^H V w_k)
  double signal_im = 0.0;  // Im(g_k^H V w_k)
};

/// sqrt((1+eta_k)/eta_k) Re(g_k^H V w_k) - ||[(g_k^H V W)^H; sigma_k]||_2.
inline SocResidual soc_residual(const ChannelSet& ch, const SinrTargets& targets, const CMatrix& V,
                                const CMatrix& W, Eigen::Index k) {
  detail::check_dims(ch, V, W);
  detail::require(k >= 0 && k < ch.K(), "user index out of range");
  const double eta = targets(k);
  detail::require(eta > 0.0, "SINR target must be positive");
  const Eigen::RowVectorXcd row = ch.G().row(k) * V * W;
  const double lhs = std::sqrt(row.squaredNorm() + ch.sigma2()(k));
  const double scale = std::sqrt((1.0 + eta) / eta);
  return {scale * row(k).real() - lhs, row(k).real(), row(k).imag()};
}

/// Rotates each column of `W` so that g_k^H V w_k is real and non-negative.
/// Power and every SINR are unchanged.
inline CMatrix phase_normalize(const ChannelSet& ch, const CMatrix& V, CMatrix W) {
  detail::check_dims(ch, V, W);
  const CMatrix gv = ch.G() * V;
  for (Eigen::Index k = 0; k < ch.K(); ++k)
    W.col(k) *= detail::unit_phase_conj((gv.row(k) * W.col(k)).value());
  return W;
}

}  // namespace hbf
