#pragma once

// Constraints on the lifted variable X = U U^H, U = [V; W^H], and the eigenvalue penalty
// that measures how far X is from rank N.

#include <hbf/core_model.hpp>

#include <cmath>

namespace hbf {

/// Per-user data of the lifted cone constraints
///   ||[(g_k^H S_v X S_w)^H; sigma_k]||_2 <= sqrt((1+eta_k)/eta_k) g_k^H S_v X d_k,
///   g_k^H S_v X d_k >= 0,
/// together with evaluators for both sides.
class ConstraintBundle {
 public:
  ConstraintBundle(ChannelSet channels, SinrTargets targets)
      : channels_(std::move(channels)), targets_(std::move(targets)) {
    detail::require(targets_.size() == channels_.K(), "one target per user required");
    cone_scale_ = ((1.0 + targets_.eta().array()) / targets_.eta().array()).sqrt().matrix();
  }

  const ChannelSet& channels() const noexcept { return channels_; }
  const SinrTargets& targets() const noexcept { return targets_; }
  Eigen::Index M() const noexcept { return channels_.M(); }
  Eigen::Index K() const noexcept { return channels_.K(); }
  Eigen::Index size() const noexcept { return M() + K(); }

  /// sqrt((1+eta_k)/eta_k).
  double cone_scale(Eigen::Index k) const { return cone_scale_(k); }
  double sigma(Eigen::Index k) const { return channels_.sigma(k); }

  /// g_k^H S_v X S_w, a 1 x K row read from the top-right block.
  Eigen::RowVectorXcd row(const CMatrix& X, Eigen::Index k) const {
    check(X);
    return channels_.G().row(k) * X.topRightCorner(M(), K());
  }

  /// g_k^H S_v X d_k.
  Complex signal(const CMatrix& X, Eigen::Index k) const { return row(X, k)(k); }

  /// Non-negative iff the cone constraint of user k holds.
  double soc_residual(const CMatrix& X, Eigen::Index k) const {
    const Eigen::RowVectorXcd r = row(X, k);
    return cone_scale_(k) * r(k).real() - std::sqrt(r.squaredNorm() + channels_.sigma2()(k));
  }

  /// Largest violation over the cone, sign and PSD constraints (zero when all hold).
  double max_violation(const CMatrix& X) const {
    double v = std::max(0.0, -detail::min_eigenvalue(X));
    for (Eigen::Index k = 0; k < K(); ++k) {
      v = std::max(v, -soc_residual(X, k));
      v = std::max(v, -signal(X, k).real());
    }
    return v;
  }

 private:
  void check(const CMatrix& X) const {
    detail::require(X.rows() == size() && X.cols() == size(), "lifted matrix must be (M+K) x (M+K)");
  }

  ChannelSet channels_;
  SinrTargets targets_;
  RVector cone_scale_;
};

inline ConstraintBundle lift_constraint_data(const ChannelSet& ch, const SinrTargets& targets) {
  return ConstraintBundle(ch, targets);
}

/// trace(X) - sum of the N largest eigenvalues of X.
inline double penalty_term(const CMatrix& X, Eigen::Index N) {
  detail::require(X.rows() == X.cols(), "matrix must be square");
  detail::require(N >= 0 && N <= X.rows(), "rank budget out of range");
  const auto eig = detail::sorted_eigen(X);
  return eig.values.tail(X.rows() - N).sum();
}

/// Projector onto the eigenvectors of the M+K-N smallest eigenvalues of X, the minimizer of
/// Re tr(P^H X) over { 0 <= P <= I, tr P = M+K-N }.
inline CMatrix update_projection(const CMatrix& X, Eigen::Index N) {
  detail::require(X.rows() == X.cols(), "matrix must be square");
  detail::require(N >= 0 && N <= X.rows(), "rank budget out of range");
  const auto eig = detail::sorted_eigen(X);
  const Eigen::Index r = X.rows() - N;
  const CMatrix Q = eig.vectors.rightCols(r);
  return Q * Q.adjoint();
}

/// Re tr(P^H X).
inline double pairing(const CMatrix& P, const CMatrix& X) {
  detail::require(P.rows() == X.rows() && P.cols() == X.cols(), "pairing needs equal shapes");
  return (P.conjugate().cwiseProduct(X)).sum().real();
}

}  // namespace hbf
