#pragma once

// Primal barrier interior-point solver for
//
//   minimize   ||S_v X S_w||_F^2 + Re tr(C^H X)
//   subject to the lifted cone and sign constraints of every user, X >= 0,
//
// over Hermitian X of size n = M + K.
//
// The Hermitian variable is handled through its real embedding. Coordinates are taken in
// the orthonormal basis {e_a e_a^T, (e_a e_b^T + e_b e_a^T)/sqrt2, i(e_a e_b^T - e_b e_a^T)/sqrt2}
// of the Hermitian matrices, under which Re tr(A^H B) is the Euclidean inner product. The
// objective and every cone constraint only read the 2MK coordinates of the top-right block,
// so the Newton system is reduced onto those coordinates: the -log det Hessian is inverted
// in closed form (D -> X D X) and only a 2MK x 2MK system is factored per step.

#include <hbf/lifted_constraints.hpp>
#include <hbf/qos_power_min.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

namespace hbf::conic {

namespace detail {
using hbf::detail::hermitian_part;
using hbf::detail::min_eigenvalue;
using hbf::detail::require;
}  // namespace detail

struct ConicProblem {
  ConstraintBundle constraints;
  CMatrix linear;  // C, Hermitian PSD
  bool cone_constraints = true;  // false keeps only X >= 0
};

enum class SolverState { kOptimal, kInfeasible, kMaxIters, kNumericalFailure };

inline std::string_view to_string(SolverState s) {
  switch (s) {
    case SolverState::kOptimal: return "optimal";
    case SolverState::kInfeasible: return "infeasible";
    case SolverState::kMaxIters: return "max_iters";
    case SolverState::kNumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

struct SolverStatus {
  SolverState state = SolverState::kNumericalFailure;
  double duality_gap = std::numeric_limits<double>::infinity();  // barrier bound, unscaled units
  int iterations = 0;                                            // Newton steps
  std::vector<double> barrier_path;                              // t per centering stage
  std::vector<std::vector<double>> merit;                        // barrier merit per accepted step, per stage
  double scale = 1.0;                                            // X = scale * (internal variable)
};

struct ConicOptions {
  double feas_tol = 1e-7;
  double gap_tol = 1e-7;  // absolute, on the problem scaled by the fully-digital power
  double barrier_reduction = 0.05;
  double newton_tol = 1e-10;
  int max_iters = 600;
  int max_stage_iters = 100;
  double warm_weight = 0.9;
  double warm_centrality = 50.0;  // squared Newton decrement accepted when resuming at warm_gap
  /// Set when the warm start is a central point taken at this (unscaled) gap level, as
  /// reported in ConicSolution::path_gap; the solve then resumes the path there.
  std::optional<double> warm_gap;
  double snapshot_gap = 1e-3;  // scaled gap level of the reported path point
  double trace_reg = 1e-9;  // keeps the barrier problem bounded when C is singular
  /// Weight of a t-independent tr X term in the barrier merit. Bounds the early central path
  /// along directions the objective does not see; its bias decays like center_weight tr X / t.
  double center_weight = 1.0;
  /// M x K precoder meeting every SINR target; replaces the phase-1 search when present.
  std::optional<CMatrix> feasible_precoder;
};

struct ConicSolution {
  CMatrix X;
  SolverStatus status;
  double objective = 0.0;
  CMatrix path_point;  // central point at a moderate gap, for warm starting a nearby problem
  double path_gap = 0.0;
};

// ---------------------------------------------------------------------------------------
// Real embedding

/// [[Re X, -Im X], [Im X, Re X]]; Hermitian X maps to a real symmetric matrix with the same
/// eigenvalues, each doubled in multiplicity.
inline RMatrix real_embed(const CMatrix& X) {
  const Eigen::Index n = X.rows();
  RMatrix out(2 * n, 2 * X.cols());
  out << X.real(), -X.imag(), X.imag(), X.real();
  return out;
}

inline CMatrix real_extract(const RMatrix& Y) {
  detail::require(Y.rows() % 2 == 0 && Y.cols() % 2 == 0, "embedded matrix must have even size");
  const Eigen::Index n = Y.rows() / 2, m = Y.cols() / 2;
  CMatrix out(n, m);
  out.real() = 0.5 * (Y.topLeftCorner(n, m) + Y.bottomRightCorner(n, m));
  out.imag() = 0.5 * (Y.bottomLeftCorner(n, m) - Y.topRightCorner(n, m));
  return out;
}

/// tr(embed(C)^T embed(X)) = 2 Re tr(C^H X).
inline double embedded_pairing(const CMatrix& C, const CMatrix& X) {
  return (real_embed(C).cwiseProduct(real_embed(X))).sum();
}

/// Orthonormal real coordinates of Hermitian n x n matrices: the n diagonal entries, then
/// sqrt2 Re X_ab and sqrt2 Im X_ab for every a < b in row-major order.
inline RVector hermitian_coords(const CMatrix& X) {
  const Eigen::Index n = X.rows();
  RVector y(n * n);
  Eigen::Index p = 0;
  for (Eigen::Index a = 0; a < n; ++a) y(p++) = X(a, a).real();
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) {
      y(p++) = std::numbers::sqrt2 * X(a, b).real();
      y(p++) = std::numbers::sqrt2 * X(a, b).imag();
    }
  return y;
}

inline CMatrix hermitian_from_coords(const RVector& y, Eigen::Index n) {
  detail::require(y.size() == n * n, "coordinate vector has wrong length");
  CMatrix X(n, n);
  Eigen::Index p = 0;
  for (Eigen::Index a = 0; a < n; ++a) X(a, a) = y(p++);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) {
      X(a, b) = Complex(y(p), y(p + 1)) / std::numbers::sqrt2;
      X(b, a) = std::conj(X(a, b));
      p += 2;
    }
  return X;
}

/// The problem re-expressed on real coordinates. Cone maps act on the 2MK block coordinates
/// (column M+i, row m -> entries 2(iM+m) and 2(iM+m)+1, holding sqrt2 Re and sqrt2 Im).
struct RealConicProblem {
  Eigen::Index M = 0, K = 0;
  CMatrix linear;                   // C in matrix form (its coordinates are hermitian_coords(C))
  std::vector<RMatrix> cone_maps;   // (2K+1) x 2MK: row 0 = c_k Re(signal), then Re/Im of each row entry
  RVector cone_offset;              // sigma_k
  std::vector<RVector> sign_rows;   // Re(signal) on block coordinates
  bool cone_constraints = true;

  Eigen::Index n() const { return M + K; }
  Eigen::Index block_dim() const { return 2 * M * K; }
  /// Barrier parameter: n for -log det, 2 per cone, 1 per sign constraint.
  double nu() const { return static_cast<double>(n() + (cone_constraints ? 3 * K : 0)); }
};

namespace detail {

inline RVector block_coords(const CMatrix& X, Eigen::Index M, Eigen::Index K) {
  RVector v(2 * M * K);
  for (Eigen::Index i = 0; i < K; ++i)
    for (Eigen::Index m = 0; m < M; ++m) {
      const Complex x = X(m, M + i);
      v(2 * (i * M + m)) = std::numbers::sqrt2 * x.real();
      v(2 * (i * M + m) + 1) = std::numbers::sqrt2 * x.imag();
    }
  return v;
}

/// Hermitian matrix whose only non-zero entries are the block coordinates `v`.
inline CMatrix block_matrix(const RVector& v, Eigen::Index M, Eigen::Index K) {
  CMatrix X = CMatrix::Zero(M + K, M + K);
  for (Eigen::Index i = 0; i < K; ++i)
    for (Eigen::Index m = 0; m < M; ++m) {
      const Complex x = Complex(v(2 * (i * M + m)), v(2 * (i * M + m) + 1)) / std::numbers::sqrt2;
      X(m, M + i) = x;
      X(M + i, m) = std::conj(x);
    }
  return X;
}

}  // namespace detail

/// Embeds the problem with the variable scaled as X = scale * Y.
inline RealConicProblem real_embed(const ConicProblem& problem, double scale = 1.0) {
  const auto& b = problem.constraints;
  const Eigen::Index M = b.M(), K = b.K();
  detail::require(problem.linear.rows() == M + K && problem.linear.cols() == M + K, "C must be (M+K) x (M+K)");
  detail::require(scale > 0.0, "scale must be positive");

  RealConicProblem rp;
  rp.M = M;
  rp.K = K;
  rp.linear = detail::hermitian_part(problem.linear) / scale;
  rp.cone_constraints = problem.cone_constraints;
  if (!problem.cone_constraints) return rp;

  rp.cone_offset.resize(K);
  const double r2 = 1.0 / std::numbers::sqrt2;
  for (Eigen::Index k = 0; k < K; ++k) {
    // a_i = sum_m G(k,m) X(m, M+i), X(m, M+i) = (y_re + j y_im) / sqrt2.
    RMatrix re = RMatrix::Zero(K, 2 * M * K), im = RMatrix::Zero(K, 2 * M * K);
    for (Eigen::Index i = 0; i < K; ++i)
      for (Eigen::Index m = 0; m < M; ++m) {
        const Complex g = b.channels().G()(k, m);
        const Eigen::Index c = 2 * (i * M + m);
        re(i, c) = r2 * g.real();
        re(i, c + 1) = -r2 * g.imag();
        im(i, c) = r2 * g.imag();
        im(i, c + 1) = r2 * g.real();
      }
    RMatrix A(2 * K + 1, 2 * M * K);
    A.row(0) = b.cone_scale(k) * re.row(k);
    for (Eigen::Index i = 0; i < K; ++i) {
      A.row(1 + 2 * i) = re.row(i);
      A.row(2 + 2 * i) = im.row(i);
    }
    rp.cone_maps.push_back(std::move(A));
    rp.sign_rows.push_back(re.row(k).transpose());
    rp.cone_offset(k) = b.sigma(k) / scale;
  }
  return rp;
}

// ---------------------------------------------------------------------------------------
// Barrier machinery

namespace detail {

class Barrier {
 public:
  Barrier(const RealConicProblem& rp, double trace_reg, double center_weight)
      : rp_(rp), reg_(trace_reg), center_(center_weight) {}

  struct Point {
    CMatrix X;
    RVector z;  // block coordinates
    Eigen::LLT<CMatrix> llt;
    std::vector<RVector> cone_z;
    RVector cone_s, sign_l;
    bool interior = false;
  };

  Point evaluate(const CMatrix& X) const {
    Point p;
    p.X = X;
    p.llt.compute(X);
    if (p.llt.info() != Eigen::Success) return p;
    const auto& L = p.llt.matrixL();
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      if (!(std::real(L(i, i)) > 0.0)) return p;
    p.z = block_coords(X, rp_.M, rp_.K);
    if (rp_.cone_constraints) {
      p.cone_s.resize(rp_.K);
      p.sign_l.resize(rp_.K);
      for (Eigen::Index k = 0; k < rp_.K; ++k) {
        const std::size_t uk = static_cast<std::size_t>(k);
        RVector w = rp_.cone_maps[uk] * p.z;
        const double s = w(0) * w(0) - w.tail(w.size() - 1).squaredNorm() - rp_.cone_offset(k) * rp_.cone_offset(k);
        const double l = rp_.sign_rows[uk].dot(p.z);
        if (!(s > 0.0) || !(w(0) > 0.0) || !(l > 0.0)) return p;
        p.cone_s(k) = s;
        p.sign_l(k) = l;
        p.cone_z.push_back(std::move(w));
      }
    }
    p.interior = true;
    return p;
  }

  /// ||X_12||^2 + Re tr(C X) + reg tr X, scaled units.
  double objective(const CMatrix& X) const {
    return X.topRightCorner(rp_.M, rp_.K).squaredNorm() + pairing(rp_.linear, X) + reg_ * X.trace().real();
  }

  double merit(const Point& p, double t) const {
    double logdet = 0.0;
    const auto& L = p.llt.matrixL();
    for (Eigen::Index i = 0; i < p.X.rows(); ++i) logdet += 2.0 * std::log(std::real(L(i, i)));
    double v = t * objective(p.X) + center_ * p.X.trace().real() - logdet;
    if (rp_.cone_constraints)
      for (Eigen::Index k = 0; k < rp_.K; ++k) v -= std::log(p.cone_s(k)) + std::log(p.sign_l(k));
    return v;
  }

  struct Step {
    CMatrix direction;
    double decrement_sq = 0.0;  // lambda^2 = -<grad, direction>
    double max_step = std::numeric_limits<double>::infinity();  // X + a direction > 0 for a < max_step
    bool ok = false;
  };

  Step newton(const Point& p, double t) const {
    const Eigen::Index M = rp_.M, K = rp_.K, n = rp_.n(), d = rp_.block_dim();

    // Gradient pieces living on the block coordinates, and the cone and sign Hessians as
    // D = t I + V V^T with V of rank at most K (2K + 2).
    RVector gblock = t * p.z;
    RMatrix& V = ws_.V;
    Eigen::Index r = 0;
    V.resize(d, rp_.cone_constraints ? K * (2 * K + 2) : 0);
    if (rp_.cone_constraints) {
      for (Eigen::Index k = 0; k < K; ++k) {
        const std::size_t uk = static_cast<std::size_t>(k);
        const RMatrix& A = rp_.cone_maps[uk];
        const RVector& w = p.cone_z[uk];
        RVector jw = w;
        jw.tail(jw.size() - 1) *= -1.0;
        const double s = p.cone_s(k), l = p.sign_l(k);
        gblock -= (2.0 / s) * (A.transpose() * jw);
        // Hessian of -log(w^T J w - sigma^2) in w: (4/s^2) J w w^T J - (2/s) J, PSD.
        RMatrix H = (4.0 / (s * s)) * jw * jw.transpose();
        H.diagonal().array() += 2.0 / s;
        H(0, 0) -= 4.0 / s;
        const Eigen::SelfAdjointEigenSolver<RMatrix> eig(H);
        const RMatrix AT = A.transpose() * eig.eigenvectors();
        for (Eigen::Index j = 0; j < H.rows(); ++j) {
          const double lam = eig.eigenvalues()(j);
          if (lam > 0.0) V.col(r++) = std::sqrt(lam) * AT.col(j);
        }
        const RVector& f = rp_.sign_rows[uk];
        gblock -= f / l;
        V.col(r++) = f / l;
      }
    }
    const CMatrix& X = p.X;
    const CMatrix Xinv = p.llt.solve(CMatrix::Identity(n, n));
    // R = -gradient: X^{-1} - t C - (t reg + center) I - block part.
    const CMatrix R = hermitian_part(Xinv) - t * rp_.linear - (t * reg_ + center_) * CMatrix::Identity(n, n) -
                      block_matrix(gblock, M, K);

    // S = E^T (X (.) X) E on the block coordinates.
    RMatrix& S = ws_.S;
    S.resize(d, d);
    for (Eigen::Index ib = 0; ib < K; ++ib)
      for (Eigen::Index mb = 0; mb < M; ++mb) {
        const Eigen::Index a = mb, b = M + ib, col = 2 * (ib * M + mb);
        for (Eigen::Index ic = 0; ic < K; ++ic)
          for (Eigen::Index mc = 0; mc < M; ++mc) {
            const Eigen::Index c = mc, dd = M + ic, row = 2 * (ic * M + mc);
            const Complex u = X(c, a) * X(b, dd);
            const Complex v = X(c, b) * X(a, dd);
            S(row, col) = (u + v).real();
            S(row + 1, col) = (u + v).imag();
            S(row, col + 1) = -(u - v).imag();
            S(row + 1, col + 1) = (u - v).real();
          }
      }

    // D^{-1} = (I - V (t I + V^T V)^{-1} V^T) / t. Buffers are reused across steps; d x d
    // temporaries dominate the allocation traffic.
    RMatrix& schur = ws_.schur;
    {
      const auto Vr = V.leftCols(r);
      RMatrix core = Vr.transpose() * Vr;
      core.diagonal().array() += t;
      Eigen::LLT<RMatrix> cllt(core);
      if (cllt.info() != Eigen::Success) return {};
      const RMatrix Y = cllt.solve(Vr.transpose());
      schur.noalias() = -Vr * Y;
      schur.diagonal().array() += 1.0;
      schur /= t;
    }
    schur += S;
    const RVector rhs = block_coords(X * R * X, M, K);
    Eigen::LLT<RMatrix>& sllt = ws_.sllt;
    const double base = schur.diagonal().cwiseAbs().maxCoeff();
    bool solved = false;
    double added = 0.0;
    for (double reg = 0.0; reg <= 1e-6; reg = (reg == 0.0 ? 1e-12 : reg * 10.0)) {
      schur.diagonal().array() += (reg - added) * base;
      added = reg;
      sllt.compute(schur);  // reads the lower triangle only
      if (sllt.info() == Eigen::Success) {
        solved = true;
        break;
      }
    }
    if (!solved) return {};
    const RVector z = sllt.solve(rhs);

    Step st;
    st.direction = hermitian_part(X * (R - block_matrix(z, M, K)) * X);
    st.decrement_sq = pairing(R, st.direction);
    // Largest step keeping X + a Delta > 0, from the eigenvalues of L^{-1} Delta L^{-H}.
    const auto L = p.llt.matrixL();
    CMatrix scaled = L.solve(st.direction);
    scaled = L.solve(scaled.adjoint().eval());
    const double low =
        Eigen::SelfAdjointEigenSolver<CMatrix>(hermitian_part(scaled), Eigen::EigenvaluesOnly).eigenvalues()(0);
    if (low < 0.0) st.max_step = -1.0 / low;
    st.ok = std::isfinite(st.decrement_sq) && std::isfinite(low);
    return st;
  }

 private:
  struct Workspace {
    RMatrix V, S, schur;
    Eigen::LLT<RMatrix> sllt;
  };

  const RealConicProblem& rp_;
  double reg_;
  double center_;
  mutable Workspace ws_;
};

}  // namespace detail

// ---------------------------------------------------------------------------------------

/// Strictly feasible point built from a fully-digital precoder meeting every target:
///   [[B B^H + I, B], [B^H, I]], B = 1.5 W_D (phase-normalized).
inline CMatrix interior_point_from_precoder(const ConstraintBundle& b, const CMatrix& precoder) {
  detail::require(precoder.rows() == b.M() && precoder.cols() == b.K(), "precoder must be M x K");
  const CMatrix I = CMatrix::Identity(b.M(), b.M());
  const CMatrix B = 1.5 * phase_normalize(b.channels(), I, precoder);
  CMatrix X(b.size(), b.size());
  X.topLeftCorner(b.M(), b.M()) = B * B.adjoint() + I;
  X.topRightCorner(b.M(), b.K()) = B;
  X.bottomLeftCorner(b.K(), b.M()) = B.adjoint();
  X.bottomRightCorner(b.K(), b.K()).setIdentity();
  return X;
}

inline ConicSolution solve(const ConicProblem& problem, const std::optional<CMatrix>& warm_start = std::nullopt,
                           const ConicOptions& opts = {}) {
  const auto& bundle = problem.constraints;
  const Eigen::Index n = bundle.size();
  ConicSolution out;
  out.status.state = SolverState::kNumericalFailure;

  {
    const double lam = detail::min_eigenvalue(problem.linear);
    detail::require(lam >= -1e-9 * std::max(1.0, problem.linear.cwiseAbs().maxCoeff()), "C must be PSD");
  }

  // Phase 1: a strictly feasible point, from the fully-digital solution.
  CMatrix center = CMatrix::Identity(n, n);
  double scale = 1.0;
  if (problem.cone_constraints) {
    CMatrix precoder;
    if (opts.feasible_precoder) {
      precoder = *opts.feasible_precoder;
    } else {
      try {
        precoder = solve_fd(bundle.channels(), bundle.targets()).beamformer.WD;
      } catch (const SolveError&) {
        out.status.state = SolverState::kInfeasible;
        out.X = CMatrix::Zero(n, n);
        return out;
      }
    }
    scale = std::sqrt(precoder.squaredNorm());
    center = interior_point_from_precoder(bundle, precoder / scale);
  }
  out.status.scale = scale;

  const RealConicProblem rp = real_embed(problem, scale);
  const detail::Barrier barrier(rp, opts.trace_reg, opts.center_weight);

  auto point = barrier.evaluate(center);
  if (!point.interior) {
    out.status.state = SolverState::kInfeasible;
    out.X = CMatrix::Zero(n, n);
    return out;
  }
  const double nu = rp.nu();
  const auto cold_t = [&](const detail::Barrier::Point& p) { return nu / std::max(barrier.objective(p.X), 1e-2); };

  // Path following from (point, t); returns false on numerical failure.
  const auto follow = [&](detail::Barrier::Point point, double t) {
    out.status.barrier_path.clear();
    out.status.merit.clear();
    out.path_point.resize(0, 0);
    out.path_gap = 0.0;
    int iters = 0;
    bool failed = false;
    while (true) {
      out.status.barrier_path.push_back(t);
      std::vector<double> merits{barrier.merit(point, t)};
      for (int k = 0; k < opts.max_stage_iters; ++k) {
        if (iters >= opts.max_iters) break;
        const auto step = barrier.newton(point, t);
        if (!step.ok) {
          failed = true;
          break;
        }
        if (step.decrement_sq / 2.0 <= opts.newton_tol) break;
        ++iters;
        const double phi0 = merits.back();
        double alpha = std::min(1.0, 0.99 * step.max_step);
        std::optional<detail::Barrier::Point> accepted;
        while (alpha > 1e-14) {
          auto cand = barrier.evaluate(point.X + alpha * step.direction);
          if (cand.interior) {
            const double phi = barrier.merit(cand, t);
            if (phi <= phi0 - 0.01 * alpha * step.decrement_sq) {
              merits.push_back(phi);
              accepted = std::move(cand);
              break;
            }
          }
          alpha *= 0.5;
        }
        if (!accepted) {
          // No progress possible at working precision; fine only if nearly centered.
          if (step.decrement_sq > 1e-6) failed = true;
          break;
        }
        const bool stalled = phi0 - merits.back() <= 64.0 * std::numeric_limits<double>::epsilon() * std::abs(phi0);
        point = std::move(*accepted);
        // Merit changes below rounding level: centered as well as working precision allows.
        if (stalled && step.decrement_sq / 2.0 <= 1e-6) break;
      }
      out.status.merit.push_back(std::move(merits));
      if (failed) break;
      if (nu / t >= opts.snapshot_gap) {
        out.path_point = scale * point.X;
        out.path_gap = scale * scale * nu / t;
      }
      if (iters >= opts.max_iters) break;
      if (nu / t <= opts.gap_tol) break;
      t /= opts.barrier_reduction;
    }
    out.X = scale * point.X;
    out.status.iterations += iters;
    // The tr X term of the merit adds center_weight tr X / t to the barrier bound.
    out.status.duality_gap = scale * scale * (nu + opts.center_weight * point.X.trace().real()) / t;
    if (failed) {
      out.status.state = SolverState::kNumericalFailure;
    } else if (nu / t > opts.gap_tol) {
      out.status.state = SolverState::kMaxIters;
    } else {
      out.status.state = SolverState::kOptimal;
    }
    return !failed;
  };

  bool done = false;
  if (warm_start) {
    detail::require(warm_start->rows() == n && warm_start->cols() == n, "warm start has wrong size");
    if (opts.warm_gap) {
      // A central point of a nearby problem: resume the path where it was taken, falling
      // back to the ordinary start if that fails.
      auto direct = barrier.evaluate(*warm_start / scale);
      const double t_cold = direct.interior ? cold_t(direct) : 0.0;
      double tw = nu * scale * scale / *opts.warm_gap;
      for (int level = 0; direct.interior && level < 3 && tw > t_cold; ++level, tw *= opts.barrier_reduction) {
        const auto step = barrier.newton(direct, tw);
        if (step.ok && step.decrement_sq >= 0.0 && step.decrement_sq <= opts.warm_centrality) {
          done = follow(std::move(direct), tw);
          break;
        }
      }
    }
    if (!done) {
      auto blended = barrier.evaluate(opts.warm_weight * (*warm_start / scale) + (1.0 - opts.warm_weight) * center);
      if (blended.interior) point = std::move(blended);
    }
  }
  if (!done) {
    const double t0 = cold_t(point);
    follow(std::move(point), t0);
  }
  out.objective = out.X.topRightCorner(bundle.M(), bundle.K()).squaredNorm() + pairing(problem.linear, out.X);
  return out;
}

}  // namespace hbf::conic
