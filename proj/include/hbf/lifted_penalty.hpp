#pragma once

// Hybrid design for more users than RF chains (K > N).
//
// The pair (V, W) is lifted to X = U U^H with U = [V; W^H]; the rank bound rank(X) <= N is
// replaced by the penalty mu * (tr X - sum of the N largest eigenvalues), written as
// min over the projector set of Re tr(P^H X). The penalized problem is minimized by
// alternating an eigenvector update of P with a conic solve for X, doubling mu until the
// penalty vanishes. (V, W) is then read off the top-N eigenpairs of X.

#include <hbf/conic_subproblem.hpp>
#include <hbf/hybrid_exact.hpp>
#include <hbf/rng.hpp>

#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

namespace hbf {

struct PenaltyConfig {
  double mu0 = 1.0;  // in units of sqrt(fully-digital power)
  double mu_growth = 2.0;
  double rank_tol = 1e-6;  // penalty_term <= rank_tol * tr X
  double inner_tol = 1e-6;
  int max_inner = 200;
  int max_outer = 12;
  std::uint64_t seed = 0;
  bool restart_each_outer = false;  // redraw X^(0) at every mu instead of continuing
  double feas_tol = kFeasTol;
  FdOptions fd;
  conic::ConicOptions conic;

  void validate() const {
    detail::require(mu0 > 0.0, "mu0 must be positive");
    detail::require(mu_growth > 1.0, "mu growth must exceed 1");
    detail::require(rank_tol > 0.0 && inner_tol > 0.0, "tolerances must be positive");
    detail::require(max_inner >= 1 && max_outer >= 1, "iteration caps must be positive");
  }
};

struct PenaltyRecord {
  int outer = 0;
  double mu = 0.0;
  int inner = 0;
  double objective = 0.0;  // ||S_v X S_w||^2 + mu Re tr(P^H X)
  double penalty = 0.0;    // tr X - sum of N largest eigenvalues
  double max_sinr_violation = 0.0;  // of the rank-N truncation
};

struct PenaltyTrace {
  std::vector<PenaltyRecord> records;
  std::vector<double> mu_values;  // one per outer iteration

  void write_csv(std::ostream& os) const {
    os << "outer,mu,inner,objective,penalty_term,max_sinr_violation\n";
    const auto prec = os.precision(17);
    for (const auto& r : records)
      os << r.outer << ',' << r.mu << ',' << r.inner << ',' << r.objective << ',' << r.penalty << ','
         << r.max_sinr_violation << '\n';
    os.precision(prec);
  }
};

struct PenaltySolution {
  HybridBeamformer beamformer;
  SolveReport report;
  PenaltyTrace trace;
  CMatrix X;
  double repair_delta = 0.0;  // W was scaled by sqrt(1 + delta) after truncation
  double final_mu = 0.0;
  double penalty = 0.0;
  int outer_iterations = 0;
  int newton_steps = 0;  // summed over all conic solves
};

/// One X-update: minimize ||S_v X S_w||^2 + mu Re tr(P^H X) over the lifted constraints.
inline conic::ConicSolution solve_x_subproblem(const ConstraintBundle& bundle, const CMatrix& P, double mu,
                                               const std::optional<CMatrix>& warm_start = std::nullopt,
                                               const conic::ConicOptions& opts = {}) {
  detail::require(mu >= 0.0, "penalty weight must be non-negative");
  conic::ConicProblem problem{bundle, mu * detail::hermitian_part(P), true};
  auto sol = conic::solve(problem, warm_start, opts);
  switch (sol.status.state) {
    case conic::SolverState::kOptimal: return sol;
    case conic::SolverState::kInfeasible: throw SolveError(Status::kInfeasible, "lifted constraint set is empty");
    case conic::SolverState::kMaxIters: throw SolveError(Status::kNoConvergence, "conic solve hit its iteration cap");
    case conic::SolverState::kNumericalFailure: break;
  }
  throw SolveError(Status::kNumericalFailure, "conic solve failed");
}

namespace detail {

struct Extraction {
  CMatrix V, W;
};

/// Top-N eigenpairs of X split as U = [V; W^H].
inline Extraction extract_factors(const CMatrix& X, Eigen::Index M, Eigen::Index N) {
  const auto eig = sorted_eigen(X);
  const CMatrix U = eig.vectors.leftCols(N) * eig.values.head(N).cwiseMax(0.0).cwiseSqrt().cast<Complex>().asDiagonal();
  return {U.topRows(M), U.bottomRows(X.rows() - M).adjoint()};
}

inline double max_sinr_violation(const ChannelSet& ch, const SinrTargets& targets, const CMatrix& V, const CMatrix& W) {
  return std::max(0.0, (targets.eta() - sinr_all(ch, V, W)).maxCoeff());
}

inline CMatrix random_lifted_start(Eigen::Index n, double trace, std::uint64_t seed) {
  Rng rng(seed);
  const CMatrix A = rng.complex_normal(n, n);
  CMatrix X = A * A.adjoint();
  return hermitian_part(X * (trace / X.trace().real()));
}

/// Smallest uniform scaling W <- sqrt(1 + delta) W restoring every SINR target.
inline double repair_scaling(const ChannelSet& ch, const SinrTargets& targets, const CMatrix& V, const CMatrix& W) {
  const CMatrix rows = ch.G() * V * W;
  double need = 1.0;
  for (Eigen::Index k = 0; k < ch.K(); ++k) {
    const double signal = std::norm(rows(k, k));
    const double interference = rows.row(k).squaredNorm() - signal;
    const double margin = signal - targets(k) * interference;
    if (!(margin > 0.0)) throw SolveError(Status::kNumericalFailure, "rank-N truncation cannot meet SINR targets");
    need = std::max(need, targets(k) * ch.sigma2()(k) / margin);
  }
  return need - 1.0;
}

inline PenaltySolution solve_penalty_unchecked(const ChannelSet& ch, const SinrTargets& targets, Eigen::Index N,
                                               const PenaltyConfig& cfg, PenaltyTrace* trace_out) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  const Eigen::Index M = ch.M(), K = ch.K(), n = M + K;
  const ConstraintBundle bundle = lift_constraint_data(ch, targets);

  const FdSolveReport fd = solve_fd(ch, targets, cfg.fd);
  conic::ConicOptions copts = cfg.conic;
  copts.feasible_precoder = fd.beamformer.WD;

  const double start_trace = fd.power * (1.0 + static_cast<double>(K) / static_cast<double>(M));
  PenaltyTrace trace;
  CMatrix X = random_lifted_start(n, start_trace, split_seed(cfg.seed, {0}));
  bool feasible_iterate = false;
  CMatrix path;  // central point of the latest subproblem, reused as its successor's warm start
  double path_gap = 0.0;
  double mu = cfg.mu0 * std::sqrt(fd.power);
  bool rank_reached = false;
  int outer = 0;
  int newton_total = 0;
  double pen = std::numeric_limits<double>::infinity();

  for (; outer < cfg.max_outer; ++outer) {
    if (outer > 0 && cfg.restart_each_outer) {
      X = random_lifted_start(n, start_trace, split_seed(cfg.seed, {static_cast<std::uint64_t>(outer)}));
      feasible_iterate = false;
      path.resize(0, 0);
    }
    trace.mu_values.push_back(mu);
    double prev = std::numeric_limits<double>::quiet_NaN();
    int small_changes = 0;
    for (int inner = 1; inner <= cfg.max_inner; ++inner) {
      const CMatrix P = update_projection(X, N);
      std::optional<CMatrix> warm;
      if (path.size() > 0) {
        warm = path;
        copts.warm_gap = path_gap;
      } else if (feasible_iterate) {
        warm = X;
        copts.warm_gap.reset();
      }
      auto sol = solve_x_subproblem(bundle, P, mu, warm, copts);
      newton_total += sol.status.iterations;
      path = std::move(sol.path_point);
      path_gap = sol.path_gap;
      CMatrix next = std::move(sol.X);
      double obj = next.topRightCorner(M, K).squaredNorm() + mu * pairing(P, next);
      if (feasible_iterate) {
        // Keep the previous iterate if the inexact solve did not improve on it.
        const double stay = X.topRightCorner(M, K).squaredNorm() + mu * pairing(P, X);
        if (stay <= obj) {
          next = X;
          obj = stay;
        }
      }
      X = std::move(next);
      feasible_iterate = true;

      const auto f = extract_factors(X, M, N);
      PenaltyRecord rec;
      rec.outer = outer;
      rec.mu = mu;
      rec.inner = inner;
      rec.objective = obj;
      rec.penalty = penalty_term(X, N);
      rec.max_sinr_violation = max_sinr_violation(ch, targets, f.V, f.W);
      trace.records.push_back(rec);

      if (std::isfinite(prev)) {
        const double rel = std::abs(prev - obj) / std::max(std::abs(obj), std::numeric_limits<double>::min());
        small_changes = rel < cfg.inner_tol ? small_changes + 1 : 0;
        if (small_changes >= 2) break;
      }
      prev = obj;
    }
    pen = penalty_term(X, N);
    if (pen <= cfg.rank_tol * X.trace().real()) {
      rank_reached = true;
      ++outer;
      break;
    }
    mu *= cfg.mu_growth;
  }
  if (trace_out) *trace_out = trace;
  if (!rank_reached)
    throw SolveError(Status::kRankNotReached, "penalty did not vanish within the outer iteration cap");

  auto f = extract_factors(X, M, N);
  f.W = phase_normalize(ch, f.V, f.W);
  const double delta = repair_scaling(ch, targets, f.V, f.W);
  if (delta > 0.0) f.W *= std::sqrt(1.0 + delta);

  PenaltySolution out;
  out.beamformer = {std::move(f.V), std::move(f.W)};
  const auto check = check_feasible(ch, targets, out.beamformer.V, out.beamformer.W, cfg.feas_tol);
  out.report.power = power(out.beamformer.V, out.beamformer.W);
  out.report.feasible = check.feasible;
  out.report.sinr_slack = check.slack;
  out.report.iterations = static_cast<int>(trace.records.size());
  out.trace = std::move(trace);
  out.X = std::move(X);
  out.repair_delta = delta;
  out.final_mu = mu;
  out.penalty = pen;
  out.outer_iterations = outer;
  out.newton_steps = newton_total;
  out.report.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace detail

/// Stationary hybrid design for K > N. Throws Infeasible when the SINR targets cannot be met
/// at all, RankNotReached when mu stops growing before the penalty vanishes.
inline PenaltySolution solve_penalty(const ChannelSet& ch, const SinrTargets& targets, Eigen::Index N,
                                     const PenaltyConfig& cfg = {}, PenaltyTrace* trace = nullptr) {
  if (ch.K() <= N) throw SolveError(Status::kDimensionError, "penalty design is for K > N; use solve_exact");
  detail::require(N >= 1, "need at least one RF chain");
  detail::require(ch.K() <= ch.M(), "penalty design needs K <= M");
  return detail::solve_penalty_unchecked(ch, targets, N, cfg, trace);
}

}  // namespace hbf
