#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hbf {

enum class Status {
  kOk,
  kInfeasible,
  kNoConvergence,
  kRankNotReached,
  kRankDeficient,
  kDimensionError,
  kMaxIters,
  kNumericalFailure,
};

inline std::string_view to_string(Status s) {
  switch (s) {
    case Status::kOk: return "ok";
    case Status::kInfeasible: return "infeasible";
    case Status::kNoConvergence: return "no_convergence";
    case Status::kRankNotReached: return "rank_not_reached";
    case Status::kRankDeficient: return "rank_deficient";
    case Status::kDimensionError: return "dimension_error";
    case Status::kMaxIters: return "max_iters";
    case Status::kNumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

/// Error raised by every solver and evaluator in the library.
class SolveError : public std::runtime_error {
 public:
  SolveError(Status status, const std::string& what)
      : std::runtime_error(std::string(to_string(status)) + ": " + what), status_(status) {}

  Status status() const noexcept { return status_; }

 private:
  Status status_;
};

namespace detail {

inline void require(bool cond, const char* what) {
  if (!cond) throw SolveError(Status::kDimensionError, what);
}

}  // namespace detail
}  // namespace hbf
