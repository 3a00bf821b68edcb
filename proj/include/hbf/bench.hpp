#pragma once

// Seeded multi-trial experiment sweeps over (M, N, K) with per-scheme power and timing rows.
//
// Every (point, trial) draws one channel from split_seed(seed, {M, N, K, trial}); all schemes
// of that trial see the same ChannelSet. Trials run on a small thread pool and rows are
// returned in (point, trial, scheme) order regardless of completion order.

#include <hbf/baselines.hpp>
#include <hbf/channel_gen.hpp>
#include <hbf/hybrid_exact.hpp>
#include <hbf/lifted_penalty.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace hbf::bench {

enum class Scheme { kFd, kHybrid, kHybridExact, kHybridPenalty, kZf, kMrt };

inline std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::kFd: return "fd";
    case Scheme::kHybrid: return "hybrid";
    case Scheme::kHybridExact: return "hybrid-exact";
    case Scheme::kHybridPenalty: return "hybrid-penalty";
    case Scheme::kZf: return "zf";
    case Scheme::kMrt: return "mrt";
  }
  return "unknown";
}

inline std::optional<Scheme> parse_scheme(std::string_view s) {
  for (Scheme c : {Scheme::kFd, Scheme::kHybrid, Scheme::kHybridExact, Scheme::kHybridPenalty, Scheme::kZf,
                   Scheme::kMrt})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

enum class Normalize { kNone, kFd };

/// Thrown for invalid experiment configurations (the CLI maps it to exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Point {
  Eigen::Index M = 0, N = 0, K = 0;
  auto operator<=>(const Point&) const = default;
};

struct ExperimentConfig {
  std::vector<Eigen::Index> M{12}, N{3}, K{5};
  double eta = std::numbers::sqrt2 - 1.0;
  double sigma2 = 1.0;
  double delta_deg = 15.0;
  double antenna_spacing = 0.5;
  int trials = 30;
  std::uint64_t seed = 0;
  std::vector<Scheme> schemes{Scheme::kFd, Scheme::kHybrid, Scheme::kZf, Scheme::kMrt};
  Normalize normalize = Normalize::kNone;
  int threads = 1;
  bool timing = true;  // false writes wall_time_ms = 0 so repeated runs are byte-identical
  std::optional<std::filesystem::path> trace_dir;
  bool keep_traces = false;  // attach penalty traces to the returned rows
  PenaltyConfig penalty;
  ExactOptions exact;

  /// Sweep points, M outermost.
  std::vector<Point> points() const {
    std::vector<Point> out;
    for (auto m : M)
      for (auto n : N)
        for (auto k : K) out.push_back({m, n, k});
    return out;
  }

  /// The concrete scheme run at `p` (resolves `hybrid`).
  static Scheme resolve(Scheme s, const Point& p) {
    if (s != Scheme::kHybrid) return s;
    return p.K <= p.N ? Scheme::kHybridExact : Scheme::kHybridPenalty;
  }

  void validate() const {
    auto fail = [](const std::string& what) { throw ConfigError(what); };
    if (M.empty() || N.empty() || K.empty()) fail("sweep lists must be non-empty");
    if (trials < 1) fail("trials must be at least 1");
    if (schemes.empty()) fail("at least one scheme is required");
    if (threads < 1) fail("threads must be at least 1");
    if (!(eta > 0.0) || !std::isfinite(eta)) fail("eta must be positive");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) fail("sigma2 must be positive");
    if (!(delta_deg > 0.0 && delta_deg < 90.0)) fail("delta-deg must lie in (0, 90)");
    if (normalize == Normalize::kFd && std::find(schemes.begin(), schemes.end(), Scheme::kFd) == schemes.end())
      fail("--normalize fd needs the fd scheme");
    for (const Point& p : points()) {
      const std::string at =
          " at M=" + std::to_string(p.M) + " N=" + std::to_string(p.N) + " K=" + std::to_string(p.K);
      if (p.M < 1 || p.N < 1 || p.K < 1) fail("dimensions must be positive" + at);
      if (p.K > p.M) fail("K must not exceed M" + at);
      if (p.N > p.M) fail("N must not exceed M" + at);
      for (Scheme s : schemes) {
        if (s == Scheme::kHybridExact && p.K > p.N) fail("hybrid-exact needs K <= N" + at);
        if (s == Scheme::kHybridPenalty && p.K <= p.N) fail("hybrid-penalty needs K > N" + at);
      }
    }
  }
};

struct Row {
  Point point;
  int trial = 0;
  Scheme scheme = Scheme::kFd;
  Status status = Status::kOk;
  double power = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  double wall_time_ms = 0.0;
  std::uint64_t channel_hash = 0;
  std::string extra;
  double min_slack = std::numeric_limits<double>::quiet_NaN();  // min_k SINR_k - eta_k
  double rank_ratio = std::numeric_limits<double>::quiet_NaN();  // penalty_term / tr X (penalty only)
  double fd_power = std::numeric_limits<double>::quiet_NaN();    // hybrid rows: optimum of the relaxation
  std::optional<PenaltyTrace> trace;

  bool feasible() const { return status == Status::kOk; }
};

/// FNV-1a over the dimensions and the raw bytes of G and the noise powers.
inline std::uint64_t channel_hash(const ChannelSet& ch) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::int64_t dims[2] = {static_cast<std::int64_t>(ch.K()), static_cast<std::int64_t>(ch.M())};
  feed(dims, sizeof dims);
  for (Eigen::Index m = 0; m < ch.M(); ++m)
    for (Eigen::Index k = 0; k < ch.K(); ++k) {
      const double re = ch.G()(k, m).real(), im = ch.G()(k, m).imag();
      feed(&re, sizeof re);
      feed(&im, sizeof im);
    }
  for (Eigen::Index k = 0; k < ch.K(); ++k) {
    const double s = ch.sigma2()(k);
    feed(&s, sizeof s);
  }
  return h;
}

inline std::uint64_t trial_seed(std::uint64_t seed, const Point& p, int trial) {
  return split_seed(seed, {static_cast<std::uint64_t>(p.M), static_cast<std::uint64_t>(p.N),
                           static_cast<std::uint64_t>(p.K), static_cast<std::uint64_t>(trial)});
}

namespace detail {

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  return s;
}

inline double min_coeff(const RVector& v) { return v.size() ? v.minCoeff() : 0.0; }

inline std::filesystem::path trace_path(const std::filesystem::path& dir, const Point& p, int trial) {
  return dir / ("penalty_m" + std::to_string(p.M) + "_n" + std::to_string(p.N) + "_k" + std::to_string(p.K) +
                "_trial" + std::to_string(trial) + ".csv");
}

inline Row run_scheme(const ExperimentConfig& cfg, const Point& p, int trial, Scheme scheme, const ChannelSet& ch,
                      std::uint64_t seed, std::uint64_t hash) {
  const SinrTargets targets = SinrTargets::uniform(p.K, cfg.eta);
  Row row;
  row.point = p;
  row.trial = trial;
  row.scheme = scheme;
  row.channel_hash = hash;
  const auto t0 = std::chrono::steady_clock::now();
  auto finish_fd = [&](const FdSolveReport& r) {
    row.power = r.power;
    row.iterations = r.iterations;
    row.min_slack = min_coeff(r.sinr_slack);
    row.status = row.min_slack >= -kFeasTol ? Status::kOk : Status::kInfeasible;
  };
  try {
    switch (scheme) {
      case Scheme::kFd: finish_fd(solve_fd(ch, targets)); break;
      case Scheme::kZf: finish_fd(zf_beamformer(ch, targets)); break;
      case Scheme::kMrt: finish_fd(mrt_beamformer(ch, targets)); break;
      case Scheme::kHybridExact: {
        ExactOptions opts = cfg.exact;
        opts.seed = split_seed(seed, {1});
        const HybridSolution sol = solve_exact(ch, targets, p.N, opts);
        row.power = sol.report.power;
        row.iterations = sol.report.iterations;
        row.min_slack = min_coeff(sol.report.sinr_slack);
        row.status = sol.report.feasible ? Status::kOk : Status::kInfeasible;
        break;
      }
      case Scheme::kHybridPenalty: {
        PenaltyConfig pc = cfg.penalty;
        pc.seed = split_seed(seed, {2});
        PenaltyTrace trace;
        try {
          const PenaltySolution sol = solve_penalty(ch, targets, p.N, pc, &trace);
          row.power = sol.report.power;
          row.iterations = sol.report.iterations;
          row.min_slack = min_coeff(sol.report.sinr_slack);
          row.rank_ratio = sol.penalty / sol.X.trace().real();
          row.status = sol.report.feasible ? Status::kOk : Status::kInfeasible;
          row.extra = "delta=" + fmt_double(sol.repair_delta) + ";mu=" + fmt_double(sol.final_mu) +
                      ";outer=" + std::to_string(sol.outer_iterations) +
                      ";newton=" + std::to_string(sol.newton_steps) + ";rank_ratio=" + fmt_double(row.rank_ratio);
        } catch (...) {
          if (cfg.keep_traces) row.trace = trace;
          if (cfg.trace_dir) {
            std::ofstream os(trace_path(*cfg.trace_dir, p, trial));
            trace.write_csv(os);
          }
          throw;
        }
        if (cfg.keep_traces) row.trace = trace;
        if (cfg.trace_dir) {
          std::ofstream os(trace_path(*cfg.trace_dir, p, trial));
          trace.write_csv(os);
        }
        break;
      }
      case Scheme::kHybrid: throw SolveError(Status::kDimensionError, "unresolved hybrid scheme");
    }
  } catch (const SolveError& e) {
    row.status = e.status();
    row.power = std::numeric_limits<double>::quiet_NaN();
    row.extra = sanitize(e.what());
  } catch (const std::exception& e) {
    row.status = Status::kNumericalFailure;
    row.power = std::numeric_limits<double>::quiet_NaN();
    row.extra = sanitize(e.what());
  }
  if (cfg.timing)
    row.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

}  // namespace detail

/// Runs every point, trial and scheme. Solver errors are recorded in the rows; only an
/// invalid configuration throws (ConfigError).
inline std::vector<Row> run(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.trace_dir) std::filesystem::create_directories(*cfg.trace_dir);
  const std::vector<Point> points = cfg.points();

  std::vector<OneRingModel> models;
  models.reserve(points.size());
  for (const Point& p : points) {
    OneRingConfig oc;
    oc.M = p.M;
    oc.K = p.K;
    oc.delta_deg = cfg.delta_deg;
    oc.antenna_spacing = cfg.antenna_spacing;
    models.emplace_back(oc);
  }

  const std::size_t n_tasks = points.size() * static_cast<std::size_t>(cfg.trials);
  std::vector<std::vector<Row>> results(n_tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < n_tasks; t = next++) {
      const std::size_t pi = t / static_cast<std::size_t>(cfg.trials);
      const int trial = static_cast<int>(t % static_cast<std::size_t>(cfg.trials));
      const Point& p = points[pi];
      const std::uint64_t seed = trial_seed(cfg.seed, p, trial);
      const ChannelSet ch = models[pi].draw(seed, cfg.sigma2);
      const std::uint64_t hash = channel_hash(ch);
      double fd_power = std::numeric_limits<double>::quiet_NaN();
      try {
        fd_power = solve_fd(ch, SinrTargets::uniform(p.K, cfg.eta)).power;
      } catch (const SolveError&) {
      }
      for (Scheme s : cfg.schemes) {
        Row row = detail::run_scheme(cfg, p, trial, ExperimentConfig::resolve(s, p), ch, seed, hash);
        if (row.scheme == Scheme::kHybridExact || row.scheme == Scheme::kHybridPenalty) row.fd_power = fd_power;
        results[t].push_back(std::move(row));
      }
    }
  };
  const int n_threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), n_tasks));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<Row> rows;
  for (auto& r : results)
    for (auto& row : r) rows.push_back(std::move(row));
  return rows;
}

inline constexpr std::string_view kCsvHeader =
    "m,n,k,trial,scheme,status,power,iterations,wall_time_ms,channel_hash,extra";

inline void write_csv(std::ostream& os, const std::vector<Row>& rows) {
  os << kCsvHeader << '\n';
  char hash[24];
  for (const Row& r : rows) {
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.channel_hash));
    os << r.point.M << ',' << r.point.N << ',' << r.point.K << ',' << r.trial << ',' << to_string(r.scheme) << ','
       << hbf::to_string(r.status) << ',' << detail::fmt_double(r.power) << ',' << r.iterations << ','
       << detail::fmt_double(r.wall_time_ms) << ',' << hash << ',' << r.extra << '\n';
  }
}

inline bool any_numerical_failure(const std::vector<Row>& rows) {
  return std::any_of(rows.begin(), rows.end(), [](const Row& r) { return r.status == Status::kNumericalFailure; });
}

struct Summary {
  Point point;
  Scheme scheme = Scheme::kFd;
  int count = 0;
  int feasible = 0;
  double mean_power = std::numeric_limits<double>::quiet_NaN();  // feasible rows only
  double std_power = std::numeric_limits<double>::quiet_NaN();   // sample (n-1) convention; 0 for one row
  double mean_time_ms = std::numeric_limits<double>::quiet_NaN();  // all rows
  double std_time_ms = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace detail

/// Groups rows by (M, N, K, scheme) in first-appearance order. With Normalize::kFd the power
/// statistics are divided by the feasible fd mean at the same point.
inline std::vector<Summary> summarize(const std::vector<Row>& rows, Normalize normalize = Normalize::kNone) {
  hbf::detail::require(!rows.empty(), "summarize needs at least one row");
  std::vector<std::pair<Point, Scheme>> order;
  std::map<std::pair<Point, Scheme>, std::pair<std::vector<double>, std::vector<double>>> groups;
  std::map<std::pair<Point, Scheme>, int> counts;
  for (const Row& r : rows) {
    const auto key = std::make_pair(r.point, r.scheme);
    if (!counts.count(key)) order.push_back(key);
    ++counts[key];
    auto& g = groups[key];
    if (r.feasible()) g.first.push_back(r.power);
    g.second.push_back(r.wall_time_ms);
  }
  std::vector<Summary> out;
  for (const auto& key : order) {
    const auto& g = groups[key];
    Summary s;
    s.point = key.first;
    s.scheme = key.second;
    s.count = counts[key];
    s.feasible = static_cast<int>(g.first.size());
    std::tie(s.mean_power, s.std_power) = detail::mean_std(g.first);
    std::tie(s.mean_time_ms, s.std_time_ms) = detail::mean_std(g.second);
    out.push_back(s);
  }
  if (normalize == Normalize::kFd) {
    std::map<Point, double> ref;
    for (const Summary& s : out)
      if (s.scheme == Scheme::kFd) ref[s.point] = s.mean_power;
    for (Summary& s : out) {
      const auto it = ref.find(s.point);
      const double d = it == ref.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
      s.mean_power /= d;
      s.std_power /= d;
    }
  }
  return out;
}

inline void write_summary(std::ostream& os, const std::vector<Summary>& summary) {
  os << "m,n,k,scheme,count,feasible,mean_power,std_power,mean_time_ms,std_time_ms\n";
  for (const Summary& s : summary)
    os << s.point.M << ',' << s.point.N << ',' << s.point.K << ',' << to_string(s.scheme) << ',' << s.count << ','
       << s.feasible << ',' << detail::fmt_double(s.mean_power) << ',' << detail::fmt_double(s.std_power) << ','
       << detail::fmt_double(s.mean_time_ms) << ',' << detail::fmt_double(s.std_time_ms) << '\n';
}

}  // namespace hbf::bench
