#include <hbf/bench.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <set>
#include <sstream>

using namespace hbf;
using namespace hbf::bench;

namespace {

std::string csv(const std::vector<Row>& rows) {
  std::ostringstream os;
  write_csv(os, rows);
  return os.str();
}

Row make_row(double power, Status status = Status::kOk) {
  Row r;
  r.point = {4, 2, 2};
  r.scheme = Scheme::kZf;
  r.power = power;
  r.status = status;
  r.wall_time_ms = 1.0;
  return r;
}

ExperimentConfig small(Eigen::Index M, Eigen::Index N, Eigen::Index K, int trials, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.M = {M};
  cfg.N = {N};
  cfg.K = {K};
  cfg.trials = trials;
  cfg.seed = seed;
  cfg.timing = false;
  return cfg;
}

double mean_of(const std::vector<Summary>& s, Scheme scheme) {
  for (const auto& x : s)
    if (x.scheme == scheme) return x.mean_power;
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

TEST(Summarize, SingleRow) {
  const auto s = summarize({make_row(2.5)});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s[0].mean_power, 2.5);
  EXPECT_DOUBLE_EQ(s[0].std_power, 0.0);
  EXPECT_EQ(s[0].count, 1);
  EXPECT_EQ(s[0].feasible, 1);
}

TEST(Summarize, SampleStandardDeviation) {
  const auto s = summarize({make_row(2.0), make_row(4.0)});
  EXPECT_DOUBLE_EQ(s[0].mean_power, 3.0);
  EXPECT_DOUBLE_EQ(s[0].std_power, std::sqrt(2.0));
}

TEST(Summarize, InfeasibleRowsCountedSeparately) {
  const auto s = summarize({make_row(2.0), make_row(std::nan(""), Status::kInfeasible), make_row(4.0)});
  EXPECT_EQ(s[0].count, 3);
  EXPECT_EQ(s[0].feasible, 2);
  EXPECT_DOUBLE_EQ(s[0].mean_power, 3.0);
  EXPECT_DOUBLE_EQ(s[0].mean_time_ms, 1.0);
  EXPECT_THROW(summarize({}), SolveError);
}

TEST(Summarize, GroupsByPointAndScheme) {
  Row a = make_row(1.0), b = make_row(3.0), c = make_row(5.0);
  b.scheme = Scheme::kMrt;
  c.point.K = 3;
  const auto s = summarize({a, b, c});
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[1].scheme, Scheme::kMrt);
  EXPECT_EQ(s[2].point.K, 3);
}

TEST(Config, Validation) {
  auto cfg = small(12, 3, 5, 2, 0);
  EXPECT_NO_THROW(cfg.validate());
  cfg.schemes = {Scheme::kHybridExact};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small(12, 4, 3, 2, 0);
  cfg.schemes = {Scheme::kHybridPenalty};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small(12, 4, 3, 0, 0);
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small(12, 4, 3, 1, 0);
  cfg.K.clear();
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small(12, 4, 3, 1, 0);
  cfg.schemes.clear();
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small(4, 2, 5, 1, 0);
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small(12, 4, 3, 1, 0);
  cfg.schemes = {Scheme::kZf};
  cfg.normalize = Normalize::kFd;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(run(cfg), ConfigError);
}

TEST(Schemes, NamesRoundTrip) {
  for (Scheme s : {Scheme::kFd, Scheme::kHybrid, Scheme::kHybridExact, Scheme::kHybridPenalty, Scheme::kZf,
                   Scheme::kMrt})
    EXPECT_EQ(parse_scheme(to_string(s)), s);
  EXPECT_FALSE(parse_scheme("sdr").has_value());
  EXPECT_EQ(ExperimentConfig::resolve(Scheme::kHybrid, {8, 4, 4}), Scheme::kHybridExact);
  EXPECT_EQ(ExperimentConfig::resolve(Scheme::kHybrid, {8, 3, 4}), Scheme::kHybridPenalty);
}

TEST(Run, ByteIdenticalReruns) {
  auto cfg = small(12, 4, 3, 5, 7);
  cfg.schemes = {Scheme::kFd, Scheme::kHybrid, Scheme::kZf, Scheme::kMrt};
  const std::string a = csv(run(cfg));
  const std::string b = csv(run(cfg));
  EXPECT_EQ(a, b);
  cfg.threads = 3;
  EXPECT_EQ(csv(run(cfg)), a);
  EXPECT_EQ(a.substr(0, a.find('\n')), "m,n,k,trial,scheme,status,power,iterations,wall_time_ms,channel_hash,extra");
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 1 + 5 * 4);
}

TEST(Run, SameChannelForEverySchemeAndStableDraws) {
  auto cfg = small(10, 4, 3, 4, 11);
  cfg.schemes = {Scheme::kFd, Scheme::kZf};
  const auto rows = run(cfg);
  std::set<std::uint64_t> hashes;
  for (std::size_t i = 0; i < rows.size(); i += 2) {
    EXPECT_EQ(rows[i].channel_hash, rows[i + 1].channel_hash);
    EXPECT_EQ(rows[i].trial, rows[i + 1].trial);
    hashes.insert(rows[i].channel_hash);
  }
  EXPECT_EQ(hashes.size(), 4u);

  // Adding schemes or sweep points leaves the draws of existing points unchanged.
  auto wider = cfg;
  wider.schemes = {Scheme::kMrt, Scheme::kHybrid, Scheme::kFd};
  wider.K = {2, 3};
  const auto more = run(wider);
  for (const Row& r : more)
    if (r.point.K == 3 && r.scheme == Scheme::kFd) {
      EXPECT_EQ(r.channel_hash, rows[2 * static_cast<std::size_t>(r.trial)].channel_hash);
      EXPECT_EQ(r.power, rows[2 * static_cast<std::size_t>(r.trial)].power);
    }
}

TEST(Run, ExactMatchesFullyDigitalOnAverage) {
  auto cfg = small(12, 4, 3, 10, 3);
  cfg.schemes = {Scheme::kFd, Scheme::kHybrid};
  const auto s = summarize(run(cfg));
  const double fd = mean_of(s, Scheme::kFd), ex = mean_of(s, Scheme::kHybridExact);
  EXPECT_NEAR(ex, fd, 1e-6 * fd);
}

TEST(Run, NormalizedSummary) {
  auto cfg = small(12, 4, 3, 4, 3);
  cfg.schemes = {Scheme::kFd, Scheme::kZf};
  const auto s = summarize(run(cfg), Normalize::kFd);
  EXPECT_DOUBLE_EQ(mean_of(s, Scheme::kFd), 1.0);
  EXPECT_GE(mean_of(s, Scheme::kZf), 1.0);
}

TEST(Run, SolverErrorsAreRecorded) {
  auto cfg = small(6, 2, 4, 6, 5);
  cfg.eta = 30.0;
  cfg.schemes = {Scheme::kZf, Scheme::kMrt};
  const auto rows = run(cfg);
  int infeasible = 0;
  for (const Row& r : rows) {
    if (r.scheme == Scheme::kZf) {
      EXPECT_TRUE(r.feasible());
    }
    if (r.scheme == Scheme::kMrt && !r.feasible()) {
      ++infeasible;
      EXPECT_EQ(r.status, Status::kInfeasible);
      EXPECT_TRUE(std::isnan(r.power));
      EXPECT_EQ(r.extra.find(','), std::string::npos);
    }
  }
  EXPECT_GT(infeasible, 0);
  EXPECT_FALSE(any_numerical_failure(rows));
  const auto s = summarize(rows);
  EXPECT_EQ(s[1].count, 6);
  EXPECT_EQ(s[1].feasible, 6 - infeasible);
}

TEST(Run, PenaltyTracesWritten) {
  const auto dir = std::filesystem::temp_directory_path() / "hbf_bench_trace_test";
  std::filesystem::remove_all(dir);
  auto cfg = small(8, 2, 3, 2, 1);
  cfg.schemes = {Scheme::kHybrid};
  cfg.trace_dir = dir;
  cfg.keep_traces = true;
  const auto rows = run(cfg);
  ASSERT_EQ(rows.size(), 2u);
  for (const Row& r : rows) {
    EXPECT_EQ(r.scheme, Scheme::kHybridPenalty);
    EXPECT_TRUE(r.feasible());
    ASSERT_TRUE(r.trace.has_value());
    EXPECT_FALSE(r.trace->records.empty());
    EXPECT_LE(r.rank_ratio, 1e-6);
    EXPECT_NE(r.extra.find("delta="), std::string::npos);
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "penalty_m8_n2_k3_trial0.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "penalty_m8_n2_k3_trial1.csv"));
  std::filesystem::remove_all(dir);
}

// Scheme ordering at (M, N, K) = (12, 3, 5), 30 trials: fd <= hybrid-penalty <= zf on the mean.
TEST(Run, PenaltyOrderingAgainstFullyDigitalAndZf) {
  auto cfg = small(12, 3, 5, 30, 0);
  cfg.schemes = {Scheme::kFd, Scheme::kHybrid, Scheme::kZf, Scheme::kMrt};
  const auto rows = run(cfg);
  const auto s = summarize(rows);
  const double fd = mean_of(s, Scheme::kFd), pen = mean_of(s, Scheme::kHybridPenalty), zf = mean_of(s, Scheme::kZf);
  EXPECT_LE(fd, pen);
  EXPECT_LE(pen, zf);
  // Per trial: the relaxation bound.
  for (const Row& r : rows)
    if (r.scheme == Scheme::kHybridPenalty) {
      ASSERT_TRUE(r.feasible());
      EXPECT_GE(r.power, r.fd_power * (1.0 - 1e-9));
    }
}

// The same sweep against MRT. Under the half-wavelength one-ring model MRT is close to the
// fully-digital optimum at this load and the penalty design does not get below it.
TEST(Run, PenaltyMeanBelowMrtMean) {
  auto cfg = small(12, 3, 5, 30, 0);
  cfg.schemes = {Scheme::kHybrid, Scheme::kMrt};
  const auto s = summarize(run(cfg));
  EXPECT_LE(mean_of(s, Scheme::kHybridPenalty), mean_of(s, Scheme::kMrt));
}
