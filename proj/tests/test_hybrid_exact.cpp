#include <hbf/channel_gen.hpp>
#include <hbf/hybrid_exact.hpp>

#include <gtest/gtest.h>

using namespace hbf;

namespace {

ChannelSet one_ring(Eigen::Index M, Eigen::Index K, std::uint64_t seed) {
  OneRingConfig cfg;
  cfg.M = M;
  cfg.K = K;
  cfg.seed = seed;
  return draw_channels(cfg);
}

double smallest_singular_value(const CMatrix& W) {
  return Eigen::JacobiSVD<CMatrix>(W).singularValues().tail(1)(0);
}

}  // namespace

TEST(DigitalSeed, FullColumnRank) {
  const CMatrix W = construct_digital_seed(3, 2, 5);
  EXPECT_EQ(W.rows(), 3);
  EXPECT_EQ(W.cols(), 2);
  EXPECT_GT(smallest_singular_value(W), 0.0);
  EXPECT_EQ(construct_digital_seed(3, 2, 5), W);
  EXPECT_THROW(construct_digital_seed(2, 3, 0), SolveError);
}

TEST(DigitalSeed, FallbackWhenDrawsAreRejected) {
  SeedOptions opts;
  opts.cond_floor = 2.0;  // no draw can satisfy sigma_min >= 2 sigma_max
  const CMatrix W = construct_digital_seed(4, 2, 1, opts);
  CMatrix expected = CMatrix::Zero(4, 2);
  expected.topRows(2).setIdentity();
  EXPECT_EQ(W, expected);
}

TEST(SolveExact, IdentitySeedReproducesFullyDigital) {
  const ChannelSet ch = one_ring(8, 3, 1);
  const auto targets = SinrTargets::uniform(3, 1.0);
  ExactOptions opts;
  opts.digital_seed = CMatrix::Identity(3, 3);
  const auto sol = solve_exact(ch, targets, 3, opts);
  const auto fd = solve_fd(ch, targets);
  EXPECT_LT((sol.beamformer.V - fd.beamformer.WD).norm(), 1e-12 * fd.beamformer.WD.norm());
  EXPECT_EQ(sol.beamformer.W, CMatrix::Identity(3, 3));
}

TEST(SolveExact, SingleUserComposesMrt) {
  Rng rng(2);
  const ChannelSet ch(rng.complex_normal(1, 4));
  const auto targets = SinrTargets::uniform(1, 2.0);
  const auto sol = solve_exact(ch, targets, 2);
  const double g2 = ch.G().squaredNorm();
  const CVector mrt = std::sqrt(2.0) / g2 * ch.g(0);
  EXPECT_LT((sol.beamformer.V * sol.beamformer.W - mrt).norm(), 1e-10 * mrt.norm());
}

TEST(SolveExact, PowerEqualityAndReconstruction) {
  for (std::uint64_t s = 0; s < 15; ++s) {
    const Eigen::Index M = 16, N = 6, K = 2 + static_cast<Eigen::Index>(s % 5);
    const ChannelSet ch = one_ring(M, K, s);
    const auto targets = SinrTargets::uniform(K, std::sqrt(2.0) - 1.0);
    ExactOptions opts;
    opts.seed = s;
    const auto sol = solve_exact(ch, targets, N, opts);
    const auto fd = solve_fd(ch, targets);
    const CMatrix VW = sol.beamformer.V * sol.beamformer.W;
    EXPECT_LT((VW - fd.beamformer.WD).norm() / fd.beamformer.WD.norm(), 1e-10);
    EXPECT_NEAR(sol.report.power, fd.power, 1e-8 * fd.power);
    EXPECT_TRUE(sol.report.feasible);
    EXPECT_TRUE(check_feasible(ch, targets, sol.beamformer.V, sol.beamformer.W).feasible);
    EXPECT_EQ(sol.beamformer.V.rows(), M);
    EXPECT_EQ(sol.beamformer.V.cols(), N);
    EXPECT_GE(sol.report.wall_time_ms, 0.0);
  }
}

TEST(SolveExact, SeedIndependence) {
  const ChannelSet ch = one_ring(12, 3, 9);
  const auto targets = SinrTargets::uniform(3, 1.5);
  ExactOptions a, b;
  a.seed = 1;
  b.seed = 2;
  const auto sa = solve_exact(ch, targets, 5, a), sb = solve_exact(ch, targets, 5, b);
  EXPECT_GT((sa.beamformer.W - sb.beamformer.W).norm(), 1e-3);
  EXPECT_NEAR(sa.report.power, sb.report.power, 1e-8 * sa.report.power);
}

TEST(SolveExact, Errors) {
  const ChannelSet ch = one_ring(8, 4, 3);
  const auto targets = SinrTargets::uniform(4, 1.0);
  try {
    solve_exact(ch, targets, 3);
    FAIL() << "K > N must be rejected";
  } catch (const SolveError& e) {
    EXPECT_EQ(e.status(), Status::kDimensionError);
  }
  CMatrix G(2, 3);
  G.row(0) << 1.0, 0.5, 0.0;
  G.row(1) = G.row(0);
  try {
    solve_exact(ChannelSet(G), SinrTargets::uniform(2, 2.0), 2);
    FAIL() << "infeasible targets must propagate";
  } catch (const SolveError& e) {
    EXPECT_EQ(e.status(), Status::kInfeasible);
  }
}
