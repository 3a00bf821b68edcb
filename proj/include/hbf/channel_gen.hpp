#pragma once

// One-ring correlated channels for a uniform linear array.
//
// User k sees scatterers spread uniformly over [theta_k - delta, theta_k + delta]:
//   [R_k]_{m,p} = 1/(2 delta) * int exp(j 2 pi d (m - p) sin(a)) da,
// evaluated with Gauss-Legendre quadrature. Channels are g_k = R_k^{1/2} z_k with
// z_k ~ CN(0, I) drawn from a seeded mt19937_64 stream (see rng.hpp).

#include <hbf/core_model.hpp>
#include <hbf/rng.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace hbf {

struct OneRingConfig {
  Eigen::Index M = 0;
  Eigen::Index K = 0;
  double delta_deg = 15.0;
  double antenna_spacing = 0.5;  // wavelengths
  std::uint64_t seed = 0;
  int quadrature_points = 256;

  void validate() const {
    detail::require(M >= 1 && K >= 1, "one-ring config needs M >= 1 and K >= 1");
    detail::require(delta_deg > 0.0 && delta_deg < 90.0, "angular spread must lie in (0, 90) degrees");
    detail::require(antenna_spacing > 0.0, "antenna spacing must be positive");
    detail::require(quadrature_points >= 32, "at least 32 quadrature points required");
  }
};

inline double wrap_degrees(double deg) {
  double w = std::fmod(deg + 180.0, 360.0);
  if (w <= 0.0) w += 360.0;
  return w - 180.0;
}

/// theta_k = -180 + delta + k * 360 / K (k zero-based), wrapped to (-180, 180].
inline std::vector<double> user_angles(Eigen::Index K, double delta_deg) {
  detail::require(K >= 1, "need at least one user");
  std::vector<double> out(static_cast<std::size_t>(K));
  for (Eigen::Index k = 0; k < K; ++k)
    out[static_cast<std::size_t>(k)] =
        wrap_degrees(-180.0 + delta_deg + static_cast<double>(k) * 360.0 / static_cast<double>(K));
  return out;
}

inline std::vector<double> user_angles(const OneRingConfig& cfg) { return user_angles(cfg.K, cfg.delta_deg); }

/// Array response a(theta)_m = exp(j 2 pi d m sin(theta)).
inline CVector array_response(Eigen::Index M, double theta_deg, double spacing) {
  const double s = std::sin(theta_deg * std::numbers::pi / 180.0);
  CVector a(M);
  for (Eigen::Index m = 0; m < M; ++m)
    a(m) = std::polar(1.0, 2.0 * std::numbers::pi * spacing * static_cast<double>(m) * s);
  return a;
}

namespace detail {

struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Nodes and weights on [-1, 1] by Newton iteration on P_n.
inline GaussLegendre gauss_legendre(int n) {
  GaussLegendre gl{std::vector<double>(static_cast<std::size_t>(n)), std::vector<double>(static_cast<std::size_t>(n))};
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    gl.nodes[static_cast<std::size_t>(i)] = -x;
    gl.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    gl.weights[static_cast<std::size_t>(i)] = w;
    gl.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  return gl;
}

}  // namespace detail

/// Spatial covariance of user k (zero-based).
inline CMatrix covariance(const OneRingConfig& cfg, Eigen::Index k) {
  cfg.validate();
  detail::require(k >= 0 && k < cfg.K, "user index out of range");
  const double theta = user_angles(cfg)[static_cast<std::size_t>(k)] * std::numbers::pi / 180.0;
  const double delta = cfg.delta_deg * std::numbers::pi / 180.0;
  const auto gl = detail::gauss_legendre(cfg.quadrature_points);

  // Toeplitz: R_{m,p} depends only on m - p.
  CVector first(cfg.M);
  for (Eigen::Index l = 0; l < cfg.M; ++l) {
    Complex acc = 0.0;
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
      const double alpha = theta + delta * gl.nodes[q];
      acc += gl.weights[q] *
             std::polar(1.0, 2.0 * std::numbers::pi * cfg.antenna_spacing * static_cast<double>(l) * std::sin(alpha));
    }
    first(l) = 0.5 * acc;  // (1 / 2 delta) * delta * sum
  }
  first(0) = 1.0;
  CMatrix R(cfg.M, cfg.M);
  for (Eigen::Index m = 0; m < cfg.M; ++m)
    for (Eigen::Index p = 0; p < cfg.M; ++p) R(m, p) = m >= p ? first(m - p) : std::conj(first(p - m));

  Eigen::SelfAdjointEigenSolver<CMatrix> es(detail::hermitian_part(R));
  if (es.eigenvalues()(0) < -kPsdTol) {
    const RVector d = es.eigenvalues().cwiseMax(0.0);
    R = es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
  }
  return detail::hermitian_part(R);
}

/// Precomputed covariance square roots for repeated draws with different seeds.
class OneRingModel {
 public:
  explicit OneRingModel(const OneRingConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    roots_.reserve(static_cast<std::size_t>(cfg_.K));
    for (Eigen::Index k = 0; k < cfg_.K; ++k) roots_.push_back(detail::psd_sqrt(covariance(cfg_, k)));
  }

  const OneRingConfig& config() const noexcept { return cfg_; }

  ChannelSet draw(std::uint64_t seed, double sigma2 = 1.0) const {
    Rng rng(seed);
    CMatrix G(cfg_.K, cfg_.M);
    for (Eigen::Index k = 0; k < cfg_.K; ++k) {
      const CVector z = rng.complex_normal(cfg_.M, 1);
      G.row(k) = (roots_[static_cast<std::size_t>(k)] * z).adjoint();
    }
    return ChannelSet(std::move(G), RVector::Constant(cfg_.K, sigma2));
  }

 private:
  OneRingConfig cfg_;
  std::vector<CMatrix> roots_;
};

/// Same seed yields a bit-identical channel set.
inline ChannelSet draw_channels(const OneRingConfig& cfg, double sigma2 = 1.0) {
  return OneRingModel(cfg).draw(cfg.seed, sigma2);
}

// CSV fixtures: two comment lines (config, noise powers), then `user,antenna,re,im`.

inline void write_channels_csv(std::ostream& os, const ChannelSet& ch, const OneRingConfig& cfg) {
  os << "# one_ring M=" << cfg.M << " K=" << cfg.K << " delta_deg=" << std::setprecision(17) << cfg.delta_deg
     << " antenna_spacing=" << cfg.antenna_spacing << " seed=" << cfg.seed
     << " quadrature_points=" << cfg.quadrature_points << "\n";
  os << "# sigma2";
  for (Eigen::Index k = 0; k < ch.K(); ++k) os << (k == 0 ? "=" : ";") << ch.sigma2()(k);
  os << "\nuser,antenna,re,im\n";
  for (Eigen::Index k = 0; k < ch.K(); ++k)
    for (Eigen::Index m = 0; m < ch.M(); ++m)
      os << k << ',' << m << ',' << ch.G()(k, m).real() << ',' << ch.G()(k, m).imag() << '\n';
}

struct ChannelFixture {
  ChannelSet channels;
  OneRingConfig config;
};

inline ChannelFixture read_channels_csv(std::istream& is) {
  std::string line;
  OneRingConfig cfg;
  std::vector<double> sigma2;
  auto fail = [] { throw SolveError(Status::kDimensionError, "malformed channel CSV"); };

  if (!std::getline(is, line) || line.rfind("# one_ring", 0) != 0) fail();
  {
    std::istringstream ss(line.substr(10));
    std::string tok;
    while (ss >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) fail();
      const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      if (key == "M") cfg.M = std::stol(val);
      else if (key == "K") cfg.K = std::stol(val);
      else if (key == "delta_deg") cfg.delta_deg = std::stod(val);
      else if (key == "antenna_spacing") cfg.antenna_spacing = std::stod(val);
      else if (key == "seed") cfg.seed = std::stoull(val);
      else if (key == "quadrature_points") cfg.quadrature_points = std::stoi(val);
    }
  }
  if (!std::getline(is, line) || line.rfind("# sigma2=", 0) != 0) fail();
  {
    std::istringstream ss(line.substr(9));
    std::string tok;
    while (std::getline(ss, tok, ';')) sigma2.push_back(std::stod(tok));
  }
  if (!std::getline(is, line) || line != "user,antenna,re,im") fail();
  if (cfg.M < 1 || cfg.K < 1 || static_cast<Eigen::Index>(sigma2.size()) != cfg.K) fail();

  CMatrix G = CMatrix::Zero(cfg.K, cfg.M);
  std::vector<bool> seen(static_cast<std::size_t>(cfg.K * cfg.M), false);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string f[4];
    for (auto& s : f)
      if (!std::getline(ss, s, ',')) fail();
    const long k = std::stol(f[0]), m = std::stol(f[1]);
    if (k < 0 || k >= cfg.K || m < 0 || m >= cfg.M) fail();
    G(k, m) = Complex(std::stod(f[2]), std::stod(f[3]));
    seen[static_cast<std::size_t>(k * cfg.M + m)] = true;
  }
  for (bool s : seen)
    if (!s) fail();
  return {ChannelSet(std::move(G), Eigen::Map<RVector>(sigma2.data(), cfg.K)), cfg};
}

}  // namespace hbf
