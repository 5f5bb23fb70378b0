#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "deephedge/matrix.hpp"
#include "deephedge/rng.hpp"

namespace deephedge {

/// Geometric Brownian motion dX = X (mu dt + sigma dW) on a uniform grid
/// t_k = k * maturity / n_steps, k = 0..n_steps.
struct MarketParams {
  double mu = 0.08;
  double sigma = 0.3;
  double s0 = 100.0;
  /// Only used by the Black-Scholes baseline; the hedging cash account is
  /// financing-free.
  double r = 0.0;
  double maturity = 10.0;
  std::size_t n_steps = 100;

  double dt() const noexcept { return maturity / static_cast<double>(n_steps); }

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("market.sigma must be > 0");
    if (!(s0 > 0.0) || !std::isfinite(s0)) throw std::invalid_argument("market.s0 must be > 0");
    if (!(maturity > 0.0) || !std::isfinite(maturity))
      throw std::invalid_argument("market.maturity must be > 0");
    if (n_steps < 1) throw std::invalid_argument("market.n_steps must be >= 1");
    if (!std::isfinite(mu)) throw std::invalid_argument("market.mu must be finite");
    if (!std::isfinite(r)) throw std::invalid_argument("market.r must be finite");
  }

  friend bool operator==(const MarketParams&, const MarketParams&) = default;
};

/// Simulated prices together with the Brownian increments that produced them.
/// Immutable once built.
struct PathBatch {
  MarketParams market;
  Matrix prices;      // n_paths x (n_steps + 1), column 0 == s0
  Matrix increments;  // n_paths x n_steps
  double dt = 0.0;
  std::optional<std::uint64_t> seed;

  std::size_t n_paths() const noexcept { return prices.rows(); }
  std::size_t n_steps() const noexcept { return increments.cols(); }
};

/// Row i of the result is drawn from its own stream derived from (seed, first_path + i),
/// so any path range can be regenerated independently of how the batch is split.
inline Matrix generate_increments_range(std::size_t first_path, std::size_t n_paths,
                                        std::size_t n_steps, double dt, std::uint64_t seed) {
  if (n_paths < 1) throw std::invalid_argument("generate_increments: n_paths must be >= 1");
  if (n_steps < 1) throw std::invalid_argument("generate_increments: n_steps must be >= 1");
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw std::invalid_argument("generate_increments: dt must be >= 0");
  Matrix out(n_paths, n_steps);
  const double scale = std::sqrt(dt);
  for (std::size_t i = 0; i < n_paths; ++i) {
    auto engine = make_stream(seed, first_path + i);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& w : out.row(i)) w = scale * normal(engine);
  }
  return out;
}

/// Independent N(0, dt) Brownian increments; bit-identical for identical arguments.
inline Matrix generate_increments(std::size_t n_paths, std::size_t n_steps, double dt,
                                  std::uint64_t seed) {
  return generate_increments_range(0, n_paths, n_steps, dt, seed);
}

/// Sums consecutive groups of `factor` increments: the same Brownian path seen on a
/// grid `factor` times coarser.
inline Matrix coarsen_increments(const Matrix& increments, std::size_t factor) {
  if (factor < 1 || increments.cols() % factor != 0)
    throw std::invalid_argument("coarsen_increments: factor must divide the step count");
  Matrix out(increments.rows(), increments.cols() / factor);
  for (std::size_t i = 0; i < increments.rows(); ++i) {
    for (std::size_t k = 0; k < out.cols(); ++k) {
      double sum = 0.0;
      for (std::size_t j = 0; j < factor; ++j) sum += increments(i, k * factor + j);
      out(i, k) = sum;
    }
  }
  return out;
}

/// Exact lognormal stepping S_{k+1} = S_k exp((mu - sigma^2/2) dt + sigma dW_k).
inline PathBatch simulate_paths(const MarketParams& market, Matrix increments,
                                std::optional<std::uint64_t> seed = std::nullopt) {
  market.validate();
  if (increments.cols() != market.n_steps || increments.rows() < 1)
    throw std::invalid_argument("simulate_paths: increments must be n_paths x n_steps (" +
                                std::to_string(market.n_steps) + " columns)");
  const double dt = market.dt();
  const double drift = (market.mu - 0.5 * market.sigma * market.sigma) * dt;
  PathBatch batch{market, Matrix(increments.rows(), market.n_steps + 1), std::move(increments), dt,
                  seed};
  for (std::size_t i = 0; i < batch.n_paths(); ++i) {
    auto s = batch.prices.row(i);
    auto dw = batch.increments.row(i);
    s[0] = market.s0;
    for (std::size_t k = 0; k < market.n_steps; ++k) {
      s[k + 1] = s[k] * std::exp(drift + market.sigma * dw[k]);
    }
  }
  return batch;
}

/// Convenience: paths [first_path, first_path + n_paths) of the batch identified by seed.
inline PathBatch simulate_paths(const MarketParams& market, std::size_t first_path,
                                std::size_t n_paths, std::uint64_t seed) {
  market.validate();
  return simulate_paths(market,
                        generate_increments_range(first_path, n_paths, market.n_steps, market.dt(), seed),
                        seed);
}

/// Debug dump, one row per (path, step): "path,step,price".
inline void write_paths_csv(const PathBatch& batch, std::ostream& out) {
  out << "path,step,price\n";
  char buf[64];
  for (std::size_t i = 0; i < batch.n_paths(); ++i) {
    for (std::size_t k = 0; k < batch.prices.cols(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", batch.prices(i, k));
      out << i << ',' << k << ',' << buf << '\n';
    }
  }
}

}  // namespace deephedge
