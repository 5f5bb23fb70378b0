#pragma once

#include <stdexcept>

#include "deephedge/hedging.hpp"
#include "deephedge/market_sim.hpp"
#include "deephedge/payoff.hpp"

namespace deephedge {

/// Discretized Black-Scholes delta hedge of the original claim, rebalanced at
/// every grid time.
struct DeltaStrategy {
  CallClaim claim;
  double r = 0.0;
  double sigma = 0.3;
  double maturity = 10.0;

  static DeltaStrategy for_market(const MarketParams& market, const CallClaim& claim) {
    return {claim, market.r, market.sigma, market.maturity};
  }

  Matrix positions(const PathBatch& b) const;
};

/// bs_delta with the remaining time maturity - t_k.
inline double delta_position(double spot, double t_k, const DeltaStrategy& s) {
  if (!(t_k < s.maturity)) throw std::invalid_argument("delta_position: t_k must be before maturity");
  if (!(s.sigma > 0.0)) throw std::invalid_argument("delta_position: sigma must be > 0");
  return bs_delta(spot, s.claim, s.r, s.sigma, s.maturity - t_k);
}

inline Matrix DeltaStrategy::positions(const PathBatch& b) const {
  Matrix out(b.n_paths(), b.n_steps());
  for (std::size_t k = 0; k < b.n_steps(); ++k) {
    const double t_k = static_cast<double>(k) * b.dt;
    for (std::size_t i = 0; i < b.n_paths(); ++i) out(i, k) = delta_position(b.prices(i, k), t_k, *this);
  }
  return out;
}

}  // namespace deephedge
