#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace deephedge {

/// European call with payoff (S_T - strike)_+.
struct CallClaim {
  double strike = 110.0;

  void validate() const {
    if (!(strike > 0.0) || !std::isfinite(strike)) throw std::invalid_argument("claim.strike must be > 0");
  }
  double payoff(double s_terminal) const noexcept { return std::max(s_terminal - strike, 0.0); }

  friend bool operator==(const CallClaim&, const CallClaim&) = default;
};

/// Lower-partial-moment loss l(x) = x^p / p applied to the shortfall.
struct LossSpec {
  double p = 1.0;

  void validate() const {
    if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("hedge.p must be > 0");
  }
  friend bool operator==(const LossSpec&, const LossSpec&) = default;
};

inline double call_payoff(double s_terminal, const CallClaim& claim) noexcept {
  return claim.payoff(s_terminal);
}

/// ((h - v)_+)^p / p. Zero whenever v >= h.
inline double shortfall_loss(double h, double v_terminal, const LossSpec& spec) noexcept {
  const double shortfall = std::max(h - v_terminal, 0.0);
  if (shortfall == 0.0) return 0.0;
  return std::pow(shortfall, spec.p) / spec.p;
}

/// Standard normal CDF, Phi(x) = erfc(-x / sqrt 2) / 2. erfc keeps full relative
/// accuracy in the lower tail, absolute error is at the level of double rounding.
inline double norm_cdf(double x) noexcept { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

inline double norm_pdf(double x) noexcept {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

namespace detail {
inline double bs_d1(double spot, double strike, double r, double sigma, double tau) noexcept {
  return (std::log(spot / strike) + (r + 0.5 * sigma * sigma) * tau) / (sigma * std::sqrt(tau));
}
}  // namespace detail

/// Black-Scholes call value. tau == 0 returns the intrinsic value.
inline double bs_price(double spot, const CallClaim& claim, double r, double sigma, double tau) {
  if (!(spot > 0.0) || !(sigma > 0.0) || !(tau >= 0.0))
    throw std::invalid_argument("bs_price: requires spot > 0, sigma > 0, tau >= 0");
  if (tau == 0.0) return claim.payoff(spot);
  const double d1 = detail::bs_d1(spot, claim.strike, r, sigma, tau);
  const double d2 = d1 - sigma * std::sqrt(tau);
  return spot * norm_cdf(d1) - claim.strike * std::exp(-r * tau) * norm_cdf(d2);
}

/// Phi(d1). At expiry: 1 in the money, 0 out of the money, 0.5 exactly at the strike.
inline double bs_delta(double spot, const CallClaim& claim, double r, double sigma, double tau) {
  if (!(spot > 0.0) || !(sigma > 0.0) || !(tau >= 0.0))
    throw std::invalid_argument("bs_delta: requires spot > 0, sigma > 0, tau >= 0");
  if (tau == 0.0) {
    if (spot > claim.strike) return 1.0;
    if (spot < claim.strike) return 0.0;
    return 0.5;
  }
  return norm_cdf(detail::bs_d1(spot, claim.strike, r, sigma, tau));
}

}  // namespace deephedge
