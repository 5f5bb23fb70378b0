#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "deephedge/market_sim.hpp"
#include "deephedge/matrix.hpp"
#include "deephedge/mlp.hpp"
#include "deephedge/payoff.hpp"
#include "deephedge/scalar.hpp"

namespace deephedge {

/// Capital, bankruptcy floor and loss weights of one hedging problem.
struct HedgeConfig {
  double v0 = 0.0;
  double bankruptcy_bound = -100.0;
  double c_cost = 0.0;
  double c_ad = 1.0;
  LossSpec loss{};
  /// V - B at or below this declares bankruptcy.
  double bankruptcy_eps = 1e-9;
  /// Symmetric bound on the exponent of the geometric (below-floor) update.
  double exponent_clamp = 50.0;
  /// Adds |K_0| * S_0 to the cost term. Off reproduces the interior-only sum.
  bool charge_initial_position = false;

  void validate() const {
    if (!std::isfinite(v0)) throw std::invalid_argument("hedge.v0 must be finite");
    if (!(bankruptcy_bound < 0.0)) throw std::invalid_argument("hedge.bankruptcy_bound must be < 0");
    if (!(bankruptcy_eps > 0.0)) throw std::invalid_argument("hedge.bankruptcy_eps must be > 0");
    if (!(c_cost >= 0.0) || !std::isfinite(c_cost)) throw std::invalid_argument("hedge.c_cost must be >= 0");
    if (!(c_ad >= 0.0) || !std::isfinite(c_ad)) throw std::invalid_argument("hedge.c_ad must be >= 0");
    if (!(exponent_clamp > 0.0)) throw std::invalid_argument("hedge.exponent_clamp must be > 0");
    loss.validate();
  }

  friend bool operator==(const HedgeConfig&, const HedgeConfig&) = default;
};

/// Half of the zero-rate Black-Scholes price unless another fraction is given.
inline double default_initial_capital(const MarketParams& market, const CallClaim& claim,
                                      double fraction = 0.5) {
  return fraction * bs_price(market.s0, claim, 0.0, market.sigma, market.maturity);
}

/// Batch means of the three loss terms.
struct LossBreakdown {
  double l_p = 0.0;
  double l_cost = 0.0;
  double l_ad = 0.0;
  double total = 0.0;

  friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

/// Realized trajectories of a batch under one strategy.
struct SimResult {
  Matrix wealth;     // n_paths x (N + 1)
  Matrix positions;  // n_paths x N; positions(i, k) is held over (t_k, t_{k+1}]
  std::vector<std::optional<std::size_t>> bankrupt_at;
  std::vector<double> running_min;
  /// Paths whose geometric update hit the |V_k| ~ 0 guard and were bankrupted.
  std::vector<std::uint8_t> division_guard;
  std::size_t geometric_updates = 0;
};

/// Sequence of branch decisions taken during a roll; two evaluations with equal
/// traces lie on the same smooth piece of the loss.
struct BranchTrace {
  std::vector<std::int8_t> decisions;
  void note(int d) { decisions.push_back(static_cast<std::int8_t>(d)); }
  friend bool operator==(const BranchTrace&, const BranchTrace&) = default;
};

namespace detail {
inline void note(BranchTrace* trace, int d) {
  if (trace) trace->note(d);
}
inline int sign_of(double x) { return (x > 0.0) - (x < 0.0); }
}  // namespace detail

template <class Real>
struct PathRoll {
  std::vector<Real> wealth;
  std::vector<Real> positions;
  std::optional<std::size_t> bankrupt_at;
  bool division_guard = false;
  std::size_t geometric_updates = 0;
};

/// Self-financing roll of one path. `position_at(k)` yields the position chosen at
/// t_k from information up to t_k. If the linear update would fall below B the
/// wealth instead follows the constant-proportion geometric update driven by the
/// same Brownian increment, which stays strictly above B; reaching B (within eps)
/// freezes wealth at B and the position at zero for the rest of the path.
template <class Real, class PositionAt>
PathRoll<Real> roll_path(std::span<const double> prices, std::span<const double> increments,
                         const MarketParams& market, const HedgeConfig& cfg, PositionAt&& position_at,
                         BranchTrace* trace = nullptr) {
  using std::exp;
  const std::size_t n = increments.size();
  const double bound = cfg.bankruptcy_bound;
  const double dt = market.dt();
  const double half_var = 0.5 * market.sigma * market.sigma * dt;
  PathRoll<Real> out;
  out.wealth.reserve(n + 1);
  out.positions.reserve(n);
  Real v = Real(cfg.v0);
  out.wealth.push_back(v);
  for (std::size_t k = 0; k < n; ++k) {
    if (out.bankrupt_at) {
      out.positions.push_back(Real(0.0));
      out.wealth.push_back(Real(bound));
      continue;
    }
    Real pos = position_at(k);
    Real next = v + pos * (prices[k + 1] - prices[k]);
    if (value_of(next) >= bound) {
      detail::note(trace, 0);
    } else if (std::abs(value_of(v)) < 1e-12) {
      detail::note(trace, 2);
      out.division_guard = true;
      next = Real(bound);
    } else {
      detail::note(trace, 1);
      ++out.geometric_updates;
      const Real pi = pos * prices[k] / v;
      Real arg = pi * (market.mu * dt + market.sigma * increments[k]) - pi * pi * half_var;
      if (value_of(arg) > cfg.exponent_clamp) {
        detail::note(trace, 3);
        arg = Real(cfg.exponent_clamp);
      } else if (value_of(arg) < -cfg.exponent_clamp) {
        detail::note(trace, 4);
        arg = Real(-cfg.exponent_clamp);
      }
      next = (v - bound) * exp(arg) + bound;
    }
    if (value_of(next) - bound <= cfg.bankruptcy_eps) {
      detail::note(trace, 5);
      next = Real(bound);
      out.bankrupt_at = k + 1;
    }
    out.positions.push_back(pos);
    out.wealth.push_back(next);
    v = next;
  }
  return out;
}

template <class Real>
struct PathLossTerms {
  Real shortfall;
  Real cost;
  Real admissibility;
};

/// Per-path loss terms: l((H - V_T)_+), c_cost * sum_{k=1}^{N-1} |K_k - K_{k-1}| S_k,
/// and c_ad * (-min_k V_k)_+.
template <class Real>
PathLossTerms<Real> path_loss(std::span<const Real> wealth, std::span<const Real> positions,
                              std::span<const double> prices, double payoff, const HedgeConfig& cfg,
                              BranchTrace* trace = nullptr) {
  using std::abs;
  using std::pow;
  const Real gap = Real(payoff) - wealth.back();
  detail::note(trace, detail::sign_of(value_of(gap)));
  const Real shortfall = pow(relu(gap), cfg.loss.p) * (1.0 / cfg.loss.p);

  Real cost = Real(0.0);
  if (cfg.c_cost != 0.0) {
    if (cfg.charge_initial_position && !positions.empty()) {
      detail::note(trace, detail::sign_of(value_of(positions[0])));
      cost = cost + abs(positions[0]) * prices[0];
    }
    for (std::size_t k = 1; k < positions.size(); ++k) {
      const Real diff = positions[k] - positions[k - 1];
      detail::note(trace, detail::sign_of(value_of(diff)));
      cost = cost + abs(diff) * prices[k];
    }
    cost = cost * cfg.c_cost;
  }

  std::size_t argmin = 0;
  for (std::size_t k = 1; k < wealth.size(); ++k)
    if (value_of(wealth[k]) < value_of(wealth[argmin])) argmin = k;
  if (trace) trace->note(static_cast<int>(argmin % 127));
  const Real neg_min = -wealth[argmin];
  detail::note(trace, detail::sign_of(value_of(neg_min)));
  const Real admissibility = relu(neg_min) * cfg.c_ad;
  return {shortfall, cost, admissibility};
}

/// Something that maps a batch of paths to the n_paths x N matrix of positions it
/// would like to hold (before bankruptcy freezing).
template <class S>
concept HedgingStrategy = requires(const S& s, const PathBatch& b) {
  { s.positions(b) } -> std::convertible_to<Matrix>;
};

/// A fixed strategy given by a function of (step index, spot).
struct FunctionStrategy {
  std::function<double(std::size_t, double)> fn;

  Matrix positions(const PathBatch& b) const {
    Matrix out(b.n_paths(), b.n_steps());
    for (std::size_t i = 0; i < b.n_paths(); ++i)
      for (std::size_t k = 0; k < b.n_steps(); ++k) out(i, k) = fn(k, b.prices(i, k));
    return out;
  }
};

/// One network per rebalancing time t_0..t_{N-1}. Network k reads
/// log(S_{t_k} / reference_spot) and returns the position held over (t_k, t_{k+1}].
struct StrategyStack {
  std::vector<MlpParams> networks;
  double reference_spot = 100.0;

  static StrategyStack initialize(std::size_t n_steps, double reference_spot, std::uint64_t seed) {
    StrategyStack s;
    s.reference_spot = reference_spot;
    s.networks.reserve(n_steps);
    for (std::size_t k = 0; k < n_steps; ++k)
      s.networks.push_back(mlp_init(kHedgeLayerSizes, derive_seed(seed, k)));
    return s;
  }

  double preprocess(double spot) const { return std::log(spot / reference_spot); }

  void validate(std::size_t n_steps) const {
    if (networks.size() != n_steps)
      throw std::invalid_argument("strategy: expected " + std::to_string(n_steps) + " networks, got " +
                                  std::to_string(networks.size()));
    for (const auto& net : networks) {
      if (net.sizes() != kHedgeLayerSizes) throw std::invalid_argument("strategy: layer sizes must be [1,21,21,1]");
      if (!net.all_finite()) throw std::invalid_argument("strategy: non-finite parameter");
    }
  }

  /// Position of network `step` at `spot`.
  double position(std::size_t step, double spot) const {
    MlpBatchCache cache;
    const double x = preprocess(spot);
    double y = 0.0;
    mlp_forward_batch(networks.at(step), std::span(&x, 1), cache, std::span(&y, 1));
    return y;
  }

  Matrix positions(const PathBatch& b) const {
    validate(b.n_steps());
    Matrix out(b.n_paths(), b.n_steps());
    std::vector<double> x(b.n_paths()), y(b.n_paths());
    MlpBatchCache cache;
    for (std::size_t k = 0; k < b.n_steps(); ++k) {
      for (std::size_t i = 0; i < b.n_paths(); ++i) x[i] = preprocess(b.prices(i, k));
      mlp_forward_batch(networks[k], x, cache, y);
      for (std::size_t i = 0; i < b.n_paths(); ++i) out(i, k) = y[i];
    }
    return out;
  }
};

/// Rolls every path forward under the requested positions.
inline SimResult roll_forward(const PathBatch& paths, const Matrix& requested, const HedgeConfig& cfg) {
  cfg.validate();
  if (requested.rows() != paths.n_paths() || requested.cols() != paths.n_steps())
    throw std::invalid_argument("roll_forward: position matrix must be n_paths x n_steps");
  const std::size_t n = paths.n_steps();
  SimResult sim{Matrix(paths.n_paths(), n + 1), Matrix(paths.n_paths(), n),
                std::vector<std::optional<std::size_t>>(paths.n_paths()),
                std::vector<double>(paths.n_paths()), std::vector<std::uint8_t>(paths.n_paths(), 0), 0};
  for (std::size_t i = 0; i < paths.n_paths(); ++i) {
    const auto req = requested.row(i);
    auto roll = roll_path<double>(paths.prices.row(i), paths.increments.row(i), paths.market, cfg,
                                  [&](std::size_t k) { return req[k]; });
    std::copy(roll.wealth.begin(), roll.wealth.end(), sim.wealth.row(i).begin());
    std::copy(roll.positions.begin(), roll.positions.end(), sim.positions.row(i).begin());
    sim.bankrupt_at[i] = roll.bankrupt_at;
    sim.running_min[i] = *std::min_element(roll.wealth.begin(), roll.wealth.end());
    sim.division_guard[i] = roll.division_guard ? 1 : 0;
    sim.geometric_updates += roll.geometric_updates;
  }
  return sim;
}

template <HedgingStrategy S>
SimResult roll_forward(const PathBatch& paths, const S& strategy, const HedgeConfig& cfg) {
  return roll_forward(paths, strategy.positions(paths), cfg);
}

/// Batch-mean loss terms of a simulated batch.
inline LossBreakdown compute_loss(const SimResult& sim, const PathBatch& paths, const CallClaim& claim,
                                  const HedgeConfig& cfg) {
  if (sim.wealth.rows() != paths.n_paths() || sim.wealth.cols() != paths.n_steps() + 1 ||
      sim.positions.cols() != paths.n_steps())
    throw std::invalid_argument("compute_loss: simulation does not match the path batch");
  double lp = 0.0, lc = 0.0, la = 0.0;
  for (std::size_t i = 0; i < paths.n_paths(); ++i) {
    const auto prices = paths.prices.row(i);
    const auto terms = path_loss<double>(sim.wealth.row(i), sim.positions.row(i), prices,
                                         claim.payoff(prices.back()), cfg);
    lp += terms.shortfall;
    lc += terms.cost;
    la += terms.admissibility;
  }
  const double n = static_cast<double>(paths.n_paths());
  LossBreakdown out{lp / n, lc / n, la / n, 0.0};
  out.total = out.l_p + out.l_cost + out.l_ad;
  return out;
}

}  // namespace deephedge
