#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "deephedge/evaluation.hpp"
#include "deephedge/hedging.hpp"

using namespace deephedge;

namespace {

MarketParams paper_market() { return MarketParams{0.08, 0.3, 100.0, 0.0, 10.0, 100}; }

/// Batch with explicitly chosen prices: increments are backed out of the prices so
/// the batch is self-consistent.
PathBatch batch_from_prices(const MarketParams& m, const std::vector<std::vector<double>>& prices) {
  Matrix inc(prices.size(), m.n_steps);
  const double drift = (m.mu - 0.5 * m.sigma * m.sigma) * m.dt();
  for (std::size_t i = 0; i < prices.size(); ++i)
    for (std::size_t k = 0; k < m.n_steps; ++k)
      inc(i, k) = (std::log(prices[i][k + 1] / prices[i][k]) - drift) / m.sigma;
  PathBatch b = simulate_paths(m, inc);
  for (std::size_t i = 0; i < prices.size(); ++i)
    for (std::size_t k = 0; k <= m.n_steps; ++k) b.prices(i, k) = prices[i][k];
  return b;
}

FunctionStrategy constant(double c) {
  return {[c](std::size_t, double) { return c; }};
}

}  // namespace

TEST(RollForward, ZeroPositionKeepsWealth) {
  const MarketParams m = paper_market();
  const PathBatch b = simulate_paths(m, 0, 64, 1);
  HedgeConfig cfg;
  cfg.v0 = 12.5;
  const SimResult sim = roll_forward(b, constant(0.0), cfg);
  for (double v : sim.wealth.data()) EXPECT_EQ(v, 12.5);
  for (const auto& bk : sim.bankrupt_at) EXPECT_FALSE(bk.has_value());
}

TEST(RollForward, TelescopingLinearUpdate) {
  MarketParams m = paper_market();
  m.n_steps = 2;
  const PathBatch b = batch_from_prices(m, {{100.0, 110.0, 105.0}});
  HedgeConfig cfg;
  cfg.v0 = 10.0;
  const SimResult sim = roll_forward(b, constant(1.0), cfg);
  EXPECT_DOUBLE_EQ(sim.wealth(0, 0), 10.0);
  EXPECT_DOUBLE_EQ(sim.wealth(0, 1), 20.0);
  EXPECT_DOUBLE_EQ(sim.wealth(0, 2), 15.0);
}

TEST(RollForward, GeometricUpdateBelowTheFloor) {
  // V_k = -90, K = 2, S: 100 -> 90, so the linear candidate -110 is below B = -100.
  MarketParams m = paper_market();
  m.n_steps = 2;
  m.maturity = 0.2;  // dt = 0.1
  const PathBatch b = batch_from_prices(m, {{100.0, 100.0, 90.0}});
  HedgeConfig cfg;
  cfg.v0 = -90.0;
  const SimResult sim = roll_forward(b, constant(2.0), cfg);
  EXPECT_EQ(sim.geometric_updates, 1u);
  EXPECT_GT(sim.wealth(0, 2), -100.0);
  // Hand evaluation: dW = (ln 0.9 - 0.0035) / 0.3, pi = -200/90,
  // V = 10 exp(pi (0.008 + 0.3 dW) - pi^2 0.009 / 2) - 100.
  EXPECT_NEAR(b.increments(0, 1), -0.36286838552608763, 1e-14);
  EXPECT_NEAR(sim.wealth(0, 2), -87.7625937125217, 1e-11);
}

TEST(RollForward, BankruptcyFreezesWealthAndPosition) {
  MarketParams m = paper_market();
  m.n_steps = 4;
  const PathBatch b = batch_from_prices(m, {{100.0, 100.0, 50.0, 60.0, 70.0}});
  HedgeConfig cfg;
  cfg.v0 = 0.0;
  // The second position takes the linear update exactly onto B = -100.
  const SimResult sim = roll_forward(b, FunctionStrategy{[](std::size_t k, double) { return k == 1 ? 2.0 : 1.0; }}, cfg);
  ASSERT_TRUE(sim.bankrupt_at[0].has_value());
  const std::size_t at = *sim.bankrupt_at[0];
  EXPECT_EQ(at, 2u);
  EXPECT_EQ(sim.division_guard[0], 0);
  for (std::size_t k = at; k <= 4; ++k) EXPECT_EQ(sim.wealth(0, k), cfg.bankruptcy_bound);
  for (std::size_t k = at; k < 4; ++k) EXPECT_EQ(sim.positions(0, k), 0.0);
}

TEST(RollForward, DivisionGuardDeclaresBankruptcy) {
  MarketParams m = paper_market();
  m.n_steps = 3;
  const PathBatch b = batch_from_prices(m, {{100.0, 100.0, 40.0, 45.0}});
  HedgeConfig cfg;
  cfg.v0 = 0.0;
  const SimResult sim = roll_forward(b, constant(2.0), cfg);
  EXPECT_EQ(sim.division_guard[0], 1);
  ASSERT_TRUE(sim.bankrupt_at[0].has_value());
  EXPECT_EQ(*sim.bankrupt_at[0], 2u);
  EXPECT_EQ(sim.wealth(0, 3), -100.0);
}

TEST(RollForward, RejectsShapeMismatch) {
  const PathBatch b = simulate_paths(paper_market(), 0, 4, 1);
  EXPECT_THROW(roll_forward(b, Matrix(4, 99), HedgeConfig{}), std::invalid_argument);
}

TEST(ComputeLoss, ZeroStrategyIsTheMeanPayoffLoss) {
  const MarketParams m = paper_market();
  const PathBatch b = simulate_paths(m, 0, 500, 2);
  HedgeConfig cfg;
  cfg.v0 = 0.0;
  cfg.c_cost = 0.01;
  cfg.loss.p = 1.1;
  const CallClaim claim{110.0};
  const LossBreakdown l = compute_loss(roll_forward(b, constant(0.0), cfg), b, claim, cfg);
  double direct = 0.0;
  for (std::size_t i = 0; i < 500; ++i) direct += shortfall_loss(claim.payoff(b.prices(i, 100)), 0.0, cfg.loss);
  EXPECT_NEAR(l.l_p, direct / 500.0, 1e-12 * direct / 500.0);
  EXPECT_EQ(l.l_cost, 0.0);
  EXPECT_EQ(l.l_ad, 0.0);
  EXPECT_EQ(l.total, l.l_p + l.l_cost + l.l_ad);
}

TEST(ComputeLoss, ConstantPositionsPayNoCost) {
  const PathBatch b = simulate_paths(paper_market(), 0, 100, 3);
  HedgeConfig cfg;
  cfg.v0 = 50.0;
  cfg.c_cost = 0.5;
  const SimResult sim = roll_forward(b, constant(0.4), cfg);
  EXPECT_EQ(compute_loss(sim, b, CallClaim{110.0}, cfg).l_cost, 0.0);
}

TEST(ComputeLoss, SingleRebalanceCost) {
  MarketParams m = paper_market();
  m.n_steps = 2;
  const PathBatch b = batch_from_prices(m, {{100.0, 110.0, 120.0}});
  HedgeConfig cfg;
  cfg.v0 = 10.0;
  cfg.c_cost = 0.01;
  const SimResult sim = roll_forward(b, FunctionStrategy{[](std::size_t k, double) { return k == 0 ? 0.2 : 0.5; }}, cfg);
  const LossBreakdown l = compute_loss(sim, b, CallClaim{110.0}, cfg);
  EXPECT_NEAR(l.l_cost, 0.33, 1e-14);

  cfg.charge_initial_position = true;
  EXPECT_NEAR(compute_loss(sim, b, CallClaim{110.0}, cfg).l_cost, 0.33 + 0.01 * 0.2 * 100.0, 1e-14);
}

TEST(ComputeLoss, AdmissibilityPenaltyUsesRunningMinimum) {
  MarketParams m = paper_market();
  m.n_steps = 3;
  const PathBatch b = batch_from_prices(m, {{100.0, 90.0, 80.0, 120.0}});
  HedgeConfig cfg;
  cfg.v0 = 5.0;
  cfg.c_ad = 2.0;
  const SimResult sim = roll_forward(b, constant(1.0), cfg);  // wealth 5, -5, -15, 25
  EXPECT_DOUBLE_EQ(sim.running_min[0], -15.0);
  EXPECT_DOUBLE_EQ(compute_loss(sim, b, CallClaim{110.0}, cfg).l_ad, 30.0);
}

TEST(HedgingProperties, HardBoundAndAbsorption) {
  const MarketParams m{0.08, 0.3, 100.0, 0.0, 10.0, 50};
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = 8.0 * u(rng), b = 20.0 * u(rng);
    HedgeConfig cfg;
    cfg.v0 = 40.0 * u(rng);
    const PathBatch paths = simulate_paths(m, 0, 16, static_cast<std::uint64_t>(trial));
    const SimResult sim = roll_forward(paths, FunctionStrategy{[&](std::size_t k, double s) {
                                         return a + b * std::sin(0.3 * static_cast<double>(k) + s / 50.0);
                                       }}, cfg);
    for (std::size_t i = 0; i < 16; ++i) {
      for (std::size_t k = 0; k <= 50; ++k) ASSERT_GE(sim.wealth(i, k), cfg.bankruptcy_bound);
      if (sim.bankrupt_at[i]) {
        for (std::size_t k = *sim.bankrupt_at[i]; k <= 50; ++k) ASSERT_EQ(sim.wealth(i, k), cfg.bankruptcy_bound);
        for (std::size_t k = *sim.bankrupt_at[i]; k < 50; ++k) ASSERT_EQ(sim.positions(i, k), 0.0);
      }
    }
  }
}

TEST(HedgingProperties, SelfFinancingIdentity) {
  const MarketParams m = paper_market();
  const PathBatch b = simulate_paths(m, 0, 200, 4);
  HedgeConfig cfg;
  cfg.v0 = 200.0;
  const FunctionStrategy s{[](std::size_t k, double spot) { return 0.3 + 0.2 * std::cos(spot / 40.0 + k); }};
  const SimResult sim = roll_forward(b, s, cfg);
  EXPECT_EQ(sim.geometric_updates, 0u);
  for (std::size_t i = 0; i < 200; ++i) {
    double gains = 0.0;
    for (std::size_t k = 0; k < 100; ++k) gains += sim.positions(i, k) * (b.prices(i, k + 1) - b.prices(i, k));
    const double change = sim.wealth(i, 100) - 200.0;
    EXPECT_NEAR(change, gains, 1e-10 * std::max(1.0, std::abs(gains)));
  }
}

TEST(HedgingProperties, ShortfallNonIncreasingInCapital) {
  const MarketParams m = paper_market();
  const PathBatch b = simulate_paths(m, 0, 300, 5);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const CallClaim claim{110.0};
  for (int trial = 0; trial < 20; ++trial) {
    const double level = u(rng);
    const FunctionStrategy s{[level](std::size_t, double spot) { return level * (spot > 110.0 ? 1.0 : 0.5); }};
    HedgeConfig lo, hi;
    lo.v0 = 100.0 + 50.0 * u(rng);
    hi.v0 = lo.v0 + 30.0 * u(rng);
    lo.loss.p = hi.loss.p = 1.0 + u(rng);
    const SimResult a = roll_forward(b, s, lo), c = roll_forward(b, s, hi);
    ASSERT_EQ(a.geometric_updates + c.geometric_updates, 0u);
    EXPECT_GE(compute_loss(a, b, claim, lo).l_p, compute_loss(c, b, claim, hi).l_p);
  }
}

TEST(Evaluate, SuperReplicatedClaimHasNoShortfall) {
  const MarketParams m = paper_market();
  // A strike no path can reach makes H == 0, so zero capital already covers it.
  HedgeConfig cfg;
  cfg.v0 = 0.0;
  EvalSettings e;
  e.n_paths = 2000;
  const EvalReport r = evaluate(FunctionStrategy{[](std::size_t, double) { return 0.0; }}, m, CallClaim{1e9}, cfg, e);
  EXPECT_EQ(r.loss.l_p, 0.0);
  EXPECT_EQ(r.loss.total, 0.0);
}

TEST(Evaluate, DeterministicAndPaired) {
  const MarketParams m = paper_market();
  HedgeConfig cfg;
  cfg.v0 = 16.0;
  EvalSettings e;
  e.n_paths = 5000;
  const CallClaim claim{110.0};
  const EvalReport a = evaluate_baseline(m, claim, cfg, e);
  e.threads = 3;
  const EvalReport b = evaluate_baseline(m, claim, cfg, e);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(a.terminal_samples, b.terminal_samples);

  // A zero strategy on the same settings sees the same paths: its terminal wealth
  // is v0 and its shortfall is the payoff on the batch the baseline used.
  const EvalReport z = evaluate(FunctionStrategy{[](std::size_t, double) { return 0.0; }}, m, claim, cfg, e);
  const PathBatch batch = simulate_paths(m, 0, 5000, evaluation_batch_seed(e.seed));
  double direct = 0.0;
  for (std::size_t i = 0; i < 5000; ++i) direct += shortfall_loss(claim.payoff(batch.prices(i, 100)), 16.0, cfg.loss);
  EXPECT_NEAR(z.loss.l_p, direct / 5000.0, 1e-12 * direct);
}
