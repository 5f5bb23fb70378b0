#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "deephedge/baseline_delta.hpp"
#include "deephedge/hedging.hpp"
#include "deephedge/market_sim.hpp"
#include "deephedge/parallel.hpp"
#include "deephedge/rng.hpp"

namespace deephedge {

struct EvalSettings {
  std::size_t n_paths = 100000;
  std::uint64_t seed = 20240917;
  std::size_t threads = 1;
};

/// Seed of the held-out batch; lives in its own domain so it never coincides with
/// a training batch seed.
inline std::uint64_t evaluation_batch_seed(std::uint64_t seed) {
  return derive_seed(seed, domain_tag("evaluation"));
}

struct Distribution {
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double q05 = 0.0;
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
  double q95 = 0.0;
  double max = 0.0;
};

/// Linear-interpolation quantile of a sorted sample.
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline Distribution summarize(std::vector<double> sample) {
  Distribution d;
  if (sample.empty()) return d;
  double sum = 0.0;
  for (double x : sample) sum += x;
  d.mean = sum / static_cast<double>(sample.size());
  double sq = 0.0;
  for (double x : sample) sq += (x - d.mean) * (x - d.mean);
  d.stddev = sample.size() > 1 ? std::sqrt(sq / static_cast<double>(sample.size() - 1)) : 0.0;
  std::sort(sample.begin(), sample.end());
  d.min = sample.front();
  d.max = sample.back();
  d.q05 = sorted_quantile(sample, 0.05);
  d.q25 = sorted_quantile(sample, 0.25);
  d.q50 = sorted_quantile(sample, 0.50);
  d.q75 = sorted_quantile(sample, 0.75);
  d.q95 = sorted_quantile(sample, 0.95);
  return d;
}

struct EvalReport {
  LossBreakdown loss;
  Distribution terminal_wealth;
  Distribution running_min;
  double bankruptcy_rate = 0.0;
  std::size_t geometric_updates = 0;
  std::size_t division_guard_hits = 0;
  std::vector<double> terminal_samples;     // V_T per path, path order
  std::vector<double> running_min_samples;  // min_k V_k per path
  std::uint64_t seed = 0;
  std::size_t n_paths = 0;
};

/// Held-out evaluation of a fixed strategy. The batch depends only on
/// (market, eval.seed, eval.n_paths), so any two strategies evaluated with the same
/// settings see identical paths.
template <HedgingStrategy S>
EvalReport evaluate(const S& strategy, const MarketParams& market, const CallClaim& claim,
                    const HedgeConfig& cfg, const EvalSettings& eval) {
  market.validate();
  claim.validate();
  cfg.validate();
  if (eval.n_paths < 1) throw std::invalid_argument("eval.n_paths must be >= 1");
  constexpr std::size_t kChunk = 4096;
  const std::size_t n_chunks = (eval.n_paths + kChunk - 1) / kChunk;
  const std::uint64_t batch_seed = evaluation_batch_seed(eval.seed);

  struct ChunkOut {
    double lp = 0.0, lc = 0.0, la = 0.0;
    std::size_t bankrupt = 0, geometric = 0, guard = 0;
  };
  std::vector<ChunkOut> chunks(n_chunks);
  EvalReport report;
  report.seed = eval.seed;
  report.n_paths = eval.n_paths;
  report.terminal_samples.resize(eval.n_paths);
  report.running_min_samples.resize(eval.n_paths);

  parallel_for_chunks(n_chunks, eval.threads, [&](std::size_t c) {
    const std::size_t first = c * kChunk;
    const std::size_t count = std::min(kChunk, eval.n_paths - first);
    const PathBatch paths = simulate_paths(market, first, count, batch_seed);
    const SimResult sim = roll_forward(paths, strategy, cfg);
    ChunkOut& out = chunks[c];
    for (std::size_t i = 0; i < count; ++i) {
      const auto prices = paths.prices.row(i);
      const auto terms = path_loss<double>(sim.wealth.row(i), sim.positions.row(i), prices,
                                           claim.payoff(prices.back()), cfg);
      out.lp += terms.shortfall;
      out.lc += terms.cost;
      out.la += terms.admissibility;
      out.bankrupt += sim.bankrupt_at[i] ? 1 : 0;
      out.guard += sim.division_guard[i];
      report.terminal_samples[first + i] = sim.wealth(i, paths.n_steps());
      report.running_min_samples[first + i] = sim.running_min[i];
    }
    out.geometric = sim.geometric_updates;
  });

  double lp = 0.0, lc = 0.0, la = 0.0;
  std::size_t bankrupt = 0;
  for (const auto& c : chunks) {
    lp += c.lp;
    lc += c.lc;
    la += c.la;
    bankrupt += c.bankrupt;
    report.geometric_updates += c.geometric;
    report.division_guard_hits += c.guard;
  }
  const double n = static_cast<double>(eval.n_paths);
  report.loss = {lp / n, lc / n, la / n, 0.0};
  report.loss.total = report.loss.l_p + report.loss.l_cost + report.loss.l_ad;
  report.bankruptcy_rate = static_cast<double>(bankrupt) / n;
  report.terminal_wealth = summarize(report.terminal_samples);
  report.running_min = summarize(report.running_min_samples);
  return report;
}

/// The delta hedge run through the same engine and held-out batch as any other
/// strategy evaluated with `eval`.
inline EvalReport evaluate_baseline(const MarketParams& market, const CallClaim& claim,
                                    const HedgeConfig& cfg, const EvalSettings& eval) {
  return evaluate(DeltaStrategy::for_market(market, claim), market, claim, cfg, eval);
}

}  // namespace deephedge
