#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "deephedge/adam.hpp"
#include "deephedge/autodiff.hpp"
#include "deephedge/hedging.hpp"
#include "deephedge/market_sim.hpp"
#include "deephedge/parallel.hpp"
#include "deephedge/rng.hpp"

namespace deephedge {

struct TrainSettings {
  std::size_t batch_size = 256;
  std::size_t n_iterations = 5000;
  std::uint64_t seed = 1;
  double learning_rate = 0.01;
  /// Global-norm gradient clipping threshold; <= 0 disables it.
  double clip_norm = 10.0;
  std::size_t threads = 1;

  void validate() const {
    if (batch_size < 1) throw std::invalid_argument("training.batch_size must be >= 1");
    if (n_iterations < 1) throw std::invalid_argument("training.n_iterations must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("training.learning_rate must be > 0");
  }
};

/// Seed of the mini-batch drawn at `iteration`.
inline std::uint64_t training_batch_seed(std::uint64_t seed, std::size_t iteration) {
  return derive_seed(derive_seed(seed, domain_tag("training")), iteration);
}

/// Batch-mean loss and its gradient with respect to every network of the stack.
struct BatchGradient {
  LossBreakdown loss;
  std::vector<std::vector<double>> grads;  // one flat block per network
};

/// Loss and exact reverse-mode gradient. The simulation and loss are recorded on a
/// tape per path with the network outputs as leaves; the adjoints of those leaves
/// are then pulled back through each network in one batched reverse pass.
inline BatchGradient loss_and_gradient(const StrategyStack& strategy, const PathBatch& paths,
                                       const CallClaim& claim, const HedgeConfig& cfg,
                                       std::size_t threads = 1) {
  const std::size_t n_paths = paths.n_paths();
  const std::size_t n_steps = paths.n_steps();
  strategy.validate(n_steps);
  cfg.validate();

  std::vector<MlpBatchCache> caches(n_steps);
  Matrix requested(n_paths, n_steps);
  {
    std::vector<double> x(n_paths), y(n_paths);
    for (std::size_t k = 0; k < n_steps; ++k) {
      for (std::size_t i = 0; i < n_paths; ++i) x[i] = strategy.preprocess(paths.prices(i, k));
      mlp_forward_batch(strategy.networks[k], x, caches[k], y);
      for (std::size_t i = 0; i < n_paths; ++i) requested(i, k) = y[i];
    }
  }

  // Column-major adjoints so each step's column is contiguous for the batched pass.
  std::vector<std::vector<double>> d_position(n_steps, std::vector<double>(n_paths, 0.0));
  std::vector<std::array<double, 3>> terms(n_paths);
  const double scale = 1.0 / static_cast<double>(n_paths);

  constexpr std::size_t kChunk = 32;
  const std::size_t n_chunks = (n_paths + kChunk - 1) / kChunk;
  parallel_for_chunks(n_chunks, threads, [&](std::size_t c) {
    ad::Tape tape;
    tape.reserve(16 * (n_steps + 1));
    std::vector<ad::Var> leaves(n_steps);
    const std::size_t end = std::min(n_paths, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      tape.clear();
      for (std::size_t k = 0; k < n_steps; ++k) leaves[k] = tape.variable(requested(i, k));
      const auto prices = paths.prices.row(i);
      auto roll = roll_path<ad::Var>(prices, paths.increments.row(i), paths.market, cfg,
                                     [&](std::size_t k) { return leaves[k]; });
      const auto loss = path_loss<ad::Var>(roll.wealth, roll.positions, prices,
                                           claim.payoff(prices.back()), cfg);
      terms[i] = {loss.shortfall.value(), loss.cost.value(), loss.admissibility.value()};
      const ad::Var total = loss.shortfall + loss.cost + loss.admissibility;
      if (total.is_constant()) continue;
      const auto adj = ad::backward(tape, total);
      for (std::size_t k = 0; k < n_steps; ++k) d_position[k][i] = adj.wrt(leaves[k]) * scale;
    }
  });

  BatchGradient out;
  double lp = 0.0, lc = 0.0, la = 0.0;
  for (const auto& t : terms) {
    lp += t[0];
    lc += t[1];
    la += t[2];
  }
  out.loss = {lp * scale, lc * scale, la * scale, 0.0};
  out.loss.total = out.loss.l_p + out.loss.l_cost + out.loss.l_ad;
  out.grads.resize(n_steps);
  for (std::size_t k = 0; k < n_steps; ++k) {
    out.grads[k].assign(strategy.networks[k].size(), 0.0);
    mlp_backward_batch(strategy.networks[k], caches[k], d_position[k], out.grads[k]);
  }
  return out;
}

struct TrainResult {
  StrategyStack strategy;
  std::vector<LossBreakdown> history;
  std::vector<AdamState> optimizers;
};

/// Raised when a mini-batch loss stops being finite. Carries the history so far.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t iteration, std::string component, std::vector<LossBreakdown> history)
      : std::runtime_error("training diverged at iteration " + std::to_string(iteration) + ": " +
                           component + " is not finite"),
        iteration_(iteration),
        component_(std::move(component)),
        history_(std::move(history)) {}

  std::size_t iteration() const noexcept { return iteration_; }
  const std::string& component() const noexcept { return component_; }
  const std::vector<LossBreakdown>& history() const noexcept { return history_; }

 private:
  std::size_t iteration_;
  std::string component_;
  std::vector<LossBreakdown> history_;
};

/// Adam mini-batch training on fresh paths each iteration. Deterministic per
/// settings.seed for any thread count.
inline TrainResult train(const MarketParams& market, const CallClaim& claim, const HedgeConfig& cfg,
                         const TrainSettings& settings) {
  market.validate();
  claim.validate();
  cfg.validate();
  settings.validate();
  TrainResult result;
  result.strategy = StrategyStack::initialize(market.n_steps, market.s0, settings.seed);
  AdamHyper hyper;
  hyper.learning_rate = settings.learning_rate;
  for (const auto& net : result.strategy.networks) result.optimizers.emplace_back(net.size(), hyper);
  result.history.reserve(settings.n_iterations);

  for (std::size_t it = 0; it < settings.n_iterations; ++it) {
    const PathBatch paths =
        simulate_paths(market, 0, settings.batch_size, training_batch_seed(settings.seed, it));
    BatchGradient g = loss_and_gradient(result.strategy, paths, claim, cfg, settings.threads);
    const auto& l = g.loss;
    const char* bad = !std::isfinite(l.l_p)      ? "l_p"
                      : !std::isfinite(l.l_cost) ? "l_cost"
                      : !std::isfinite(l.l_ad)   ? "l_ad"
                                                 : nullptr;
    if (bad == nullptr) {
      for (const auto& block : g.grads)
        for (double v : block)
          if (!std::isfinite(v)) bad = "gradient";
    }
    if (bad != nullptr) throw TrainingDiverged(it, bad, std::move(result.history));
    result.history.push_back(l);
    clip_by_global_norm(g.grads, settings.clip_norm);
    for (std::size_t k = 0; k < result.strategy.networks.size(); ++k)
      adam_step(result.strategy.networks[k].values(), g.grads[k], result.optimizers[k]);
  }
  return result;
}

}  // namespace deephedge
