// Minimal library use: train one strategy briefly and compare it with the delta
// hedge on a shared held-out batch.

#include <cstdio>

#include "deephedge/deephedge.hpp"

int main() {
  using namespace deephedge;
  MarketParams market;  // mu 0.08, sigma 0.3, s0 100, T 10, N 100
  CallClaim claim{110.0};
  HedgeConfig hedge;
  hedge.v0 = default_initial_capital(market, claim);
  hedge.loss.p = 2.0;

  TrainSettings training;
  training.n_iterations = 300;
  const TrainResult trained = train(market, claim, hedge, training);

  EvalSettings eval;
  eval.n_paths = 20000;
  const EvalReport deep = evaluate(trained.strategy, market, claim, hedge, eval);
  const EvalReport delta = evaluate_baseline(market, claim, hedge, eval);
  std::printf("v0 = %.4f\n", hedge.v0);
  std::printf("deep  : total %.4f (l_p %.4f, l_ad %.4f)\n", deep.loss.total, deep.loss.l_p, deep.loss.l_ad);
  std::printf("delta : total %.4f (l_p %.4f, l_ad %.4f)\n", delta.loss.total, delta.loss.l_p, delta.loss.l_ad);
  return 0;
}
