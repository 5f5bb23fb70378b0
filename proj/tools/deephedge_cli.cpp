// Experiment runner: trains deep hedging strategies and compares them with the
// discretized delta hedge.
//
//   deephedge run <config.json> [--threads N] [--seed-override S] [--output DIR]
//   deephedge evaluate <strategy_dir> <config.json> [--threads N] [--output FILE]
//   deephedge curves <strategy_dir> [--times 25,50,75] [--spot-min 50] [--spot-max 250] [--points 41] [--output FILE]

#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "deephedge/deephedge.hpp"

namespace {

using namespace deephedge;

int run_command(const std::string& config_path, std::size_t threads, std::optional<std::uint64_t> seed_override,
                const std::string& output) {
  ExperimentConfig config = parse_config(config_path);
  if (seed_override) config.training.seed = *seed_override;
  if (!output.empty()) config.output_dir = output;
  const ReportBundle bundle = run_experiment(config, {threads});
  std::ifstream tables(std::filesystem::path(config.output_dir) / "tables.txt");
  std::cout << tables.rdbuf();
  int failures = 0;
  for (const auto& row : bundle.rows) {
    if (!row.failure.empty()) {
      std::cerr << "cell p=" << row.p << " c_cost=" << row.c_cost << " failed: " << row.failure << '\n';
      ++failures;
    }
  }
  std::cout << "results written to " << config.output_dir << '\n';
  return failures == 0 ? 0 : 3;
}

int evaluate_command(const std::string& strategy_dir, const std::string& config_path, std::size_t threads,
                     const std::string& output) {
  const ExperimentConfig config = parse_config(config_path);
  const LoadedStrategy loaded = load_strategy(strategy_dir);
  const MarketParams market = config.market;
  const HedgeConfig hedge = hedge_from_json(loaded.manifest.at("hedge"));
  loaded.strategy.validate(market.n_steps);
  EvalSettings eval = config.eval;
  eval.threads = threads;
  const EvalReport deep = evaluate(loaded.strategy, market, config.claim, hedge, eval);
  const EvalReport delta = evaluate_baseline(market, config.claim, hedge, eval);

  TableRow row;
  row.p = hedge.loss.p;
  row.c_cost = hedge.c_cost;
  row.deep = deep;
  row.delta = delta;
  std::ofstream file;
  if (!output.empty()) {
    file.open(output, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write " + output);
  }
  std::ostream& out = output.empty() ? std::cout : file;
  out << detail::table_csv_header();
  detail::table_csv_row(out, row, "deep", &deep);
  detail::table_csv_row(out, row, "delta", &delta);
  return 0;
}

int curves_command(const std::string& strategy_dir, const std::vector<std::size_t>& times, double spot_min,
                   double spot_max, std::size_t points, const std::string& output) {
  const LoadedStrategy loaded = load_strategy(strategy_dir);
  const MarketParams market = market_from_json(loaded.manifest.at("market"));
  CallClaim claim{loaded.manifest.at("claim").at("strike").get<double>()};
  const SpotGrid grid{spot_min, spot_max, points};
  if (!(spot_min > 0.0) || spot_max < spot_min || points < 1)
    throw std::invalid_argument("curves: need 0 < spot-min <= spot-max and points >= 1");
  const auto rows = emit_strategy_curve(loaded.strategy, times, grid.values(), DeltaStrategy::for_market(market, claim),
                                        market.dt());
  if (output.empty()) {
    write_curve_csv(rows, std::cout);
  } else {
    std::ofstream file(output, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write " + output);
    write_curve_csv(rows, file);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep partial hedging experiments"};
  app.require_subcommand(1);

  std::string config_path, strategy_dir, output;
  std::size_t threads = 1;
  std::optional<std::uint64_t> seed_override;

  auto* run = app.add_subcommand("run", "train and evaluate every (p, cost) cell of a config");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  run->add_option("--threads", threads, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
  run->add_option("--seed-override", seed_override, "replace training.seed");
  run->add_option("--output", output, "replace output_dir");

  auto* eval = app.add_subcommand("evaluate", "evaluate a saved strategy against the delta hedge");
  eval->add_option("strategy", strategy_dir, "saved strategy directory")->required();
  eval->add_option("config", config_path, "config supplying market, claim and eval settings")->required();
  eval->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  eval->add_option("--output", output, "CSV file (default stdout)");

  std::vector<std::size_t> times{25, 50, 75};
  double spot_min = 50.0, spot_max = 250.0;
  std::size_t points = 41;
  auto* curves = app.add_subcommand("curves", "deep and delta positions on a spot grid");
  curves->add_option("strategy", strategy_dir, "saved strategy directory")->required();
  curves->add_option("--times", times, "step indices")->delimiter(',');
  curves->add_option("--spot-min", spot_min, "lowest spot");
  curves->add_option("--spot-max", spot_max, "highest spot");
  curves->add_option("--points", points, "grid points");
  curves->add_option("--output", output, "CSV file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_command(config_path, threads, seed_override, output);
    if (*eval) return evaluate_command(strategy_dir, config_path, threads, output);
    if (*curves) return curves_command(strategy_dir, times, spot_min, spot_max, points, output);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
