#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deephedge/baseline_delta.hpp"
#include "deephedge/config.hpp"
#include "deephedge/evaluation.hpp"
#include "deephedge/parallel.hpp"
#include "deephedge/serialization.hpp"
#include "deephedge/training.hpp"

namespace deephedge {

inline constexpr const char* kVersion = "1.0.0";

/// Shortest round-trippable form: 17 significant digits, '.' decimal separator.
inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline nlohmann::json to_json(const MarketParams& m) {
  return {{"mu", m.mu}, {"sigma", m.sigma}, {"s0", m.s0}, {"r", m.r}, {"maturity", m.maturity}, {"n_steps", m.n_steps}};
}

inline nlohmann::json to_json(const HedgeConfig& h) {
  return {{"v0", h.v0},
          {"bankruptcy_bound", h.bankruptcy_bound},
          {"c_cost", h.c_cost},
          {"c_ad", h.c_ad},
          {"p", h.loss.p},
          {"bankruptcy_eps", h.bankruptcy_eps},
          {"exponent_clamp", h.exponent_clamp},
          {"charge_initial_position", h.charge_initial_position}};
}

inline nlohmann::json to_json(const LossBreakdown& l) {
  return {{"l_p", l.l_p}, {"l_cost", l.l_cost}, {"l_ad", l.l_ad}, {"total", l.total}};
}

inline MarketParams market_from_json(const nlohmann::json& j) {
  MarketParams m;
  m.mu = j.at("mu").get<double>();
  m.sigma = j.at("sigma").get<double>();
  m.s0 = j.at("s0").get<double>();
  m.r = j.at("r").get<double>();
  m.maturity = j.at("maturity").get<double>();
  m.n_steps = j.at("n_steps").get<std::size_t>();
  m.validate();
  return m;
}

inline HedgeConfig hedge_from_json(const nlohmann::json& j) {
  HedgeConfig h;
  h.v0 = j.at("v0").get<double>();
  h.bankruptcy_bound = j.at("bankruptcy_bound").get<double>();
  h.c_cost = j.at("c_cost").get<double>();
  h.c_ad = j.at("c_ad").get<double>();
  h.loss.p = j.at("p").get<double>();
  h.bankruptcy_eps = j.at("bankruptcy_eps").get<double>();
  h.exponent_clamp = j.at("exponent_clamp").get<double>();
  h.charge_initial_position = j.at("charge_initial_position").get<bool>();
  h.validate();
  return h;
}

struct CurveRow {
  std::size_t time_index;
  double spot;
  double deep;
  double delta;
};

/// Deep and delta positions on a spot grid at the given step indices.
inline std::vector<CurveRow> emit_strategy_curve(const StrategyStack& strategy, const std::vector<std::size_t>& times,
                                                 const std::vector<double>& spot_grid, const DeltaStrategy& delta,
                                                 double dt) {
  std::vector<CurveRow> rows;
  rows.reserve(times.size() * spot_grid.size());
  for (std::size_t k : times) {
    if (k >= strategy.networks.size())
      throw std::invalid_argument("emit_strategy_curve: time index " + std::to_string(k) + " outside 0.." +
                                  std::to_string(strategy.networks.size() - 1));
    const double t_k = static_cast<double>(k) * dt;
    for (double s : spot_grid) rows.push_back({k, s, strategy.position(k, s), delta_position(s, t_k, delta)});
  }
  return rows;
}

inline void write_curve_csv(const std::vector<CurveRow>& rows, std::ostream& out) {
  out << "time_index,spot,deep_position,delta_position\n";
  for (const auto& r : rows)
    out << r.time_index << ',' << format_real(r.spot) << ',' << format_real(r.deep) << ',' << format_real(r.delta) << '\n';
}

inline void write_history_csv(const std::vector<LossBreakdown>& history, std::ostream& out) {
  out << "iteration,l_p,l_cost,l_ad,total\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& l = history[i];
    out << i << ',' << format_real(l.l_p) << ',' << format_real(l.l_cost) << ',' << format_real(l.l_ad) << ','
        << format_real(l.total) << '\n';
  }
}

/// One (p, c_cost) cell: deep and delta evaluated on the same held-out batch.
struct TableRow {
  double p = 0.0;
  double c_cost = 0.0;
  std::optional<EvalReport> deep;  // empty when training failed
  EvalReport delta;
  std::string failure;
  std::string cell_dir;
  std::string strategy_hash;
  std::vector<LossBreakdown> history;
};

struct ReportBundle {
  std::vector<TableRow> rows;
  nlohmann::json manifest;
};

namespace detail {

inline std::string cell_name(double p, double c_cost) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "p%g_c%g", p, c_cost);
  return buf;
}

inline std::string table_csv_header() {
  return "p,c_cost,strategy,status,l_p,l_cost,l_ad,total,admissibility_violation,bankruptcy_rate,"
         "mean_terminal_wealth,eval_seed,n_paths\n";
}

inline double mean_violation(const EvalReport& r) {
  double s = 0.0;
  for (double m : r.running_min_samples) s += m < 0.0 ? -m : 0.0;
  return s / static_cast<double>(r.running_min_samples.size());
}

inline void table_csv_row(std::ostream& out, const TableRow& row, const char* name, const EvalReport* r) {
  out << format_real(row.p) << ',' << format_real(row.c_cost) << ',' << name << ',';
  if (r == nullptr) {
    out << "failed,,,,,,,,," << "\n";
    return;
  }
  out << "ok," << format_real(r->loss.l_p) << ',' << format_real(r->loss.l_cost) << ',' << format_real(r->loss.l_ad)
      << ',' << format_real(r->loss.total) << ',' << format_real(mean_violation(*r)) << ','
      << format_real(r->bankruptcy_rate) << ',' << format_real(r->terminal_wealth.mean) << ',' << r->seed << ','
      << r->n_paths << '\n';
}

/// Mirrors the layout of the published tables: one table per cost level,
/// strategies as rows and risk-aversion levels as columns.
inline std::string plain_tables(const ExperimentConfig& cfg, const std::vector<TableRow>& rows) {
  std::ostringstream out;
  char buf[128];
  for (double c : cfg.cost_grid) {
    std::snprintf(buf, sizeof buf, "Efficient hedging loss, proportional transaction cost %g\n", c);
    out << buf;
    out << "             ";
    for (double p : cfg.p_grid) {
      std::snprintf(buf, sizeof buf, " | %10s", ("p = " + format_real(p)).c_str());
      out << buf;
    }
    out << '\n';
    for (int which = 0; which < 2; ++which) {
      out << (which == 0 ? "deep hedge   " : "delta hedge  ");
      for (double p : cfg.p_grid) {
        const TableRow* row = nullptr;
        for (const auto& r : rows)
          if (r.p == p && r.c_cost == c) row = &r;
        const EvalReport* rep = row == nullptr ? nullptr : (which == 0 ? (row->deep ? &*row->deep : nullptr) : &row->delta);
        if (rep == nullptr)
          std::snprintf(buf, sizeof buf, " | %10s", "failed");
        else
          std::snprintf(buf, sizeof buf, " | %10.2f", rep->loss.total);
        out << buf;
      }
      out << '\n';
    }
    out << '\n';
  }
  return out.str();
}

inline void write_terminal_wealth(std::ostream& out, const TableRow& row, std::size_t samples) {
  out << "strategy,path,terminal_wealth\n";
  auto emit = [&](const char* name, const EvalReport& r) {
    const std::size_t n = std::min(samples, r.terminal_samples.size());
    for (std::size_t i = 0; i < n; ++i) out << name << ',' << i << ',' << format_real(r.terminal_samples[i]) << '\n';
  };
  if (row.deep) emit("deep", *row.deep);
  emit("delta", row.delta);
}

}  // namespace detail

struct RunOptions {
  std::size_t threads = 1;
};

/// Trains and evaluates every (p, c_cost) cell and writes the bundle:
///   table.csv, tables.txt, manifest.json, resolved_config.json and per cell
///   history.csv, terminal_wealth.csv, curves.csv, strategy/.
/// A cell whose training diverges is recorded as failed; the others still run.
inline ReportBundle run_experiment(const ExperimentConfig& config, const RunOptions& options = {}) {
  validate(config);
  namespace fs = std::filesystem;
  const fs::path root(config.output_dir);
  fs::create_directories(root / "cells");

  std::vector<TableRow> rows;
  for (double c : config.cost_grid)
    for (double p : config.p_grid) {
      TableRow row;
      row.p = p;
      row.c_cost = c;
      row.cell_dir = "cells/" + detail::cell_name(p, c);
      rows.push_back(std::move(row));
    }

  // Cells run concurrently when threads > 1; each is deterministic on its own.
  parallel_for_chunks(rows.size(), options.threads, [&](std::size_t idx) {
    TableRow& row = rows[idx];
    const HedgeConfig hedge = config.hedge_config(row.p, row.c_cost);
    const fs::path dir = root / row.cell_dir;
    fs::create_directories(dir);
    EvalSettings eval = config.eval;
    eval.threads = 1;
    row.delta = evaluate_baseline(config.market, config.claim, hedge, eval);
    TrainSettings training = config.training;
    training.threads = 1;
    try {
      TrainResult trained = train(config.market, config.claim, hedge, training);
      row.history = std::move(trained.history);
      row.deep = evaluate(trained.strategy, config.market, config.claim, hedge, eval);
      nlohmann::json extra{{"market", to_json(config.market)},
                           {"claim", {{"strike", config.claim.strike}}},
                           {"hedge", to_json(hedge)},
                           {"training_seed", training.seed},
                           {"training_iterations", training.n_iterations},
                           {"batch_size", training.batch_size}};
      row.strategy_hash = save_strategy(trained.strategy, dir / "strategy", extra);
      const auto rows_curve =
          emit_strategy_curve(trained.strategy, config.curve_indices(), config.spot_grid.values(),
                              DeltaStrategy::for_market(config.market, config.claim), config.market.dt());
      std::ofstream curves(dir / "curves.csv", std::ios::binary);
      write_curve_csv(rows_curve, curves);
    } catch (const TrainingDiverged& e) {
      row.failure = e.what();
      row.history = e.history();
    }
    std::ofstream history(dir / "history.csv", std::ios::binary);
    write_history_csv(row.history, history);
    std::ofstream wealth(dir / "terminal_wealth.csv", std::ios::binary);
    detail::write_terminal_wealth(wealth, row, config.wealth_samples);
  });

  {
    std::ofstream table(root / "table.csv", std::ios::binary);
    table << detail::table_csv_header();
    for (const auto& row : rows) {
      detail::table_csv_row(table, row, "deep", row.deep ? &*row.deep : nullptr);
      detail::table_csv_row(table, row, "delta", &row.delta);
    }
  }
  {
    std::ofstream text(root / "tables.txt", std::ios::binary);
    text << detail::plain_tables(config, rows);
  }

  const nlohmann::json resolved = config_to_json(config);
  {
    std::ofstream out(root / "resolved_config.json", std::ios::binary);
    out << resolved.dump(2) << '\n';
  }
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json cell{{"p", row.p},
                        {"c_cost", row.c_cost},
                        {"dir", row.cell_dir},
                        {"training_seed", config.training.seed},
                        {"eval_seed", config.eval.seed},
                        {"eval_batch_seed", evaluation_batch_seed(config.eval.seed)},
                        {"n_paths", config.eval.n_paths},
                        {"status", row.failure.empty() ? "ok" : "failed"},
                        {"delta", to_json(row.delta.loss)}};
    if (row.deep) cell["deep"] = to_json(row.deep->loss);
    if (!row.failure.empty()) cell["failure"] = row.failure;
    if (!row.strategy_hash.empty()) cell["strategy_hash"] = row.strategy_hash;
    cells.push_back(cell);
  }
  nlohmann::json manifest{{"tool", "deephedge"},
                          {"version", kVersion},
                          {"rng", "mt19937_64 per path, seeded by splitmix64(seed, path); std::normal_distribution"},
                          {"initial_capital", config.initial_capital()},
                          {"config", resolved},
                          {"cells", cells}};
  {
    std::ofstream out(root / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << '\n';
  }
  return {std::move(rows), std::move(manifest)};
}

}  // namespace deephedge
