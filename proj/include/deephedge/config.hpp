#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deephedge/evaluation.hpp"
#include "deephedge/hedging.hpp"
#include "deephedge/market_sim.hpp"
#include "deephedge/payoff.hpp"
#include "deephedge/training.hpp"

namespace deephedge {

/// Hedge settings shared by every cell of an experiment grid; p and c_cost come
/// from the grids.
struct HedgeSettings {
  /// Absolute initial capital. When absent, v0_fraction times the zero-rate
  /// Black-Scholes price is used.
  std::optional<double> v0;
  double v0_fraction = 0.5;
  double bankruptcy_bound = -100.0;
  double c_ad = 1.0;
  double bankruptcy_eps = 1e-9;
  double exponent_clamp = 50.0;
  bool charge_initial_position = false;
};

struct SpotGrid {
  double min = 50.0;
  double max = 250.0;
  std::size_t points = 41;

  std::vector<double> values() const {
    std::vector<double> out(points);
    for (std::size_t j = 0; j < points; ++j)
      out[j] = points == 1 ? min : min + (max - min) * static_cast<double>(j) / static_cast<double>(points - 1);
    return out;
  }
};

struct ExperimentConfig {
  MarketParams market;
  CallClaim claim;
  HedgeSettings hedge;
  TrainSettings training;
  EvalSettings eval;
  std::vector<double> p_grid{1.0, 1.1, 2.0};
  std::vector<double> cost_grid{0.0, 0.01};
  /// Curve times as fractions of maturity, mapped to the nearest grid index.
  std::vector<double> curve_times{0.25, 0.5, 0.75};
  SpotGrid spot_grid;
  /// Leading evaluation paths whose terminal wealth is written out.
  std::size_t wealth_samples = 5000;
  std::string output_dir = "results";

  double initial_capital() const {
    return hedge.v0 ? *hedge.v0 : default_initial_capital(market, claim, hedge.v0_fraction);
  }

  HedgeConfig hedge_config(double p, double c_cost) const {
    HedgeConfig h;
    h.v0 = initial_capital();
    h.bankruptcy_bound = hedge.bankruptcy_bound;
    h.c_cost = c_cost;
    h.c_ad = hedge.c_ad;
    h.loss.p = p;
    h.bankruptcy_eps = hedge.bankruptcy_eps;
    h.exponent_clamp = hedge.exponent_clamp;
    h.charge_initial_position = hedge.charge_initial_position;
    return h;
  }

  std::vector<std::size_t> curve_indices() const {
    std::vector<std::size_t> out;
    for (double f : curve_times) {
      auto k = static_cast<std::size_t>(std::llround(f * static_cast<double>(market.n_steps)));
      out.push_back(std::min(k, market.n_steps - 1));
    }
    return out;
  }
};

class ConfigError : public std::runtime_error {
 public:
  enum class Kind { missing_file, syntax, unknown_key, type_mismatch, constraint };

  ConfigError(Kind kind, std::string field, const std::string& message)
      : std::runtime_error(describe(kind) + (field.empty() ? "" : " at '" + field + "'") + ": " + message),
        kind_(kind),
        field_(std::move(field)) {}

  Kind kind() const noexcept { return kind_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string describe(Kind k) {
    switch (k) {
      case Kind::missing_file: return "config file not found";
      case Kind::syntax: return "config syntax error";
      case Kind::unknown_key: return "unknown config key";
      case Kind::type_mismatch: return "config type error";
      case Kind::constraint: return "invalid config value";
    }
    return "config error";
  }

  Kind kind_;
  std::string field_;
};

namespace detail {

using nlohmann::json;

class ObjectReader {
 public:
  ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(ConfigError::Kind::type_mismatch, path_, "expected an object");
  }

  /// Rejects every key that was never looked up.
  void finish() const {
    for (const auto& [key, value] : node_.items())
      if (!seen_.count(key)) throw ConfigError(ConfigError::Kind::unknown_key, field(key), "not recognized");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(ConfigError::Kind::type_mismatch, field(key), "expected a number");
      out = v->get<double>();
    }
  }

  void optional_number(const std::string& key, std::optional<double>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      if (!v->is_number()) throw ConfigError(ConfigError::Kind::type_mismatch, field(key), "expected a number or null");
      out = v->get<double>();
    }
  }

  template <class Int>
  void count(const std::string& key, Int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<long long>() < 0))
        throw ConfigError(ConfigError::Kind::type_mismatch, field(key), "expected a non-negative integer");
      out = v->get<Int>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(ConfigError::Kind::type_mismatch, field(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(ConfigError::Kind::type_mismatch, field(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void numbers(const std::string& key, std::vector<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(ConfigError::Kind::type_mismatch, field(key), "expected an array of numbers");
      out.clear();
      for (const auto& x : *v) {
        if (!x.is_number()) throw ConfigError(ConfigError::Kind::type_mismatch, field(key), "expected an array of numbers");
        out.push_back(x.get<double>());
      }
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(ConfigError::Kind::constraint, field, what);
}

}  // namespace detail

/// Checks every constraint; the error names the offending field.
inline void validate(const ExperimentConfig& c) {
  using detail::require;
  const auto& m = c.market;
  require(std::isfinite(m.mu), "market.mu", "must be finite");
  require(m.sigma > 0.0 && std::isfinite(m.sigma), "market.sigma", "must be > 0");
  require(m.s0 > 0.0 && std::isfinite(m.s0), "market.s0", "must be > 0");
  require(std::isfinite(m.r), "market.r", "must be finite");
  require(m.maturity > 0.0 && std::isfinite(m.maturity), "market.maturity", "must be > 0");
  require(m.n_steps >= 1, "market.n_steps", "must be >= 1");
  require(c.claim.strike > 0.0 && std::isfinite(c.claim.strike), "claim.strike", "must be > 0");
  const auto& h = c.hedge;
  require(!h.v0 || std::isfinite(*h.v0), "hedge.v0", "must be finite");
  require(h.v0_fraction >= 0.0 && std::isfinite(h.v0_fraction), "hedge.v0_fraction", "must be >= 0");
  require(h.bankruptcy_bound < 0.0, "hedge.bankruptcy_bound", "must be < 0");
  require(h.c_ad >= 0.0 && std::isfinite(h.c_ad), "hedge.c_ad", "must be >= 0");
  require(h.bankruptcy_eps > 0.0, "hedge.bankruptcy_eps", "must be > 0");
  require(h.exponent_clamp > 0.0, "hedge.exponent_clamp", "must be > 0");
  require(c.training.batch_size >= 1, "training.batch_size", "must be >= 1");
  require(c.training.n_iterations >= 1, "training.n_iterations", "must be >= 1");
  require(c.training.learning_rate > 0.0, "training.learning_rate", "must be > 0");
  require(c.eval.n_paths >= 1, "eval.n_paths", "must be >= 1");
  require(!c.p_grid.empty(), "p_grid", "must not be empty");
  for (double p : c.p_grid) require(p > 0.0 && std::isfinite(p), "p_grid", "every exponent must be > 0");
  require(!c.cost_grid.empty(), "cost_grid", "must not be empty");
  for (double x : c.cost_grid) require(x >= 0.0 && std::isfinite(x), "cost_grid", "every cost must be >= 0");
  for (double f : c.curve_times) require(f >= 0.0 && f < 1.0, "curve_times", "fractions must lie in [0, 1)");
  require(c.spot_grid.min > 0.0 && c.spot_grid.max >= c.spot_grid.min, "spot_grid", "need 0 < min <= max");
  require(c.spot_grid.points >= 1, "spot_grid.points", "must be >= 1");
  require(!c.output_dir.empty(), "output_dir", "must not be empty");
}

/// Strict JSON decoding: unknown keys are errors, absent keys keep their defaults.
inline ExperimentConfig config_from_json(const nlohmann::json& root) {
  ExperimentConfig c;
  {
    detail::ObjectReader top(root, "");
    if (const auto* node = top.find("market")) {
      detail::ObjectReader r(*node, "market");
      r.number("mu", c.market.mu);
      r.number("sigma", c.market.sigma);
      r.number("s0", c.market.s0);
      r.number("r", c.market.r);
      r.number("maturity", c.market.maturity);
      r.count("n_steps", c.market.n_steps);
      r.finish();
    }
    if (const auto* node = top.find("claim")) {
      detail::ObjectReader r(*node, "claim");
      r.number("strike", c.claim.strike);
      r.finish();
    }
    if (const auto* node = top.find("hedge")) {
      detail::ObjectReader r(*node, "hedge");
      r.optional_number("v0", c.hedge.v0);
      r.number("v0_fraction", c.hedge.v0_fraction);
      r.number("bankruptcy_bound", c.hedge.bankruptcy_bound);
      r.number("c_ad", c.hedge.c_ad);
      r.number("bankruptcy_eps", c.hedge.bankruptcy_eps);
      r.number("exponent_clamp", c.hedge.exponent_clamp);
      r.boolean("charge_initial_position", c.hedge.charge_initial_position);
      r.finish();
    }
    if (const auto* node = top.find("training")) {
      detail::ObjectReader r(*node, "training");
      r.count("batch_size", c.training.batch_size);
      r.count("n_iterations", c.training.n_iterations);
      r.count("seed", c.training.seed);
      r.number("learning_rate", c.training.learning_rate);
      r.number("clip_norm", c.training.clip_norm);
      r.finish();
    }
    if (const auto* node = top.find("eval")) {
      detail::ObjectReader r(*node, "eval");
      r.count("n_paths", c.eval.n_paths);
      r.count("seed", c.eval.seed);
      r.finish();
    }
    top.numbers("p_grid", c.p_grid);
    top.numbers("cost_grid", c.cost_grid);
    top.numbers("curve_times", c.curve_times);
    if (const auto* node = top.find("spot_grid")) {
      detail::ObjectReader r(*node, "spot_grid");
      r.number("min", c.spot_grid.min);
      r.number("max", c.spot_grid.max);
      r.count("points", c.spot_grid.points);
      r.finish();
    }
    top.count("wealth_samples", c.wealth_samples);
    top.string("output_dir", c.output_dir);
    top.finish();
  }
  validate(c);
  return c;
}

/// Fully resolved config; feeding it back to config_from_json reproduces `c`.
inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["market"] = {{"mu", c.market.mu},       {"sigma", c.market.sigma},       {"s0", c.market.s0},
                 {"r", c.market.r},         {"maturity", c.market.maturity}, {"n_steps", c.market.n_steps}};
  j["claim"] = {{"strike", c.claim.strike}};
  j["hedge"] = {{"v0", c.hedge.v0 ? nlohmann::json(*c.hedge.v0) : nlohmann::json(nullptr)},
                {"v0_fraction", c.hedge.v0_fraction},
                {"bankruptcy_bound", c.hedge.bankruptcy_bound},
                {"c_ad", c.hedge.c_ad},
                {"bankruptcy_eps", c.hedge.bankruptcy_eps},
                {"exponent_clamp", c.hedge.exponent_clamp},
                {"charge_initial_position", c.hedge.charge_initial_position}};
  j["training"] = {{"batch_size", c.training.batch_size},
                   {"n_iterations", c.training.n_iterations},
                   {"seed", c.training.seed},
                   {"learning_rate", c.training.learning_rate},
                   {"clip_norm", c.training.clip_norm}};
  j["eval"] = {{"n_paths", c.eval.n_paths}, {"seed", c.eval.seed}};
  j["p_grid"] = c.p_grid;
  j["cost_grid"] = c.cost_grid;
  j["curve_times"] = c.curve_times;
  j["spot_grid"] = {{"min", c.spot_grid.min}, {"max", c.spot_grid.max}, {"points", c.spot_grid.points}};
  j["wealth_samples"] = c.wealth_samples;
  j["output_dir"] = c.output_dir;
  return j;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return config_from_json(nlohmann::json::object());
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(ConfigError::Kind::syntax, "", e.what());
  }
  return config_from_json(root);
}

inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(ConfigError::Kind::missing_file, "", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace deephedge
