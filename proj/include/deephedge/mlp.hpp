#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "deephedge/autodiff.hpp"
#include "deephedge/rng.hpp"

namespace deephedge {

/// Layer sizes of every per-step hedging network: one input (log-moneyness),
/// two hidden ReLU layers of 21 units, one linear output (the position).
inline const std::vector<std::size_t> kHedgeLayerSizes{1, 21, 21, 1};

/// Fully connected network parameters in one flat buffer. Layout is layer-major;
/// within a layer the out x in weight matrix comes first (row-major), then the
/// out-sized bias vector. This is also the serialized layout.
class MlpParams {
 public:
  MlpParams() = default;
  explicit MlpParams(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("mlp: need at least input and output sizes");
    for (auto s : sizes_)
      if (s < 1) throw std::invalid_argument("mlp: every layer size must be >= 1");
    offsets_.reserve(n_layers());
    std::size_t total = 0;
    for (std::size_t l = 0; l < n_layers(); ++l) {
      offsets_.push_back(total);
      total += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
    }
    values_.assign(total, 0.0);
  }

  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  std::size_t n_layers() const noexcept { return sizes_.empty() ? 0 : sizes_.size() - 1; }
  std::size_t fan_in(std::size_t layer) const noexcept { return sizes_[layer]; }
  std::size_t fan_out(std::size_t layer) const noexcept { return sizes_[layer + 1]; }
  std::size_t size() const noexcept { return values_.size(); }

  std::size_t weight_offset(std::size_t layer) const noexcept { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const noexcept {
    return offsets_[layer] + fan_out(layer) * fan_in(layer);
  }

  double& weight(std::size_t layer, std::size_t out, std::size_t in) noexcept {
    return values_[weight_offset(layer) + out * fan_in(layer) + in];
  }
  double weight(std::size_t layer, std::size_t out, std::size_t in) const noexcept {
    return values_[weight_offset(layer) + out * fan_in(layer) + in];
  }
  double& bias(std::size_t layer, std::size_t out) noexcept { return values_[bias_offset(layer) + out]; }
  double bias(std::size_t layer, std::size_t out) const noexcept {
    return values_[bias_offset(layer) + out];
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const MlpParams& a, const MlpParams& b) {
    return a.sizes_ == b.sizes_ && a.values_ == b.values_;
  }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> values_;
};

/// Glorot-uniform weights on +-sqrt(6 / (fan_in + fan_out)), zero biases.
inline MlpParams mlp_init(std::span<const std::size_t> layer_sizes, std::uint64_t seed) {
  if (layer_sizes.empty()) throw std::invalid_argument("mlp_init: layer list is empty");
  MlpParams params(std::vector<std::size_t>(layer_sizes.begin(), layer_sizes.end()));
  std::mt19937_64 engine(derive_seed(seed, domain_tag("mlp_init")));
  for (std::size_t l = 0; l < params.n_layers(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(params.fan_in(l) + params.fan_out(l)));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    for (std::size_t o = 0; o < params.fan_out(l); ++o)
      for (std::size_t i = 0; i < params.fan_in(l); ++i) params.weight(l, o, i) = uniform(engine);
  }
  return params;
}

/// The network with every parameter registered as a tape leaf. Hidden layers use
/// ReLU, the output layer is affine. Only scalar-input networks are supported.
class TapedMlp {
 public:
  TapedMlp(const MlpParams& params, ad::Tape& tape) : params_(&params) {
    if (params.sizes().front() != 1 || params.sizes().back() != 1)
      throw std::invalid_argument("TapedMlp: expects a scalar-in, scalar-out network");
    leaves_.reserve(params.size());
    for (double v : params.values()) leaves_.push_back(tape.variable(v));
  }

  ad::Var operator()(const ad::Var& x) const {
    if (!std::isfinite(x.value())) throw std::invalid_argument("mlp_forward: non-finite input");
    const auto& p = *params_;
    std::vector<ad::Var> act{x};
    for (std::size_t l = 0; l < p.n_layers(); ++l) {
      const bool hidden = l + 1 < p.n_layers();
      std::vector<ad::Var> next;
      next.reserve(p.fan_out(l));
      for (std::size_t o = 0; o < p.fan_out(l); ++o) {
        ad::Var z = leaves_[p.bias_offset(l) + o];
        for (std::size_t i = 0; i < p.fan_in(l); ++i)
          z = z + leaves_[p.weight_offset(l) + o * p.fan_in(l) + i] * act[i];
        next.push_back(hidden ? ad::relu(z) : z);
      }
      act = std::move(next);
    }
    return act.front();
  }

  const std::vector<ad::Var>& leaves() const noexcept { return leaves_; }

  /// Flat parameter gradient in MlpParams layout.
  std::vector<double> gradient(const ad::Adjoints& adj) const {
    std::vector<double> g(leaves_.size());
    for (std::size_t j = 0; j < leaves_.size(); ++j) g[j] = adj.wrt(leaves_[j]);
    return g;
  }

 private:
  const MlpParams* params_;
  std::vector<ad::Var> leaves_;
};

/// Records the network applied to x on the tape.
inline ad::Var mlp_forward(const TapedMlp& net, const ad::Var& x) { return net(x); }

/// Activations kept by mlp_forward_batch for the matching backward pass.
struct MlpBatchCache {
  std::size_t batch = 0;
  /// pre[l] holds the batch x fan_out(l) pre-activations of layer l,
  /// post[l] the matching layer outputs; post[-1] is the input itself.
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;
  std::vector<double> input;
};

/// Evaluates the network on a batch of scalar inputs. Same arithmetic as TapedMlp,
/// laid out for a hand-written reverse pass.
inline void mlp_forward_batch(const MlpParams& p, std::span<const double> inputs,
                              MlpBatchCache& cache, std::span<double> outputs) {
  const std::size_t batch = inputs.size();
  if (outputs.size() != batch) throw std::invalid_argument("mlp_forward_batch: output size mismatch");
  if (p.sizes().front() != 1 || p.sizes().back() != 1)
    throw std::invalid_argument("mlp_forward_batch: expects a scalar-in, scalar-out network");
  for (double x : inputs)
    if (!std::isfinite(x)) throw std::invalid_argument("mlp_forward: non-finite input");
  cache.batch = batch;
  cache.input.assign(inputs.begin(), inputs.end());
  cache.pre.resize(p.n_layers());
  cache.post.resize(p.n_layers());
  const double* in = cache.input.data();
  for (std::size_t l = 0; l < p.n_layers(); ++l) {
    const std::size_t fi = p.fan_in(l), fo = p.fan_out(l);
    const bool hidden = l + 1 < p.n_layers();
    const double* w = p.values().data() + p.weight_offset(l);
    const double* b = p.values().data() + p.bias_offset(l);
    auto& pre = cache.pre[l];
    auto& post = cache.post[l];
    pre.resize(batch * fo);
    post.resize(batch * fo);
    for (std::size_t n = 0; n < batch; ++n) {
      const double* x = in + n * fi;
      double* z = pre.data() + n * fo;
      double* a = post.data() + n * fo;
      for (std::size_t o = 0; o < fo; ++o) {
        double acc = b[o];
        const double* wrow = w + o * fi;
        for (std::size_t i = 0; i < fi; ++i) acc = acc + wrow[i] * x[i];
        z[o] = acc;
        a[o] = hidden ? (acc > 0.0 ? acc : 0.0) : acc;
      }
    }
    in = post.data();
  }
  std::copy(cache.post.back().begin(), cache.post.back().end(), outputs.begin());
}

/// Accumulates d(sum_n output_grads[n] * out_n)/d(params) into param_grads.
inline void mlp_backward_batch(const MlpParams& p, const MlpBatchCache& cache,
                               std::span<const double> output_grads, std::span<double> param_grads) {
  const std::size_t batch = cache.batch;
  if (output_grads.size() != batch || param_grads.size() != p.size())
    throw std::invalid_argument("mlp_backward_batch: shape mismatch");
  std::vector<double> delta(output_grads.begin(), output_grads.end());
  std::vector<double> prev_delta;
  for (std::size_t l = p.n_layers(); l-- > 0;) {
    const std::size_t fi = p.fan_in(l), fo = p.fan_out(l);
    const bool hidden = l + 1 < p.n_layers();
    const double* w = p.values().data() + p.weight_offset(l);
    double* gw = param_grads.data() + p.weight_offset(l);
    double* gb = param_grads.data() + p.bias_offset(l);
    const double* in = l == 0 ? cache.input.data() : cache.post[l - 1].data();
    if (hidden) {
      const auto& pre = cache.pre[l];
      for (std::size_t j = 0; j < batch * fo; ++j)
        if (!(pre[j] > 0.0)) delta[j] = 0.0;
    }
    if (l > 0) prev_delta.assign(batch * fi, 0.0);
    for (std::size_t n = 0; n < batch; ++n) {
      const double* d = delta.data() + n * fo;
      const double* x = in + n * fi;
      for (std::size_t o = 0; o < fo; ++o) {
        const double g = d[o];
        if (g == 0.0) continue;
        gb[o] += g;
        double* gwrow = gw + o * fi;
        const double* wrow = w + o * fi;
        for (std::size_t i = 0; i < fi; ++i) gwrow[i] += g * x[i];
        if (l > 0) {
          double* pd = prev_delta.data() + n * fi;
          for (std::size_t i = 0; i < fi; ++i) pd[i] += g * wrow[i];
        }
      }
    }
    if (l > 0) delta.swap(prev_delta);
  }
}

}  // namespace deephedge
