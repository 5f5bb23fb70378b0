#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace deephedge {

struct AdamHyper {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment accumulators for one parameter vector.
struct AdamState {
  AdamHyper hyper;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(std::size_t n, AdamHyper h = {}) : hyper(h), m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update (Kingma & Ba), in place.
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw std::invalid_argument("adam_step: parameter, gradient and state shapes disagree");
  const auto& h = state.hyper;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t j = 0; j < params.size(); ++j) {
    const double g = grads[j];
    state.m[j] = h.beta1 * state.m[j] + (1.0 - h.beta1) * g;
    state.v[j] = h.beta2 * state.v[j] + (1.0 - h.beta2) * g * g;
    const double m_hat = state.m[j] / c1;
    const double v_hat = state.v[j] / c2;
    params[j] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.eps);
  }
}

/// Rescales all gradient blocks jointly so their global L2 norm is at most max_norm.
/// Returns the norm before clipping. max_norm <= 0 disables clipping.
inline double clip_by_global_norm(std::span<std::vector<double>> blocks, double max_norm) {
  double sq = 0.0;
  for (const auto& b : blocks)
    for (double g : b) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& b : blocks)
      for (double& g : b) g *= scale;
  }
  return norm;
}

}  // namespace deephedge
