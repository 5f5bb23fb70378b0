#pragma once

#include "deephedge/autodiff.hpp"

namespace deephedge {

// Overloads that let the simulation templates run on plain doubles or on tape
// variables. Var versions of exp/abs/pow/relu are found by ADL.
inline double value_of(double x) noexcept { return x; }
inline double value_of(const ad::Var& x) noexcept { return x.value(); }
inline double relu(double x) noexcept { return x > 0.0 ? x : 0.0; }

template <class Real>
concept Scalar = requires(Real a, Real b) {
  { value_of(a) } -> std::convertible_to<double>;
  { a + b } -> std::convertible_to<Real>;
  { a * b } -> std::convertible_to<Real>;
};

}  // namespace deephedge
