// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bgpad::stl {

/// Parameters of the Cleveland et al. STL procedure. Zero spans are
/// resolved to their defaults by resolved().
struct StlConfig {
  std::size_t period = 35;
  std::size_t inner_iterations = 2;
  std::size_t outer_iterations = 1;
  std::size_t seasonal_span = 7;
  std::size_t trend_span = 0;    // default: smallest odd >= 1.5 p / (1 - 1.5 / seasonal_span)
  std::size_t lowpass_span = 0;  // default: smallest odd >= p

  StlConfig resolved() const;
  void validate() const;  // expects a resolved config
};

struct Decomposition {
  std::vector<double> observed;
  std::vector<double> trend;
  std::vector<double> seasonal;
  std::vector<double> residual;
  std::vector<double> weight;
};

/// Additive decomposition y = trend + seasonal + residual. The residual is
/// defined as the exact remainder, and `weight` is the bisquare robustness
/// weight of that final residual.
Decomposition decompose(std::span<const double> y, const StlConfig& cfg);

/// Bisquare weights (1 - u^2)^2, u = |r| / (6 median|r|), zero for u >= 1.
/// A numerically zero median yields all ones.
std::vector<double> robustness_weights(std::span<const double> residual, double scale_hint = 1.0);

}  // namespace bgpad::stl
