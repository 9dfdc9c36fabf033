#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace sgwres {

/// Degree (m - j) homogeneous term of a classical symbol, restricted to the unit
/// sphere; its value at x is |x|^{m-j} * term(x / |x|).
using HomogeneousTerm = std::function<double(std::span<const double> unit_x)>;

/// A real classical symbol of order m on R^n, together with as many of its
/// x-homogeneous terms a_{m-j} as the caller can supply.
struct ClassicalFunction {
  int n = 0;
  double order = 0.0;
  std::function<double(std::span<const double> x)> value;
  std::vector<HomogeneousTerm> x_terms;
  /// Optional value(x) - |x|^m x_terms[0](x / |x|) evaluated without cancellation.
  std::function<double(std::span<const double> x)> excess;
  std::string label;
};

}  // namespace sgwres
