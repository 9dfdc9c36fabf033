#pragma once

// Gauss rules on intervals and product rules on spheres S^{n-1}.

#include <vector>

#include "sgwres/jet.hpp"

namespace sgwres {

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss rule for the weight (1 - t^2)^lambda on [-1, 1], lambda > -1, with
/// `points` nodes (Golub-Welsch). lambda = 0 is Gauss-Legendre.
GaussRule gauss_gegenbauer(int points, double lambda);

/// Gauss-Legendre rule mapped to [a, b].
GaussRule gauss_legendre(int points, double a, double b);

/// Surface measure of S^{n-1}.
double sphere_volume(int n);

struct SphereRule {
  int n = 0;
  std::vector<Point> nodes;
  std::vector<double> weights;
  /// Every polynomial of degree <= exact_degree is integrated exactly.
  int exact_degree = 0;

  std::size_t size() const { return nodes.size(); }

  /// One node with the whole sphere volume; exact for functions constant on
  /// spheres (radial integrands).
  static SphereRule single_direction(int n);
};

/// Product rule on S^{n-1}: 2L + 2 equispaced longitudes on the circle and
/// L + 1 Gauss-Gegenbauer nodes for each polar angle, L = level.
/// exact_degree = 2L + 1. Supports n in [2, 8].
SphereRule sphere_rule(int n, int level);

}  // namespace sgwres
