#include "sgwres/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace sgwres {

GaussRule gauss_gegenbauer(int points, double lambda) {
  if (points < 1) throw std::invalid_argument("Gauss rule needs at least one node");
  if (!(lambda > -1.0)) throw std::invalid_argument("Gegenbauer weight needs lambda > -1");
  // Symmetric Jacobi matrix of the monic recurrence for alpha = beta = lambda.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(points);
  Eigen::VectorXd sub(std::max(points - 1, 0));
  for (int k = 1; k < points; ++k) {
    const double s = 2.0 * k + 2.0 * lambda;
    const double beta = 4.0 * k * (k + lambda) * (k + lambda) * (k + 2.0 * lambda) /
                        (s * s * (s + 1.0) * (s - 1.0));
    sub(k - 1) = std::sqrt(beta);
  }
  const double mu0 = std::sqrt(std::numbers::pi) * std::tgamma(lambda + 1.0) / std::tgamma(lambda + 1.5);
  GaussRule rule;
  if (points == 1) {
    rule.nodes = {0.0};
    rule.weights = {mu0};
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw std::runtime_error("Golub-Welsch eigensolver failed");
  for (int i = 0; i < points; ++i) {
    rule.nodes.push_back(es.eigenvalues()(i));
    const double v = es.eigenvectors()(0, i);
    rule.weights.push_back(mu0 * v * v);
  }
  return rule;
}

GaussRule gauss_legendre(int points, double a, double b) {
  GaussRule r = gauss_gegenbauer(points, 0.0);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    r.nodes[i] = mid + half * r.nodes[i];
    r.weights[i] *= half;
  }
  return r;
}

double sphere_volume(int n) {
  if (n < 1) throw std::invalid_argument("sphere_volume needs n >= 1");
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

SphereRule SphereRule::single_direction(int n) {
  SphereRule r;
  r.n = n;
  Point e(n, 0.0);
  e[0] = 1.0;
  r.nodes.push_back(e);
  r.weights.push_back(sphere_volume(n));
  r.exact_degree = 0;
  return r;
}

SphereRule sphere_rule(int n, int level) {
  if (n < 2 || n > 8) throw std::invalid_argument("sphere_rule supports n in [2, 8]");
  if (level < 0) throw std::invalid_argument("sphere_rule level must be non-negative");
  const int L = level;

  // Circle S^1.
  SphereRule rule;
  rule.n = 2;
  const int m = 2 * L + 2;
  for (int k = 0; k < m; ++k) {
    const double phi = 2.0 * std::numbers::pi * (k + 0.5) / m;
    rule.nodes.push_back({std::cos(phi), std::sin(phi)});
    rule.weights.push_back(2.0 * std::numbers::pi / m);
  }

  // S^{k-1} from S^{k-2}: x = (t, sqrt(1 - t^2) y), dS = (1 - t^2)^{(k-3)/2} dt dS'.
  for (int k = 3; k <= n; ++k) {
    const GaussRule g = gauss_gegenbauer(L + 1, 0.5 * (k - 3));
    SphereRule next;
    next.n = k;
    for (std::size_t a = 0; a < g.nodes.size(); ++a) {
      const double t = g.nodes[a];
      const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
      for (std::size_t b = 0; b < rule.nodes.size(); ++b) {
        Point x(k);
        x[0] = t;
        for (int i = 0; i < k - 1; ++i) x[i + 1] = s * rule.nodes[b][i];
        next.nodes.push_back(std::move(x));
        next.weights.push_back(g.weights[a] * rule.weights[b]);
      }
    }
    rule = std::move(next);
  }
  rule.exact_degree = 2 * L + 1;
  return rule;
}

}  // namespace sgwres
