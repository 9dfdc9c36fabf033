#pragma once

// Riemannian data of an SG-classical metric on R^n, evaluated through jets.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgwres/classical.hpp"
#include "sgwres/jet.hpp"

namespace sgwres {

enum class MetricKind { flat, conformal, general };

std::string to_string(MetricKind kind);

/// Metric g_{jk}(x) on R^n. Registry constructors cover the flat metric, the
/// conformal family g = exp(2 phi) delta with phi = c (1 + |x|^2)^{-p}, and the
/// radial shear family g = delta + c x x^T (1 + |x|^2)^{-p-1}; `general` wraps
/// an arbitrary jet-evaluable matrix.
class MetricField {
 public:
  /// Returns the n x n matrix-valued jet of g in n variables at x.
  using JetFn = std::function<Jet(std::span<const double> x, int order)>;

  static MetricField flat(int n);
  static MetricField conformal(int n, double c, double p);
  static MetricField radial_shear(int n, double c, double p);
  static MetricField general(int n, JetFn entries, double alpha, std::string name);

  int dim() const { return n_; }
  MetricKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  /// Decay exponent: g_{jk} - delta_{jk} = O(|x|^{-alpha}).
  double alpha() const { return alpha_; }
  double c() const { return c_; }
  double p() const { return p_; }

  Jet jet(std::span<const double> x, int order) const;
  Eigen::MatrixXd value(std::span<const double> x) const;
  /// phi with g = exp(2 phi) delta; conformal kind only.
  Jet conformal_factor(std::span<const double> x, int order) const;

  /// sqrt(det g) as a classical symbol of order 0, with its x-terms when known.
  ClassicalFunction volume_density() const;
  /// s(x) sqrt(det g) as a classical symbol, with its x-terms when known.
  ClassicalFunction scalar_curvature_density() const;

 private:
  MetricField() = default;

  int n_ = 0;
  MetricKind kind_ = MetricKind::flat;
  std::string name_;
  double alpha_ = 0.0;
  double c_ = 0.0;
  double p_ = 0.0;
  JetFn entries_;
  // sqrt(det g) - 1 in closed form, when available.
  std::function<double(std::span<const double>)> volume_excess_;
  // Coefficients of u^k, u = 1/|x|, for radial registry metrics.
  std::optional<std::vector<double>> sqrt_det_series_;
  std::optional<std::vector<double>> scalar_density_series_;
  double scalar_density_order_ = 0.0;
};

struct CurvatureData {
  int n = 0;
  Point x;
  std::vector<double> christoffel;  // Gamma^i_{jk} at i*n*n + j*n + k
  std::vector<double> riemann;      // R^i_{jkl} at ((i*n + j)*n + k)*n + l
  std::vector<double> ricci;        // R_{jk} at j*n + k
  double scalar = 0.0;
  double sqrt_det_g = 1.0;

  double gamma(int i, int j, int k) const { return christoffel[(i * n + j) * n + k]; }
  double riem(int i, int j, int k, int l) const {
    return riemann[((i * n + j) * n + k) * n + l];
  }
  double ric(int j, int k) const { return ricci[j * n + k]; }
};

/// Christoffel symbols, Riemann/Ricci tensors and scalar curvature at x, with
/// R^i_{jkl} = d_k G^i_{lj} - d_l G^i_{kj} + G^i_{km} G^m_{lj} - G^i_{lm} G^m_{kj}
/// and s = g^{jl} R^i_{jil}; positive on the round sphere.
CurvatureData curvature_at(const MetricField& g, std::span<const double> x);

double scalar_curvature(const MetricField& g, std::span<const double> x);
/// Jet of s(x) in the n x-variables; order <= kMaxJetOrder - 2.
Jet scalar_curvature_jet(const MetricField& g, std::span<const double> x, int order);
double sqrt_det_g(const MetricField& g, std::span<const double> x);

/// Scalar jets Gamma^i_{jk} of the given order (metric jets of order + 1).
std::vector<Jet> christoffel_jets(const MetricField& g, std::span<const double> x, int order);

/// Jet of the frame e_a^i (entry (a, i)), lower triangular, with
/// sum_{ij} e_a^i g_{ij} e_b^j = delta_{ab}. Built from the Cholesky factor of g.
Jet orthonormal_frame(const MetricField& g, std::span<const double> x, int order);

struct SgRaySamples {
  std::vector<Point> directions;  // unit vectors
  std::vector<double> radii;

  /// `rays` directions (coordinate axes first, then seeded random), radii
  /// log-spaced over [1, 1e4].
  static SgRaySamples standard(int n, int rays = 8, int radii = 24, unsigned seed = 1);
};

struct SgEntryFit {
  int j = 0;
  int k = 0;
  int derivative_order = 0;
  /// Least-squares slope of log max|D^beta g_jk| against log(1 + |x|);
  /// empty when every sample vanishes identically.
  std::optional<double> fitted_exponent;
  bool pass = true;
};

struct SgCheckReport {
  int beta_max = 0;
  std::vector<SgEntryFit> entries;
  bool pass = true;
};

/// Numerical evidence for |D^beta g_jk(x)| <= C (1 + |x|)^{-|beta|}: an entry
/// passes when its fitted exponent is at most -|beta| + 0.1.
SgCheckReport check_sg_classical(const MetricField& g, int beta_max, const SgRaySamples& samples);

}  // namespace sgwres
