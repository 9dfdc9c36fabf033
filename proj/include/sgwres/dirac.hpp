#pragma once

// Atiyah-Singer Dirac operator of an SG metric on R^n: Clifford matrices, the
// symbol built from an orthonormal frame and its spin connection, the square,
// its parametrix and the residue computation for the inverse square.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sgwres/fpint.hpp"
#include "sgwres/geometry.hpp"
#include "sgwres/sgsym.hpp"

namespace sgwres {

struct CliffordAlgebra {
  int n = 0;
  int d = 0;  // spinor rank 2^{n/2}
  /// Hermitian, gamma_a gamma_b + gamma_b gamma_a = 2 delta_ab.
  std::vector<CMatrix> gamma;
};

/// Tensor products of Pauli matrices; n even, 2 <= n <= 8.
CliffordAlgebra build_clifford(int n);

/// Spin connection Omega_i = 1/4 omega_{iab} gamma^a gamma^b as d x d jets in
/// the n x-variables, with omega_{iab} = e_{aj} (d_i e_b^j + Gamma^j_{ik} e_b^k)
/// for the lower-triangular frame of orthonormal_frame. Order <= kMaxJetOrder - 1.
std::vector<Jet> spin_connection(const MetricField& g, const CliffordAlgebra& cl,
                                 std::span<const double> x, int order);

/// Symbol of D = -i gamma^a e_a^i (d_i + Omega_i): components
/// gamma^a e_a^i xi_i (degree 1) and -i gamma^a e_a^i Omega_i (degree 0).
SGSymbol dirac_symbol(const MetricField& g, const CliffordAlgebra& cl);

/// compose(d, d, 3).
SGSymbol dirac_squared(const SGSymbol& d);

struct DiracData {
  MetricField g;
  CliffordAlgebra clifford;
  SGSymbol symbol_D;
  SGSymbol symbol_D2;
  SGSymbol parametrix_D2;  // depth 3: degrees -2, -3, -4
};

/// Everything above for a metric on R^4.
DiracData build_dirac(const MetricField& g);

/// Degree -4 component of the parametrix of D^2.
SGSymbol::ComponentFn a_minus_n_component(const DiracData& dd);

/// (2 pi)^{-4} / sqrt(det g(x)): turns the xi-sphere integral of tr a_{-4} into
/// a multiple of the scalar curvature.
double kastler_normalization(const MetricField& g, std::span<const double> x);

/// kastler_normalization(x) * int_{|xi|=1} tr a_{-4}(x, xi) dS(xi).
double kastler_integral(const DiracData& dd, std::span<const double> x, const SphereRule& rule);

/// -1 / (24 pi^2).
double kastler_constant();

struct KastlerSample {
  Point x;
  double scalar = 0.0;
  double kastler = 0.0;
  double ratio = 0.0;  // kastler / scalar, 0 when |scalar| <= 1e-6
};

struct DiracWresOptions {
  SphereRule xi_rule;
  /// Rule for the x-directions; single_direction suffices for radial metrics.
  SphereRule x_rule;
  FPIntOptions fp;
  std::vector<Point> kastler_points;
};

struct DiracWresReport {
  WresReport symbol_route;
  FPIntReport curvature_fpint;  // fpint of s sqrt(det g)
  double wres_symbol_route = 0.0;
  double wres_curvature_route = 0.0;  // -(1/24 pi^2) fpint(s sqrt(det g))
  std::optional<double> plain_integral;  // of s sqrt(det g), when alpha > 2
  double relative_gap = 0.0;
  std::vector<KastlerSample> kastler_pointwise;
};

nlohmann::json to_json(const DiracWresReport& r);

/// Regularized residue of the parametrix of D^2 next to the curvature route.
DiracWresReport wres_dirac(const DiracData& dd, const DiracWresOptions& opts);

}  // namespace sgwres
