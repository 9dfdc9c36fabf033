#pragma once

// Finite-part integrals of classical symbols on R^n and the regularized
// Wodzicki residue built from the xi-degree -n component of a symbol.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sgwres/classical.hpp"
#include "sgwres/quadrature.hpp"
#include "sgwres/sgsym.hpp"

namespace sgwres {

/// sum_i w_i h(theta_i) weight(theta_i) over the rule (weight defaults to 1).
double beta_coefficient(const HomogeneousTerm& h, const SphereRule& rule,
                        const HomogeneousTerm& weight = nullptr);

/// c1 a + c2 b; orders must differ by an integer, x-terms are aligned by degree.
ClassicalFunction linear_combination(double c1, const ClassicalFunction& a, double c2,
                                     const ClassicalFunction& b);
/// a b with x-terms given by the Cauchy product (as many as both supply).
ClassicalFunction multiply(const ClassicalFunction& a, const ClassicalFunction& b);

/// Terms a_{m-j}, j < count, estimated by least-squares fits of f(r theta)
/// against r^{m-j} at large r along each requested direction.
ClassicalFunction with_fitted_x_terms(ClassicalFunction f, int count, double r_min = 50.0,
                                      double r_max = 5000.0);

struct FPIntOptions {
  /// Ladder rho_k = rho0 * 2^k, k < ladder.
  double rho0 = 8.0;
  int ladder = 8;
  /// Gauss-Legendre nodes per radial panel.
  int radial_nodes = 20;
  /// Decaying powers rho^{n+m-j} used in the extrapolation fit.
  int fit_terms = 5;
  /// Convergence threshold on the relative fit residual and stability delta.
  double tolerance = 1e-8;
};

struct FPIntReport {
  double value = 0.0;
  double order = 0.0;
  int n = 0;
  std::vector<double> betas;  // beta_j for the divergent range
  double log_coefficient = 0.0;
  std::vector<double> rho_samples;
  std::vector<double> raw_integrals;    // I(rho)
  std::vector<double> subtracted_tail;  // divergent part removed at each rho
  std::vector<double> remainders;       // I(rho) - subtracted_tail
  std::vector<double> fit_exponents;
  double fit_residual = 0.0;  // relative RMS of the extrapolation fit
  double stability = 0.0;     // relative change when the first ladder point is dropped
  bool converged = false;
  bool x_terms_fitted = false;
  std::string label;
};

nlohmann::json to_json(const FPIntReport& r);

/// Finite-part integral of a classical function of order m on R^n with respect
/// to Lebesgue measure. Divergent powers rho^{n+m-j}/(n+m-j) beta_j and, for
/// integer m, the log term beta_{n+m} log rho are subtracted; the remainder is
/// extrapolated to rho -> infinity on the radius ladder.
FPIntReport finite_part_integral(const ClassicalFunction& a, const SphereRule& rule,
                                 const FPIntOptions& opts = {});
/// Same with the integrand multiplied by a density (e.g. sqrt(det g)).
FPIntReport finite_part_integral(const ClassicalFunction& a, const ClassicalFunction& density,
                                 const SphereRule& rule, const FPIntOptions& opts = {});

/// finite_part_integral after fitting the x-terms along rays when fewer than
/// required are supplied (flagged by x_terms_fitted).
FPIntReport finite_part_integral_fitting_x_terms(ClassicalFunction a, const SphereRule& rule,
                                                 const FPIntOptions& opts = {});

/// Plain improper integral over R^n by adaptive radial quadrature; for L^1 integrands.
double plain_integral(const ClassicalFunction& a, const SphereRule& rule, double tolerance = 1e-10);

struct WresOptions {
  SphereRule xi_rule;
  SphereRule x_rule;
  FPIntOptions fp;
  /// x-order of the residue density; defaults to the symbol's x-order.
  std::optional<double> density_order;
  /// x-terms of the residue density when known; fitted along rays otherwise.
  std::vector<HomogeneousTerm> density_x_terms;
};

struct WresReport {
  double value = 0.0;
  FPIntReport fpint;
  bool non_integer_order = false;
  bool missing_component = false;
  int component_index = -1;
};

nlohmann::json to_json(const WresReport& r);

/// Residue density (2 pi)^{-n} int_{|xi|=1} tr a_{-n}(x, xi) dS(xi) as a
/// classical function of x (w.r.t. Lebesgue measure).
ClassicalFunction residue_density(const SGSymbol& a, const WresOptions& opts);

/// (2 pi)^{-n} times the finite-part x-integral of int_{|xi|=1} tr a_{-n}(x, xi) dS(xi).
/// Returns 0 with a flag for non-integer mu or when no degree -n component exists.
WresReport regularized_wres(const SGSymbol& a, const WresOptions& opts);

}  // namespace sgwres
