#pragma once

// Generalized Laplacians Delta = nabla* nabla + K on a trivial bundle over an SG
// metric: their symbols, the local heat coefficient a1 = s/6 - K, heat-trace
// coefficients by finite-part integration and the residue of Delta^{-n/2+1}.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sgwres/fpint.hpp"
#include "sgwres/geometry.hpp"
#include "sgwres/sgsym.hpp"

namespace sgwres {

/// Connection coefficients A_i(x), i < n, as rank x rank jets in the x-variables.
using ConnectionFn = std::function<std::vector<Jet>(std::span<const double> x, int order)>;

/// Symmetric endomorphism field K, kept as a sum of terms c Id, c s(x) Id and
/// general fields so that its trace integral splits into known densities.
class Endomorphism {
 public:
  using FieldFn = std::function<Jet(std::span<const double> x, int order)>;

  static Endomorphism zero();
  static Endomorphism constant(double c);
  /// c s(x) Id.
  static Endomorphism curvature_multiple(double c);
  /// s(x) / 4 Id.
  static Endomorphism lichnerowicz();
  /// Arbitrary field; `trace_order` is the x-order of tr K(x) sqrt(det g(x)).
  static Endomorphism field(FieldFn f, double trace_order, std::string label);

  friend Endomorphism operator+(Endomorphism a, const Endomorphism& b);

  bool is_zero() const { return terms_.empty(); }
  std::string label() const;
  Jet jet(const MetricField& g, std::span<const double> x, int rank, int order) const;
  CMatrix value(const MetricField& g, std::span<const double> x, int rank) const;

  /// int-bar tr K sqrt(det g) dx given the two geometric finite parts.
  double trace_integral(const MetricField& g, int rank, double volume_fp, double curvature_fp,
                        const SphereRule& x_rule, const FPIntOptions& fp,
                        std::vector<FPIntReport>* field_reports = nullptr) const;
  /// x-order of tr K sqrt(det g); -infinity for K = 0.
  double trace_order(const MetricField& g) const;

 private:
  enum class Kind { constant, curvature, field };
  struct Term {
    Kind kind;
    double c = 0.0;
    FieldFn f;
    double order = 0.0;
    std::string label;
  };
  std::vector<Term> terms_;
};

struct GeneralizedLaplacian {
  MetricField g;
  int rank = 1;
  ConnectionFn connection;  // empty: A = 0
  Endomorphism K = Endomorphism::zero();

  int dim() const { return g.dim(); }
};

/// Symbol of nabla* nabla + K, nabla_j = d_j + A_j:
///   g^{jk} xi_j xi_k - 2i g^{jk} A_j xi_k + i Gamma^l xi_l
///   - g^{jk} d_j A_k - g^{jk} A_j A_k + Gamma^l A_l + K,   Gamma^l = g^{jk} Gamma^l_{jk}.
SGSymbol laplace_type_symbol(const GeneralizedLaplacian& L);

struct HeatCoefficients {
  Point x;
  CMatrix a0;
  CMatrix a1;  // s/6 Id - K
  bool remainder_order_t2 = true;
};

HeatCoefficients heat_a1(const GeneralizedLaplacian& L, std::span<const double> x);

struct HeatTraceCoefficients {
  double C0 = 0.0;  // rank int-bar sqrt(det g)
  double C1 = 0.0;  // int-bar (rank s / 6 - tr K) sqrt(det g)
  FPIntReport volume;
  FPIntReport curvature;
  std::vector<FPIntReport> endomorphism_fields;
  /// Log-divergence coefficients of the finite parts entering C1.
  double log_coefficient = 0.0;
  bool converged = true;
};

HeatTraceCoefficients heat_trace_coefficients(const GeneralizedLaplacian& L, const SphereRule& x_rule,
                                              const FPIntOptions& fp = {});

/// (n - 2) / (Gamma(n/2) (4 pi)^{n/2}).
double heat_prefactor(int n);
/// Relative gap between 2 Gamma((n-2)/2)^{-1} (4 pi)^{-n/2} and heat_prefactor(n).
double gamma_identity_gap(int n);
/// heat_prefactor(n) 2^{n/2} / 12; equals 1/(24 pi^2) at n = 4.
double kkw_constant(int n);

struct HeatWresReport {
  int n = 0;
  int rank = 0;
  HeatTraceCoefficients coefficients;
  double c20 = 0.0;  // (4 pi)^{-n/2} C1
  double wres = 0.0;  // 2 Gamma((n-2)/2)^{-1} c20
  double wres_prefactor_form = 0.0;  // heat_prefactor(n) C1
  double gamma_identity_check = 0.0;
  std::optional<WresReport> symbol_route;
};

nlohmann::json to_json(const HeatWresReport& r);

/// Residue of Delta^{-n/2+1} from the heat coefficients; n even, n >= 4.
HeatWresReport wres_from_heat(const GeneralizedLaplacian& L, const SphereRule& x_rule,
                              const FPIntOptions& fp = {});

/// Residue of Delta^{-1} on R^4 from the parametrix of laplace_type_symbol.
WresReport wres_laplacian_symbol(const GeneralizedLaplacian& L, const SphereRule& xi_rule,
                                 const SphereRule& x_rule, const FPIntOptions& fp = {});

struct EpsilonShiftReport {
  int n = 0;
  double epsilon = 0.0;
  double value = 0.0;
  FPIntReport curvature;
  FPIntReport volume;
};

nlohmann::json to_json(const EpsilonShiftReport& r);

/// Residue for D^2 + eps on the spinor bundle of rank 2^{n/2}:
/// heat_prefactor(n) 2^{n/2} (-1/12 int-bar s sqrt(det g) - eps int-bar sqrt(det g)); eps >= 0.
EpsilonShiftReport epsilon_shift_wres(const MetricField& g, double epsilon, const SphereRule& x_rule,
                                      const FPIntOptions& fp = {});

}  // namespace sgwres
