#pragma once

// SG-classical matrix symbols on R^n x R^n, represented by their xi-homogeneous
// components a_{mu-j}(x, xi) and evaluated as jets in the 2n variables (x, xi).

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sgwres/jet.hpp"

namespace sgwres {

/// Concatenated evaluation point (x, xi).
Point joint_point(std::span<const double> x, std::span<const double> xi);

class SGSymbol {
 public:
  /// Evaluates components j = 0 .. orders.size()-1 at (x, xi). Component j is
  /// returned as a d x d jet in the 2n variables (x, xi) of order orders[j];
  /// a negative order means the component is not needed (an empty Jet may be returned).
  using Evaluator = std::function<std::vector<Jet>(
      std::span<const double> x, std::span<const double> xi, std::span<const int> orders)>;
  /// Single component at the given jet order.
  using ComponentFn =
      std::function<Jet(std::span<const double> x, std::span<const double> xi, int order)>;

  struct Info {
    int n = 0;
    int d = 1;
    double mu = 0.0;  // xi-order
    double m = 0.0;   // x-order
    int depth = 0;    // components available
    /// Components are polynomials of degree mu - j in xi and vanish for j >= depth
    /// (symbols of differential operators).
    bool polynomial = false;
    /// Components j >= depth are identically zero without the symbol being polynomial.
    bool zero_tail = false;
    std::string label;
  };

  SGSymbol(Info info, Evaluator eval);

  static SGSymbol from_components(Info info, std::vector<ComponentFn> components);
  static SGSymbol identity(int n, int d);

  const Info& info() const { return info_; }
  int n() const { return info_.n; }
  int d() const { return info_.d; }
  double mu() const { return info_.mu; }
  double m() const { return info_.m; }
  int depth() const { return info_.depth; }
  bool polynomial() const { return info_.polynomial; }
  /// Whether components at or beyond depth are known to vanish.
  bool vanishes_beyond_depth() const { return info_.polynomial || info_.zero_tail; }
  const std::string& label() const { return info_.label; }

  /// Components beyond depth are zero jets when vanishes_beyond_depth(), otherwise
  /// requesting them throws std::out_of_range.
  std::vector<Jet> evaluate(std::span<const double> x, std::span<const double> xi,
                            std::span<const int> orders) const;
  /// Value of component j at (x, xi).
  CMatrix component(int j, std::span<const double> x, std::span<const double> xi) const;
  /// Sum of the first `count` components (all available when count < 0).
  CMatrix full_value(std::span<const double> x, std::span<const double> xi, int count = -1) const;

 private:
  Info info_;
  Evaluator eval_;
};

/// Leibniz product c_j = sum_{k+l+|alpha|=j} (1/alpha!) d_xi^alpha a_k D_x^alpha b_l,
/// D_x = -i d_x, for j < J.
SGSymbol compose(const SGSymbol& a, const SGSymbol& b, int J);

/// Left parametrix b with b(#)p = Id modulo xi-order -J, by the standard recursion.
SGSymbol parametrix(const SGSymbol& p, int J);

/// Sum of two symbols whose xi-orders differ by an integer; components are
/// aligned by homogeneity degree.
SGSymbol add(const SGSymbol& a, const SGSymbol& b);
SGSymbol scale(const SGSymbol& a, Complex s);
/// Same components, with zero components appended up to `depth`.
SGSymbol pad_zero(const SGSymbol& a, int depth);

/// Component of homogeneity degree `degree`; throws std::out_of_range when the
/// degree is not mu - j for an available j.
SGSymbol::ComponentFn xi_component(const SGSymbol& a, double degree);

/// Least-squares slope of log ||sum of components [first, first + count)|| at
/// (x, t xi_dir) against log t.
double fitted_xi_order(const SGSymbol& a, std::span<const double> x, std::span<const double> xi_dir,
                       std::span<const double> radii, int first = 0, int count = -1);

/// Lambda = {z : |arg(-z)| <= pi - theta}, the closed sector around the negative
/// real axis; its complement is the open cone |arg z| < theta.
struct SectorSpec {
  double theta = 0.0;

  explicit SectorSpec(double theta);
  bool contains(Complex z) const;
  /// theta - |arg z|: positive exactly when z lies outside Lambda.
  double margin(Complex z) const;
};

struct EllipticitySamples {
  std::vector<Point> xs;
  std::vector<Point> xi_directions;
  std::vector<double> xi_radii;

  /// x on a grid reaching |x| = 1e3, xi directions on coordinate axes plus
  /// seeded random ones, |xi| in {R, 2R, 10R}.
  static EllipticitySamples standard(int n, double R, unsigned seed = 1);
};

struct EllipticityReport {
  bool pass = true;
  double min_margin = 0.0;  // min over samples of theta - |arg eigenvalue|
  /// Estimate of sup ||(a - lambda)^{-1}|| (1 + |xi|)^mu over lambda in Lambda.
  double resolvent_bound = 0.0;
  int samples = 0;
};

EllipticityReport lambda_ellipticity_check(const SGSymbol& a, const SectorSpec& sector,
                                           const EllipticitySamples& samples);

}  // namespace sgwres
