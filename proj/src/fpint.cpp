#include "sgwres/fpint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace sgwres {

namespace {

bool is_integer(double v) { return std::abs(v - std::round(v)) < 1e-12; }

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::domain_error(std::string("non-finite value in ") + what);
}

// Smallest j >= 0 with n + m - j < 0.
int first_decaying(int n, double m) {
  const double nm = n + m;
  if (nm < 0) return 0;
  return static_cast<int>(std::floor(nm + 1e-12)) + 1;
}

struct Fit {
  double value = 0.0;
  double rms = 0.0;
};

// Least squares R(rho) = L + sum_i c_i (rho / rho0)^{e_i}.
// Rows are weighted by (rho / rho0)^{-growth}, the growth of round-off in the
// subtracted integrand.
Fit fit_limit(const std::vector<double>& rho, const std::vector<double>& R,
              const std::vector<double>& exps, std::size_t first, double growth) {
  const int rows = static_cast<int>(rho.size() - first);
  const int cols = 1 + static_cast<int>(exps.size());
  Eigen::MatrixXd A(rows, cols);
  Eigen::VectorXd y(rows);
  for (int r = 0; r < rows; ++r) {
    const double w = std::pow(rho[first + r] / rho[first], -growth);
    A(r, 0) = w;
    for (int c = 1; c < cols; ++c) A(r, c) = w * std::pow(rho[first + r] / rho[first], exps[c - 1]);
    y(r) = w * R[first + r];
  }
  const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(y);
  Fit f;
  f.value = coef(0);
  f.rms = std::sqrt((A * coef - y).squaredNorm() / rows);
  return f;
}

}  // namespace

double beta_coefficient(const HomogeneousTerm& h, const SphereRule& rule, const HomogeneousTerm& weight) {
  if (!h) throw std::invalid_argument("beta_coefficient: missing homogeneous term");
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    double v = h(rule.nodes[i]);
    if (weight) v *= weight(rule.nodes[i]);
    check_finite(v, "beta_coefficient");
    sum += rule.weights[i] * v;
  }
  return sum;
}

ClassicalFunction linear_combination(double c1, const ClassicalFunction& a, double c2,
                                     const ClassicalFunction& b) {
  if (a.n != b.n) throw std::invalid_argument("linear_combination: dimension mismatch");
  if (!is_integer(a.order - b.order))
    throw std::invalid_argument("linear_combination: orders must differ by an integer");
  ClassicalFunction out;
  out.n = a.n;
  out.order = std::max(a.order, b.order);
  out.label = a.label + "+" + b.label;
  out.value = [c1, c2, fa = a.value, fb = b.value](std::span<const double> x) {
    return c1 * fa(x) + c2 * fb(x);
  };
  const int sa = static_cast<int>(std::lround(out.order - a.order));
  const int sb = static_cast<int>(std::lround(out.order - b.order));
  const int count = std::min(sa + static_cast<int>(a.x_terms.size()), sb + static_cast<int>(b.x_terms.size()));
  for (int j = 0; j < count; ++j) {
    HomogeneousTerm ta = j >= sa ? a.x_terms[j - sa] : nullptr;
    HomogeneousTerm tb = j >= sb ? b.x_terms[j - sb] : nullptr;
    out.x_terms.push_back([c1, c2, ta, tb](std::span<const double> u) {
      double v = 0.0;
      if (ta) v += c1 * ta(u);
      if (tb) v += c2 * tb(u);
      return v;
    });
  }
  return out;
}

ClassicalFunction multiply(const ClassicalFunction& a, const ClassicalFunction& b) {
  if (a.n != b.n) throw std::invalid_argument("multiply: dimension mismatch");
  ClassicalFunction out;
  out.n = a.n;
  out.order = a.order + b.order;
  out.label = a.label + "*" + b.label;
  out.value = [fa = a.value, fb = b.value](std::span<const double> x) { return fa(x) * fb(x); };
  const std::size_t count = std::min(a.x_terms.size(), b.x_terms.size());
  for (std::size_t j = 0; j < count; ++j) {
    std::vector<std::pair<HomogeneousTerm, HomogeneousTerm>> pairs;
    for (std::size_t k = 0; k <= j; ++k) pairs.emplace_back(a.x_terms[k], b.x_terms[j - k]);
    out.x_terms.push_back([pairs](std::span<const double> u) {
      double v = 0.0;
      for (const auto& [ta, tb] : pairs) v += ta(u) * tb(u);
      return v;
    });
  }
  return out;
}

ClassicalFunction with_fitted_x_terms(ClassicalFunction f, int count, double r_min, double r_max) {
  if (count < 0) throw std::invalid_argument("with_fitted_x_terms: negative term count");
  if (!(r_min > 0 && r_max > r_min)) throw std::invalid_argument("with_fitted_x_terms: bad radius range");
  struct Cache {
    std::mutex mutex;
    std::map<Point, std::vector<double>> coeffs;
  };
  auto cache = std::make_shared<Cache>();
  const int samples = std::max(12, 2 * count + 4);
  const auto value = f.value;
  const double m = f.order;
  auto coefficients = [=](std::span<const double> u) {
    const Point key(u.begin(), u.end());
    {
      std::lock_guard<std::mutex> lock(cache->mutex);
      if (auto it = cache->coeffs.find(key); it != cache->coeffs.end()) return it->second;
    }
    Eigen::MatrixXd A(samples, count);
    Eigen::VectorXd y(samples);
    for (int s = 0; s < samples; ++s) {
      const double r = r_min * std::pow(r_max / r_min, s / (samples - 1.0));
      Point x(key);
      for (auto& c : x) c *= r;
      y(s) = value(x) * std::pow(r / r_min, -m);
      for (int j = 0; j < count; ++j) A(s, j) = std::pow(r / r_min, -static_cast<double>(j));
    }
    const Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);
    std::vector<double> out(count);
    for (int j = 0; j < count; ++j) out[j] = c(j) * std::pow(r_min, -(m - j));
    std::lock_guard<std::mutex> lock(cache->mutex);
    cache->coeffs.emplace(key, out);
    return out;
  };
  f.x_terms.clear();
  f.excess = nullptr;
  for (int j = 0; j < count; ++j)
    f.x_terms.push_back([coefficients, j](std::span<const double> u) { return coefficients(u)[j]; });
  f.label += "[fitted x-terms]";
  return f;
}

// ---------------------------------------------------------------------------
// Finite part
// ---------------------------------------------------------------------------

FPIntReport finite_part_integral(const ClassicalFunction& a, const SphereRule& rule, const FPIntOptions& opts) {
  const int n = a.n;
  if (rule.n != n) throw std::invalid_argument("finite_part_integral: sphere rule dimension mismatch");
  if (!a.value) throw std::invalid_argument("finite_part_integral: missing integrand");
  if (!(opts.rho0 >= 1.0)) throw std::invalid_argument("finite_part_integral: rho0 must be >= 1");
  if (opts.ladder < opts.fit_terms + 3)
    throw std::invalid_argument("finite_part_integral: ladder too short for the extrapolation fit");
  if (opts.radial_nodes < 2) throw std::invalid_argument("finite_part_integral: too few radial nodes");

  const double m = a.order;
  const bool integer_order = is_integer(m);
  const int j_decay = first_decaying(n, m);  // terms j < j_decay have n + m - j >= 0
  if (static_cast<int>(a.x_terms.size()) < j_decay)
    throw std::invalid_argument("finite_part_integral: x-terms a_{m-j} are required for j < " +
                                std::to_string(j_decay) + " (got " + std::to_string(a.x_terms.size()) + ")");

  FPIntReport rep;
  rep.n = n;
  rep.order = m;
  rep.label = a.label;

  // Homogeneous terms on the rule nodes and their beta_j.
  std::vector<std::vector<double>> term_at(j_decay, std::vector<double>(rule.size()));
  for (int j = 0; j < j_decay; ++j) {
    double beta = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      term_at[j][i] = a.x_terms[j](rule.nodes[i]);
      check_finite(term_at[j][i], "x-term");
      beta += rule.weights[i] * term_at[j][i];
    }
    rep.betas.push_back(beta);
  }
  const bool has_log = integer_order && j_decay > 0 && std::abs(n + m - (j_decay - 1)) < 1e-12;
  if (has_log) rep.log_coefficient = rep.betas.back();

  // Spherical mean of the integrand (minus its non-decaying x-terms when r >= 1).
  auto shell_mean = [&](double r, bool subtract) {
    double sum = 0.0;
    Point x(n);
    for (std::size_t i = 0; i < rule.size(); ++i) {
      for (int c = 0; c < n; ++c) x[c] = r * rule.nodes[i][c];
      double v;
      if (subtract && a.excess && j_decay > 0) {
        v = a.excess(x);
        for (int j = 1; j < j_decay; ++j) v -= std::pow(r, m - j) * term_at[j][i];
      } else {
        v = a.value(x);
        if (subtract)
          for (int j = 0; j < j_decay; ++j) v -= std::pow(r, m - j) * term_at[j][i];
      }
      sum += rule.weights[i] * v;
    }
    check_finite(sum, "finite_part_integral");
    return sum * std::pow(r, n - 1);
  };
  auto panel = [&](double lo, double hi, bool subtract) {
    const GaussRule g = gauss_legendre(opts.radial_nodes, lo, hi);
    double s = 0.0;
    for (std::size_t k = 0; k < g.nodes.size(); ++k) s += g.weights[k] * shell_mean(g.nodes[k], subtract);
    return s;
  };

  // Unit ball, then the shell up to rho0 by doublings.
  double acc = panel(0.0, 0.25, false) + panel(0.25, 0.5, false) + panel(0.5, 1.0, false);
  for (int j = 0; j < j_decay; ++j) {
    const double e = n + m - j;
    if (e > 1e-12) acc -= rep.betas[j] / e;
  }
  for (double lo = 1.0; lo < opts.rho0;) {
    const double hi = std::min(2 * lo, opts.rho0);
    acc += panel(lo, hi, true);
    lo = hi;
  }

  for (int k = 0; k < opts.ladder; ++k) {
    const double rho = opts.rho0 * std::pow(2.0, k);
    if (k > 0) acc += panel(rho / 2, rho, true);
    double tail = 0.0;
    for (int j = 0; j < j_decay; ++j) {
      const double e = n + m - j;
      tail += e > 1e-12 ? rep.betas[j] * std::pow(rho, e) / e : rep.betas[j] * std::log(rho);
    }
    rep.rho_samples.push_back(rho);
    rep.remainders.push_back(acc);
    rep.subtracted_tail.push_back(tail);
    rep.raw_integrals.push_back(acc + tail);
  }

  for (int t = 0; t < opts.fit_terms; ++t) rep.fit_exponents.push_back(n + m - (j_decay + t));
  // Round-off in the subtracted integrand grows like the largest term removed pointwise.
  double growth = 0.0;
  for (int j = (a.excess ? 1 : 0); j < j_decay; ++j)
    for (double t : term_at[j])
      if (t != 0.0) growth = std::max(growth, n + m - j);
  const Fit full = fit_limit(rep.rho_samples, rep.remainders, rep.fit_exponents, 0, growth);
  const Fit dropped = fit_limit(rep.rho_samples, rep.remainders, rep.fit_exponents, 1, growth);
  // Residuals are measured against the size of the remainder sequence, floored
  // at round-off level of the raw integrals (which may grow like rho^{n+m}).
  double raw_max = 0.0;
  for (double v : rep.raw_integrals) raw_max = std::max(raw_max, std::abs(v));
  double scale = std::max(std::abs(full.value), 1e-12 * raw_max);
  for (double v : rep.remainders) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) scale = 1.0;
  rep.value = full.value;
  rep.fit_residual = full.rms / scale;
  rep.stability = std::abs(dropped.value - full.value) / scale;
  rep.converged = rep.fit_residual <= opts.tolerance && rep.stability <= opts.tolerance;
  return rep;
}

FPIntReport finite_part_integral(const ClassicalFunction& a, const ClassicalFunction& density,
                                 const SphereRule& rule, const FPIntOptions& opts) {
  return finite_part_integral(multiply(a, density), rule, opts);
}

FPIntReport finite_part_integral_fitting_x_terms(ClassicalFunction a, const SphereRule& rule,
                                                 const FPIntOptions& opts) {
  const int needed = first_decaying(a.n, a.order);
  if (static_cast<int>(a.x_terms.size()) >= needed) return finite_part_integral(a, rule, opts);
  // Extra terms absorb the higher orders that would otherwise bias the fit.
  FPIntReport rep = finite_part_integral(with_fitted_x_terms(std::move(a), needed + 3), rule, opts);
  rep.x_terms_fitted = true;
  return rep;
}

double plain_integral(const ClassicalFunction& a, const SphereRule& rule, double tolerance) {
  const int n = a.n;
  if (rule.n != n) throw std::invalid_argument("plain_integral: sphere rule dimension mismatch");
  auto radial = [&](double r) {
    // Far enough out that an L^1 integrand contributes below round-off.
    if (r > 1e100) return 0.0;
    double sum = 0.0;
    Point x(n);
    for (std::size_t i = 0; i < rule.size(); ++i) {
      for (int c = 0; c < n; ++c) x[c] = r * rule.nodes[i][c];
      sum += rule.weights[i] * a.value(x);
    }
    return sum * std::pow(r, n - 1);
  };
  boost::math::quadrature::tanh_sinh<double> inner;
  boost::math::quadrature::exp_sinh<double> outer;
  const double head = inner.integrate(radial, 0.0, 1.0, tolerance);
  const double tail = outer.integrate(radial, 1.0, std::numeric_limits<double>::infinity(), tolerance);
  return head + tail;
}

nlohmann::json to_json(const FPIntReport& r) {
  return nlohmann::json{{"value", r.value},
                        {"label", r.label},
                        {"n", r.n},
                        {"order", r.order},
                        {"betas", r.betas},
                        {"log_coefficient", r.log_coefficient},
                        {"rho_samples", r.rho_samples},
                        {"raw_integrals", r.raw_integrals},
                        {"subtracted_tail", r.subtracted_tail},
                        {"remainders", r.remainders},
                        {"fit_exponents", r.fit_exponents},
                        {"fit_residual", r.fit_residual},
                        {"stability", r.stability},
                        {"converged", r.converged},
                        {"x_terms_fitted", r.x_terms_fitted}};
}

// ---------------------------------------------------------------------------
// Residue
// ---------------------------------------------------------------------------

ClassicalFunction residue_density(const SGSymbol& a, const WresOptions& opts) {
  const int n = a.n();
  if (!is_integer(a.mu())) throw std::invalid_argument("residue_density: non-integer xi-order");
  const int j = static_cast<int>(std::lround(a.mu())) + n;
  if (j < 0 || (j >= a.depth() && !a.vanishes_beyond_depth()))
    throw std::out_of_range("residue_density: no component of degree -n");
  if (opts.xi_rule.n != n) throw std::invalid_argument("residue_density: xi rule dimension mismatch");
  ClassicalFunction f;
  f.n = n;
  f.order = opts.density_order.value_or(a.m());
  f.label = "residue_density(" + a.label() + ")";
  f.x_terms = opts.density_x_terms;
  const double norm = std::pow(2.0 * std::numbers::pi, -n);
  const SphereRule rule = opts.xi_rule;
  f.value = [a, j, rule, norm](std::span<const double> x) {
    std::vector<int> orders(j + 1, -1);
    orders[j] = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i)
      sum += rule.weights[i] * a.evaluate(x, rule.nodes[i], orders)[j].value().trace().real();
    return norm * sum;
  };
  return f;
}

WresReport regularized_wres(const SGSymbol& a, const WresOptions& opts) {
  WresReport rep;
  if (!is_integer(a.mu())) {
    rep.non_integer_order = true;
    return rep;
  }
  const int j = static_cast<int>(std::lround(a.mu())) + a.n();
  rep.component_index = j;
  if (j < 0 || j >= a.depth()) {
    // Either the symbol stops above degree -n or the component was never built:
    // both are the smoothing-in-xi case as far as the residue is concerned.
    rep.missing_component = true;
    return rep;
  }
  rep.fpint = finite_part_integral_fitting_x_terms(residue_density(a, opts), opts.x_rule, opts.fp);
  rep.value = rep.fpint.value;
  return rep;
}

nlohmann::json to_json(const WresReport& r) {
  return nlohmann::json{{"value", r.value},
                        {"non_integer_order", r.non_integer_order},
                        {"missing_component", r.missing_component},
                        {"component_index", r.component_index},
                        {"fpint", to_json(r.fpint)}};
}

}  // namespace sgwres
