#include "sgwres/laplacian.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <tuple>

namespace sgwres {

// ---------------------------------------------------------------------------
// Endomorphism
// ---------------------------------------------------------------------------

Endomorphism Endomorphism::zero() { return Endomorphism(); }

Endomorphism Endomorphism::constant(double c) {
  Endomorphism e;
  e.terms_.push_back({Kind::constant, c, nullptr, 0.0, "constant"});
  return e;
}

Endomorphism Endomorphism::curvature_multiple(double c) {
  Endomorphism e;
  e.terms_.push_back({Kind::curvature, c, nullptr, 0.0, "curvature"});
  return e;
}

Endomorphism Endomorphism::lichnerowicz() { return curvature_multiple(0.25); }

Endomorphism Endomorphism::field(FieldFn f, double trace_order, std::string label) {
  if (!f) throw std::invalid_argument("Endomorphism::field: missing field function");
  Endomorphism e;
  e.terms_.push_back({Kind::field, 1.0, std::move(f), trace_order, std::move(label)});
  return e;
}

Endomorphism operator+(Endomorphism a, const Endomorphism& b) {
  a.terms_.insert(a.terms_.end(), b.terms_.begin(), b.terms_.end());
  return a;
}

std::string Endomorphism::label() const {
  if (terms_.empty()) return "zero";
  std::string out;
  for (const Term& t : terms_) {
    if (!out.empty()) out += " + ";
    switch (t.kind) {
      case Kind::constant: out += std::to_string(t.c) + " Id"; break;
      case Kind::curvature: out += std::to_string(t.c) + " s Id"; break;
      case Kind::field: out += t.label; break;
    }
  }
  return out;
}

Jet Endomorphism::jet(const MetricField& g, std::span<const double> x, int rank, int order) const {
  const int n = g.dim();
  const Point base(x.begin(), x.end());
  Jet out(n, order, rank, base);
  const CMatrix id = CMatrix::Identity(rank, rank);
  for (const Term& t : terms_) {
    switch (t.kind) {
      case Kind::constant: out += Jet::constant(Complex(t.c) * id, n, order, base); break;
      case Kind::curvature: out += scalar_curvature_jet(g, x, order).tensor(t.c * id); break;
      case Kind::field: {
        const Jet f = t.f(x, order);
        if (f.size() != rank || f.dim() != n) throw std::invalid_argument("endomorphism field has the wrong shape");
        out += f.truncated(order);
        break;
      }
    }
  }
  return out;
}

CMatrix Endomorphism::value(const MetricField& g, std::span<const double> x, int rank) const {
  CMatrix out = CMatrix::Zero(rank, rank);
  for (const Term& t : terms_) {
    switch (t.kind) {
      case Kind::constant: out += Complex(t.c) * CMatrix::Identity(rank, rank); break;
      case Kind::curvature: out += Complex(t.c * scalar_curvature(g, x)) * CMatrix::Identity(rank, rank); break;
      case Kind::field: out += t.f(x, 0).value(); break;
    }
  }
  return out;
}

double Endomorphism::trace_order(const MetricField& g) const {
  double order = -std::numeric_limits<double>::infinity();
  for (const Term& t : terms_) {
    switch (t.kind) {
      case Kind::constant: order = std::max(order, 0.0); break;
      case Kind::curvature: order = std::max(order, g.scalar_curvature_density().order); break;
      case Kind::field: order = std::max(order, t.order); break;
    }
  }
  return order;
}

double Endomorphism::trace_integral(const MetricField& g, int rank, double volume_fp, double curvature_fp,
                                    const SphereRule& x_rule, const FPIntOptions& fp,
                                    std::vector<FPIntReport>* field_reports) const {
  double total = 0.0;
  for (const Term& t : terms_) {
    switch (t.kind) {
      case Kind::constant: total += rank * t.c * volume_fp; break;
      case Kind::curvature: total += rank * t.c * curvature_fp; break;
      case Kind::field: {
        ClassicalFunction f;
        f.n = g.dim();
        f.order = t.order;
        f.label = "tr " + t.label;
        f.value = [g, fn = t.f](std::span<const double> x) {
          return fn(x, 0).value().trace().real() * sqrt_det_g(g, x);
        };
        FPIntReport r = finite_part_integral_fitting_x_terms(std::move(f), x_rule, fp);
        total += r.value;
        if (field_reports) field_reports->push_back(std::move(r));
        break;
      }
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Symbol
// ---------------------------------------------------------------------------

namespace {

struct SymbolCache {
  std::mutex mutex;
  std::map<std::tuple<Point, int, int>, std::vector<Jet>> parts;
};

std::vector<Jet> connection_at(const GeneralizedLaplacian& L, std::span<const double> x, int order) {
  const int n = L.dim();
  const Point base(x.begin(), x.end());
  if (!L.connection) return std::vector<Jet>(n, Jet(n, order, L.rank, base));
  std::vector<Jet> A = L.connection(x, order);
  if (static_cast<int>(A.size()) != n) throw std::invalid_argument("connection must supply n coefficients");
  for (Jet& a : A) {
    if (a.size() != L.rank || a.dim() != n) throw std::invalid_argument("connection coefficient has the wrong shape");
    a = a.truncated(order);
  }
  return A;
}

// Contracted Christoffel symbols Gamma^l = g^{jk} Gamma^l_{jk}.
std::vector<Jet> contracted_christoffel(const MetricField& g, std::span<const double> x, int order) {
  const int n = g.dim();
  const std::vector<Jet> G = christoffel_jets(g, x, order);
  const JetGrid ginv = to_grid(jet_inv(g.jet(x, order)));
  std::vector<Jet> out;
  for (int l = 0; l < n; ++l) {
    Jet s(n, order, 1, Point(x.begin(), x.end()));
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) s += ginv[j][k] * G[(l * n + j) * n + k];
    out.push_back(std::move(s));
  }
  return out;
}

// x-dependent coefficients of component j at the given order, in the n x-variables:
// j = 0: g^{jk} (n*n scalar jets); j = 1: V_k with component xi_k V_k; j = 2: the zero-order matrix.
std::vector<Jet> symbol_parts(const GeneralizedLaplacian& L, std::span<const double> x, int j, int order) {
  const int n = L.dim();
  const int r = L.rank;
  const Point base(x.begin(), x.end());
  const CMatrix id = CMatrix::Identity(r, r);
  const Complex I(0.0, 1.0);
  if (j == 0) {
    const JetGrid ginv = to_grid(jet_inv(L.g.jet(x, order)));
    std::vector<Jet> out;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) out.push_back(ginv[a][b]);
    return out;
  }
  const JetGrid ginv = to_grid(jet_inv(L.g.jet(x, order)));
  const std::vector<Jet> Gl = contracted_christoffel(L.g, x, order);
  if (j == 1) {
    const std::vector<Jet> A = connection_at(L, x, order);
    std::vector<Jet> V;
    for (int k = 0; k < n; ++k) {
      Jet v = Gl[k].tensor(I * id);
      for (int a = 0; a < n; ++a) v += (-2.0 * I) * (ginv[a][k] * A[a]);
      V.push_back(std::move(v));
    }
    return V;
  }
  const std::vector<Jet> A_hi = connection_at(L, x, order + 1);
  std::vector<Jet> A;
  for (const Jet& a : A_hi) A.push_back(a.truncated(order));
  Jet w = L.K.jet(L.g, x, r, order);
  for (int a = 0; a < n; ++a) {
    w += Gl[a] * A[a];
    for (int b = 0; b < n; ++b) w -= ginv[a][b] * (derivative(A_hi[b], a) + A[a] * A[b]);
  }
  return {w};
}

}  // namespace

SGSymbol laplace_type_symbol(const GeneralizedLaplacian& L) {
  if (L.rank < 1) throw std::invalid_argument("laplace_type_symbol: rank must be positive");
  const int n = L.dim();
  SGSymbol::Info info;
  info.n = n;
  info.d = L.rank;
  info.mu = 2;
  info.m = 0;
  info.depth = 3;
  info.polynomial = true;
  info.label = "laplacian[" + L.g.name() + ", K=" + L.K.label() + "]";
  auto cache = std::make_shared<SymbolCache>();
  auto parts = [L, cache](std::span<const double> x, int j, int order) {
    std::tuple<Point, int, int> key{Point(x.begin(), x.end()), j, order};
    {
      std::lock_guard<std::mutex> lock(cache->mutex);
      if (auto it = cache->parts.find(key); it != cache->parts.end()) return it->second;
    }
    std::vector<Jet> v = symbol_parts(L, x, j, order);
    std::lock_guard<std::mutex> lock(cache->mutex);
    if (cache->parts.size() > 1024) cache->parts.clear();
    cache->parts.emplace(key, v);
    return v;
  };
  const int r = L.rank;
  auto eval = [n, r, parts](std::span<const double> x, std::span<const double> xi, std::span<const int> orders) {
    std::vector<Jet> out(orders.size());
    const Point base = joint_point(x, xi);
    for (std::size_t j = 0; j < orders.size(); ++j) {
      const int o = orders[j];
      if (o < 0) continue;
      if (j > 2) {
        out[j] = Jet(2 * n, o, r, base);
        continue;
      }
      const std::vector<Jet> P = parts(x, static_cast<int>(j), o);
      if (j == 0) {
        Jet s(2 * n, o, 1, base);
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            s += embed(P[a * n + b], 0, 2 * n, base) * Jet::variable(n + a, base, o) * Jet::variable(n + b, base, o);
        out[j] = s.tensor(CMatrix::Identity(r, r));
      } else if (j == 1) {
        Jet s(2 * n, o, r, base);
        for (int k = 0; k < n; ++k) s += embed(P[k], 0, 2 * n, base) * Jet::variable(n + k, base, o);
        out[j] = std::move(s);
      } else {
        out[j] = embed(P[0], 0, 2 * n, base);
      }
    }
    return out;
  };
  return SGSymbol(info, eval);
}

// ---------------------------------------------------------------------------
// Heat route
// ---------------------------------------------------------------------------

HeatCoefficients heat_a1(const GeneralizedLaplacian& L, std::span<const double> x) {
  const int r = L.rank;
  const CMatrix K = L.K.value(L.g, x, r);
  if ((K - K.transpose()).norm() > 1e-12 * (1.0 + K.norm()))
    throw std::invalid_argument("heat_a1: endomorphism K is not symmetric");
  HeatCoefficients h;
  h.x.assign(x.begin(), x.end());
  h.a0 = CMatrix::Identity(r, r);
  h.a1 = Complex(scalar_curvature(L.g, x) / 6.0) * CMatrix::Identity(r, r) - K;
  return h;
}

HeatTraceCoefficients heat_trace_coefficients(const GeneralizedLaplacian& L, const SphereRule& x_rule,
                                              const FPIntOptions& fp) {
  HeatTraceCoefficients h;
  h.volume = finite_part_integral_fitting_x_terms(L.g.volume_density(), x_rule, fp);
  h.curvature = finite_part_integral_fitting_x_terms(L.g.scalar_curvature_density(), x_rule, fp);
  const double trK = L.K.trace_integral(L.g, L.rank, h.volume.value, h.curvature.value, x_rule, fp,
                                        &h.endomorphism_fields);
  h.C0 = L.rank * h.volume.value;
  h.C1 = L.rank * h.curvature.value / 6.0 - trK;
  h.converged = h.volume.converged && h.curvature.converged;
  double log_coeff = std::abs(h.curvature.log_coefficient);
  if (!L.K.is_zero()) log_coeff = std::max(log_coeff, std::abs(h.volume.log_coefficient));
  for (const auto& f : h.endomorphism_fields) {
    h.converged = h.converged && f.converged;
    log_coeff = std::max(log_coeff, std::abs(f.log_coefficient));
  }
  h.log_coefficient = log_coeff;
  return h;
}

double heat_prefactor(int n) {
  return (n - 2.0) / (std::tgamma(0.5 * n) * std::pow(4.0 * std::numbers::pi, 0.5 * n));
}

double gamma_identity_gap(int n) {
  const double lhs = 2.0 / std::tgamma(0.5 * (n - 2)) * std::pow(4.0 * std::numbers::pi, -0.5 * n);
  const double rhs = heat_prefactor(n);
  return std::abs(lhs - rhs) / std::abs(rhs);
}

double kkw_constant(int n) { return heat_prefactor(n) * std::pow(2.0, n / 2) / 12.0; }

HeatWresReport wres_from_heat(const GeneralizedLaplacian& L, const SphereRule& x_rule, const FPIntOptions& fp) {
  const int n = L.dim();
  if (n < 4 || n % 2 != 0) throw std::invalid_argument("wres_from_heat: n must be even and at least 4");
  HeatWresReport rep;
  rep.n = n;
  rep.rank = L.rank;
  rep.coefficients = heat_trace_coefficients(L, x_rule, fp);
  rep.c20 = std::pow(4.0 * std::numbers::pi, -0.5 * n) * rep.coefficients.C1;
  rep.wres = 2.0 / std::tgamma(0.5 * (n - 2)) * rep.c20;
  rep.wres_prefactor_form = heat_prefactor(n) * rep.coefficients.C1;
  rep.gamma_identity_check = gamma_identity_gap(n);
  return rep;
}

WresReport wres_laplacian_symbol(const GeneralizedLaplacian& L, const SphereRule& xi_rule,
                                 const SphereRule& x_rule, const FPIntOptions& fp) {
  if (L.dim() != 4) throw std::invalid_argument("wres_laplacian_symbol: the symbol route is implemented for n = 4");
  WresOptions w;
  w.xi_rule = xi_rule;
  w.x_rule = x_rule;
  w.fp = fp;
  w.density_order = std::max(L.g.scalar_curvature_density().order, L.K.trace_order(L.g));
  return regularized_wres(parametrix(laplace_type_symbol(L), 3), w);
}

EpsilonShiftReport epsilon_shift_wres(const MetricField& g, double epsilon, const SphereRule& x_rule,
                                      const FPIntOptions& fp) {
  const int n = g.dim();
  if (n < 4 || n % 2 != 0) throw std::invalid_argument("epsilon_shift_wres: n must be even and at least 4");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon_shift_wres: epsilon must be non-negative");
  EpsilonShiftReport rep;
  rep.n = n;
  rep.epsilon = epsilon;
  rep.curvature = finite_part_integral_fitting_x_terms(g.scalar_curvature_density(), x_rule, fp);
  rep.volume = finite_part_integral_fitting_x_terms(g.volume_density(), x_rule, fp);
  rep.value = heat_prefactor(n) * std::pow(2.0, n / 2) *
              (-rep.curvature.value / 12.0 - epsilon * rep.volume.value);
  return rep;
}

nlohmann::json to_json(const HeatWresReport& r) {
  nlohmann::json fields = nlohmann::json::array();
  for (const auto& f : r.coefficients.endomorphism_fields) fields.push_back(to_json(f));
  nlohmann::json j{{"n", r.n},
                   {"rank", r.rank},
                   {"C0", r.coefficients.C0},
                   {"C1", r.coefficients.C1},
                   {"c20", r.c20},
                   {"wres_heat_route", r.wres},
                   {"wres_prefactor_form", r.wres_prefactor_form},
                   {"gamma_identity_check", r.gamma_identity_check},
                   {"log_coefficient", r.coefficients.log_coefficient},
                   {"converged", r.coefficients.converged},
                   {"volume_fpint", to_json(r.coefficients.volume)},
                   {"curvature_fpint", to_json(r.coefficients.curvature)},
                   {"endomorphism_fpints", fields}};
  j["wres_symbol_route"] = r.symbol_route ? to_json(*r.symbol_route) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const EpsilonShiftReport& r) {
  return nlohmann::json{{"n", r.n},
                        {"epsilon", r.epsilon},
                        {"value", r.value},
                        {"curvature_fpint", to_json(r.curvature)},
                        {"volume_fpint", to_json(r.volume)}};
}

}  // namespace sgwres
