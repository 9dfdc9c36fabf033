#include "sgwres/dirac.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace sgwres {

namespace {

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Per-x geometric jets shared by all xi evaluated at the same base point.
struct FrameCache {
  std::mutex mutex;
  std::map<std::pair<Point, int>, std::vector<Jet>> frame_gamma;  // E_i = gamma^a e_a^i
  std::map<std::pair<Point, int>, Jet> zero_order;               // -i E_i Omega_i
};

std::vector<Jet> frame_gamma(const MetricField& g, const CliffordAlgebra& cl, std::span<const double> x,
                             int order) {
  const int n = g.dim();
  const JetGrid e = to_grid(orthonormal_frame(g, x, order));
  std::vector<Jet> E;
  for (int i = 0; i < n; ++i) {
    Jet s(n, order, cl.d, Point(x.begin(), x.end()));
    for (int a = 0; a < n; ++a) s += e[a][i].tensor(cl.gamma[a]);
    E.push_back(std::move(s));
  }
  return E;
}

}  // namespace

CliffordAlgebra build_clifford(int n) {
  if (n < 2 || n > 8 || n % 2 != 0) throw std::invalid_argument("build_clifford: n must be even in [2, 8]");
  const Complex I(0.0, 1.0);
  CMatrix id2 = CMatrix::Identity(2, 2);
  CMatrix sx(2, 2), sy(2, 2), sz(2, 2);
  sx << 0.0, 1.0, 1.0, 0.0;
  sy << 0.0, -I, I, 0.0;
  sz << 1.0, 0.0, 0.0, -1.0;
  const int half = n / 2;
  CliffordAlgebra cl;
  cl.n = n;
  cl.d = 1 << half;
  // gamma_{2k} = Z^{(x)k} (x) X (x) 1, gamma_{2k+1} = Z^{(x)k} (x) Y (x) 1.
  for (int k = 0; k < half; ++k) {
    for (const CMatrix* pauli : {&sx, &sy}) {
      CMatrix m = CMatrix::Identity(1, 1);
      for (int f = 0; f < half; ++f) m = kron(m, f < k ? sz : (f == k ? *pauli : id2));
      cl.gamma.push_back(m);
    }
  }
  return cl;
}

std::vector<Jet> spin_connection(const MetricField& g, const CliffordAlgebra& cl, std::span<const double> x,
                                 int order) {
  const int n = g.dim();
  if (cl.n != n) throw std::invalid_argument("spin_connection: Clifford dimension mismatch");
  if (order < 0 || order + 1 > kMaxJetOrder) throw std::invalid_argument("spin_connection: order out of range");
  const Point base(x.begin(), x.end());
  const JetGrid e_hi = to_grid(orthonormal_frame(g, x, order + 1));
  const JetGrid G = to_grid(g.jet(x, order));
  const std::vector<Jet> Gamma = christoffel_jets(g, x, order);

  JetGrid e(n, std::vector<Jet>(n));
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < n; ++i) e[a][i] = e_hi[a][i].truncated(order);
  // Lowered frame e_{aj} = g_{jl} e_a^l.
  JetGrid e_low(n, std::vector<Jet>(n, Jet(n, order, 1, base)));
  for (int a = 0; a < n; ++a)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) e_low[a][j] += G[j][l] * e[a][l];

  std::vector<Jet> omega;
  for (int i = 0; i < n; ++i) {
    Jet Om(n, order, cl.d, base);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (a == b) continue;
        Jet w(n, order, 1, base);
        for (int j = 0; j < n; ++j) {
          Jet nabla = derivative(e_hi[b][j], i).truncated(order);
          for (int k = 0; k < n; ++k) nabla += Gamma[(j * n + i) * n + k] * e[b][k];
          w += e_low[a][j] * nabla;
        }
        Om += w.tensor(0.25 * cl.gamma[a] * cl.gamma[b]);
      }
    omega.push_back(std::move(Om));
  }
  return omega;
}

SGSymbol dirac_symbol(const MetricField& g, const CliffordAlgebra& cl) {
  const int n = g.dim();
  if (cl.n != n) throw std::invalid_argument("dirac_symbol: Clifford dimension mismatch");
  SGSymbol::Info info;
  info.n = n;
  info.d = cl.d;
  info.mu = 1;
  info.m = 0;
  info.depth = 2;
  info.polynomial = true;
  info.label = "dirac[" + g.name() + "]";
  auto cache = std::make_shared<FrameCache>();

  auto frame = [g, cl, cache](std::span<const double> x, int order) {
    std::pair<Point, int> key{Point(x.begin(), x.end()), order};
    std::lock_guard<std::mutex> lock(cache->mutex);
    auto it = cache->frame_gamma.find(key);
    if (it == cache->frame_gamma.end()) {
      if (cache->frame_gamma.size() > 512) cache->frame_gamma.clear();
      it = cache->frame_gamma.emplace(key, frame_gamma(g, cl, x, order)).first;
    }
    return it->second;
  };
  auto zero_order = [g, cl, cache, frame, n](std::span<const double> x, int order) {
    std::pair<Point, int> key{Point(x.begin(), x.end()), order};
    {
      std::lock_guard<std::mutex> lock(cache->mutex);
      if (auto it = cache->zero_order.find(key); it != cache->zero_order.end()) return it->second;
    }
    const std::vector<Jet> E = frame(x, order);
    const std::vector<Jet> Om = spin_connection(g, cl, x, order);
    Jet z(n, order, cl.d, key.first);
    for (int i = 0; i < n; ++i) z += E[i] * Om[i];
    z *= Complex(0.0, -1.0);
    std::lock_guard<std::mutex> lock(cache->mutex);
    if (cache->zero_order.size() > 512) cache->zero_order.clear();
    cache->zero_order.emplace(key, z);
    return z;
  };

  auto eval = [n, cl, frame, zero_order](std::span<const double> x, std::span<const double> xi,
                                         std::span<const int> orders) {
    std::vector<Jet> out(orders.size());
    const Point base = joint_point(x, xi);
    for (std::size_t j = 0; j < orders.size(); ++j) {
      const int o = orders[j];
      if (o < 0) continue;
      if (j == 0) {
        const std::vector<Jet> E = frame(x, o);
        Jet s(2 * n, o, cl.d, base);
        for (int i = 0; i < n; ++i) s += embed(E[i], 0, 2 * n, base) * Jet::variable(n + i, base, o);
        out[j] = std::move(s);
      } else if (j == 1) {
        out[j] = embed(zero_order(x, o), 0, 2 * n, base);
      } else {
        out[j] = Jet(2 * n, o, cl.d, base);
      }
    }
    return out;
  };
  return SGSymbol(info, eval);
}

SGSymbol dirac_squared(const SGSymbol& d) { return compose(d, d, 3); }

DiracData build_dirac(const MetricField& g) {
  if (g.dim() != 4) throw std::invalid_argument("the Dirac route requires n = 4");
  CliffordAlgebra cl = build_clifford(4);
  SGSymbol D = dirac_symbol(g, cl);
  SGSymbol D2 = dirac_squared(D);
  SGSymbol B = parametrix(D2, 3);
  return DiracData{g, std::move(cl), std::move(D), std::move(D2), std::move(B)};
}

SGSymbol::ComponentFn a_minus_n_component(const DiracData& dd) {
  return xi_component(dd.parametrix_D2, -static_cast<double>(dd.g.dim()));
}

double kastler_normalization(const MetricField& g, std::span<const double> x) {
  return std::pow(2.0 * std::numbers::pi, -g.dim()) / sqrt_det_g(g, x);
}

double kastler_constant() { return -1.0 / (24.0 * std::numbers::pi * std::numbers::pi); }

double kastler_integral(const DiracData& dd, std::span<const double> x, const SphereRule& rule) {
  if (rule.n != dd.g.dim()) throw std::invalid_argument("kastler_integral: sphere rule dimension mismatch");
  const SGSymbol::ComponentFn a = a_minus_n_component(dd);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) sum += rule.weights[i] * a(x, rule.nodes[i], 0).value().trace().real();
  const double v = kastler_normalization(dd.g, x) * sum;
  if (!std::isfinite(v)) throw std::runtime_error("kastler_integral: non-finite sphere quadrature");
  return v;
}

DiracWresReport wres_dirac(const DiracData& dd, const DiracWresOptions& opts) {
  DiracWresReport rep;
  const ClassicalFunction s_density = dd.g.scalar_curvature_density();

  WresOptions w;
  w.xi_rule = opts.xi_rule;
  w.x_rule = opts.x_rule;
  w.fp = opts.fp;
  // Every term of a_{-4} carries two x-derivatives of the metric, so the
  // residue density decays like the curvature density.
  w.density_order = s_density.order;
  rep.symbol_route = regularized_wres(dd.parametrix_D2, w);
  rep.wres_symbol_route = rep.symbol_route.value;

  rep.curvature_fpint = finite_part_integral_fitting_x_terms(s_density, opts.x_rule, opts.fp);
  rep.wres_curvature_route = kastler_constant() * rep.curvature_fpint.value;
  if (dd.g.alpha() > 2.0) rep.plain_integral = plain_integral(s_density, opts.x_rule);
  rep.relative_gap = std::abs(rep.wres_symbol_route - rep.wres_curvature_route) /
                     std::max(std::abs(rep.wres_curvature_route), 1e-10);

  for (const Point& x : opts.kastler_points) {
    KastlerSample k;
    k.x = x;
    k.scalar = scalar_curvature(dd.g, x);
    k.kastler = kastler_integral(dd, x, opts.xi_rule);
    k.ratio = std::abs(k.scalar) > 1e-6 ? k.kastler / k.scalar : 0.0;
    rep.kastler_pointwise.push_back(std::move(k));
  }
  return rep;
}

nlohmann::json to_json(const DiracWresReport& r) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& k : r.kastler_pointwise)
    pts.push_back({{"x", k.x}, {"scalar_curvature", k.scalar}, {"kastler", k.kastler}, {"ratio", k.ratio}});
  nlohmann::json j{{"wres_symbol_route", r.wres_symbol_route},
                   {"wres_curvature_route", r.wres_curvature_route},
                   {"relative_gap", r.relative_gap},
                   {"symbol_route", to_json(r.symbol_route)},
                   {"curvature_fpint", to_json(r.curvature_fpint)},
                   {"kastler_pointwise", pts}};
  j["plain_integral"] = r.plain_integral ? nlohmann::json(*r.plain_integral) : nlohmann::json(nullptr);
  return j;
}

}  // namespace sgwres
