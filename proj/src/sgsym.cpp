#include "sgwres/sgsym.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace sgwres {

namespace {

// Multi-indices of length n and degree s, embedded into the x- or xi-block of
// the 2n variables, with their factorials.
struct SplitIndex {
  MultiIndex x_part;
  MultiIndex xi_part;
  double factorial;
};

const std::vector<SplitIndex>& split_indices(int n, int s) {
  thread_local std::vector<std::vector<std::vector<SplitIndex>>> cache;
  if (static_cast<int>(cache.size()) <= n) cache.resize(n + 1);
  auto& by_degree = cache[n];
  if (static_cast<int>(by_degree.size()) <= s) by_degree.resize(s + 1);
  auto& out = by_degree[s];
  if (out.empty()) {
    for (const auto& alpha : multi_indices_of_degree(n, s)) {
      SplitIndex si;
      si.x_part.assign(2 * n, 0);
      si.xi_part.assign(2 * n, 0);
      for (int i = 0; i < n; ++i) {
        si.x_part[i] = alpha[i];
        si.xi_part[n + i] = alpha[i];
      }
      si.factorial = factorial(alpha);
      out.push_back(std::move(si));
    }
  }
  return out;
}

Complex minus_i_power(int s) {
  static const Complex table[4] = {1.0, Complex(0, -1), -1.0, Complex(0, 1)};
  return table[s % 4];
}

void check_point(const SGSymbol& a, std::span<const double> x, std::span<const double> xi) {
  if (static_cast<int>(x.size()) != a.n() || static_cast<int>(xi.size()) != a.n())
    throw std::invalid_argument("evaluation point dimension does not match the symbol");
}

bool is_integer(double v) { return std::abs(v - std::round(v)) < 1e-12; }

// Jet order needed for operand component k so that every result component j >= k
// with requested order o_j is available: max_{j >= k, o_j >= 0} (o_j + j - k).
std::vector<int> operand_orders(std::span<const int> orders) {
  const int J = static_cast<int>(orders.size());
  std::vector<int> out(J, -1);
  for (int k = 0; k < J; ++k)
    for (int j = k; j < J; ++j)
      if (orders[j] >= 0) out[k] = std::max(out[k], orders[j] + j - k);
  return out;
}

void check_orders(std::span<const int> orders) {
  for (int o : orders)
    if (o > kMaxJetOrder)
      throw std::out_of_range("jet order exhausted: symbol calculus needs order " +
                              std::to_string(o) + " > " + std::to_string(kMaxJetOrder));
}

}  // namespace

Point joint_point(std::span<const double> x, std::span<const double> xi) {
  Point p(x.begin(), x.end());
  p.insert(p.end(), xi.begin(), xi.end());
  return p;
}

// ---------------------------------------------------------------------------
// SGSymbol
// ---------------------------------------------------------------------------

SGSymbol::SGSymbol(Info info, Evaluator eval) : info_(std::move(info)), eval_(std::move(eval)) {
  if (info_.n < 1) throw std::invalid_argument("symbol dimension must be positive");
  if (info_.d < 1) throw std::invalid_argument("symbol matrix size must be positive");
  if (info_.depth < 0) throw std::invalid_argument("symbol depth must be non-negative");
  if (!eval_) throw std::invalid_argument("symbol needs an evaluator");
}

SGSymbol SGSymbol::from_components(Info info, std::vector<ComponentFn> components) {
  info.depth = static_cast<int>(components.size());
  auto eval = [components](std::span<const double> x, std::span<const double> xi,
                           std::span<const int> orders) {
    std::vector<Jet> out(orders.size());
    for (std::size_t j = 0; j < orders.size(); ++j)
      if (orders[j] >= 0) out[j] = components[j](x, xi, orders[j]);
    return out;
  };
  return SGSymbol(std::move(info), std::move(eval));
}

SGSymbol SGSymbol::identity(int n, int d) {
  Info info;
  info.n = n;
  info.d = d;
  info.polynomial = true;
  info.label = "identity";
  return from_components(info, {[n, d](std::span<const double> x, std::span<const double> xi, int order) {
                           return Jet::identity(d, 2 * n, order, joint_point(x, xi));
                         }});
}

std::vector<Jet> SGSymbol::evaluate(std::span<const double> x, std::span<const double> xi,
                                    std::span<const int> orders) const {
  check_point(*this, x, xi);
  const int requested = static_cast<int>(orders.size());
  if (requested > info_.depth && !vanishes_beyond_depth()) {
    for (int j = info_.depth; j < requested; ++j)
      if (orders[j] >= 0)
        throw std::out_of_range("symbol '" + info_.label + "' has depth " +
                                std::to_string(info_.depth) + "; component " + std::to_string(j) +
                                " requested");
  }
  check_orders(orders);
  const int inner = std::min(requested, info_.depth);
  std::vector<Jet> out = inner > 0 ? eval_(x, xi, orders.subspan(0, inner)) : std::vector<Jet>{};
  out.resize(requested);
  const Point base = joint_point(x, xi);
  for (int j = inner; j < requested; ++j)
    if (orders[j] >= 0) out[j] = Jet(2 * info_.n, orders[j], info_.d, base);
  for (int j = 0; j < inner; ++j)
    if (orders[j] >= 0 && (out[j].size() != info_.d || out[j].dim() != 2 * info_.n ||
                           out[j].order() < orders[j]))
      throw std::logic_error("symbol '" + info_.label + "' returned a malformed component jet");
  return out;
}

CMatrix SGSymbol::component(int j, std::span<const double> x, std::span<const double> xi) const {
  if (j < 0) throw std::out_of_range("negative component index");
  std::vector<int> orders(j + 1, -1);
  orders[j] = 0;
  return evaluate(x, xi, orders)[j].value();
}

CMatrix SGSymbol::full_value(std::span<const double> x, std::span<const double> xi, int count) const {
  if (count < 0) count = info_.depth;
  const std::vector<int> orders(count, 0);
  CMatrix sum = CMatrix::Zero(info_.d, info_.d);
  for (const Jet& c : evaluate(x, xi, orders)) sum += c.value();
  return sum;
}

// ---------------------------------------------------------------------------
// Calculus
// ---------------------------------------------------------------------------

SGSymbol compose(const SGSymbol& a, const SGSymbol& b, int J) {
  if (a.n() != b.n()) throw std::invalid_argument("compose: dimension mismatch");
  if (a.d() != b.d()) throw std::invalid_argument("compose: matrix size mismatch");
  if (J < 1) throw std::invalid_argument("compose: depth must be positive");

  SGSymbol::Info info;
  info.n = a.n();
  info.d = a.d();
  info.mu = a.mu() + b.mu();
  info.m = a.m() + b.m();
  info.depth = J;
  info.label = "(" + a.label() + ")#(" + b.label() + ")";
  // For differential operators the product terminates after mu_a + depth_b terms.
  if (a.polynomial() && b.polynomial() && is_integer(a.mu()) &&
      J >= static_cast<int>(std::lround(a.mu())) + b.depth()) {
    info.polynomial = true;
  }
  const int n = a.n();
  const int a_poly_degree = a.polynomial() ? static_cast<int>(std::lround(a.mu())) : -1;

  auto eval = [a, b, n, a_poly_degree](std::span<const double> x, std::span<const double> xi,
                                       std::span<const int> orders) {
    const int Jr = static_cast<int>(orders.size());
    const std::vector<int> op_orders = operand_orders(orders);
    const std::vector<Jet> A = a.evaluate(x, xi, op_orders);
    const std::vector<Jet> B = b.evaluate(x, xi, op_orders);
    const Point base = joint_point(x, xi);
    std::vector<Jet> out(Jr);
    for (int j = 0; j < Jr; ++j) {
      if (orders[j] < 0) continue;
      const int o = orders[j];
      Jet c(2 * n, o, a.d(), base);
      for (int k = 0; k <= j; ++k)
        for (int l = 0; k + l <= j; ++l) {
          const int s = j - k - l;
          if (a_poly_degree >= 0 && s > a_poly_degree - k) continue;  // d_xi kills the polynomial
          const Complex phase = minus_i_power(s);
          for (const auto& si : split_indices(n, s)) {
            const Jet da = derivative(A[k], si.xi_part).truncated(o);
            const Jet db = derivative(B[l], si.x_part).truncated(o);
            c += (da * db) * (phase / si.factorial);
          }
        }
      out[j] = std::move(c);
    }
    return out;
  };
  return SGSymbol(info, eval);
}

SGSymbol parametrix(const SGSymbol& p, int J) {
  if (J < 1) throw std::invalid_argument("parametrix: depth must be positive");
  if (!(p.mu() > 0)) throw std::invalid_argument("parametrix: xi-order must be positive");
  if (!p.vanishes_beyond_depth() && p.depth() < J)
    throw std::invalid_argument("parametrix: insufficient depth in the operator symbol");

  SGSymbol::Info info;
  info.n = p.n();
  info.d = p.d();
  info.mu = -p.mu();
  info.m = -p.m();
  info.depth = J;
  info.label = "parametrix(" + p.label() + ")";
  const int n = p.n();

  auto eval = [p, n](std::span<const double> x, std::span<const double> xi, std::span<const int> orders) {
    const int Jr = static_cast<int>(orders.size());
    // Component j is built from components l < j, differentiated |alpha| <= j - l times.
    std::vector<int> eff(orders.begin(), orders.end());
    for (int j = Jr - 1; j >= 0; --j)
      for (int jp = j + 1; jp < Jr; ++jp)
        if (eff[jp] >= 0) eff[j] = std::max(eff[j], eff[jp] + jp - j);
    check_orders(eff);
    const std::vector<int> p_orders = operand_orders(eff);
    const std::vector<Jet> P = p.evaluate(x, xi, p_orders);
    const Point base = joint_point(x, xi);

    std::vector<Jet> B(Jr);
    if (Jr == 0 || eff[0] < 0) return B;
    const Jet inv0 = jet_inv(P[0].truncated(eff[0]));
    B[0] = inv0;
    for (int j = 1; j < Jr; ++j) {
      if (eff[j] < 0) continue;
      const int o = eff[j];
      Jet sum(2 * n, o, p.d(), base);
      for (int l = 0; l < j; ++l)
        for (int k = 0; k + l <= j; ++k) {
          const int s = j - k - l;
          const Complex phase = minus_i_power(s);
          for (const auto& si : split_indices(n, s)) {
            const Jet db = derivative(B[l], si.xi_part).truncated(o);
            const Jet dp = derivative(P[k], si.x_part).truncated(o);
            sum += (db * dp) * (phase / si.factorial);
          }
        }
      B[j] = -(sum * inv0.truncated(o));
    }
    for (int j = 0; j < Jr; ++j)
      if (orders[j] >= 0 && B[j].order() > orders[j]) B[j] = B[j].truncated(orders[j]);
    return B;
  };
  return SGSymbol(info, eval);
}

SGSymbol add(const SGSymbol& a, const SGSymbol& b) {
  if (a.n() != b.n() || a.d() != b.d()) throw std::invalid_argument("add: shape mismatch");
  if (!is_integer(a.mu() - b.mu())) throw std::invalid_argument("add: xi-orders must differ by an integer");
  SGSymbol::Info info;
  info.n = a.n();
  info.d = a.d();
  info.mu = std::max(a.mu(), b.mu());
  info.m = std::max(a.m(), b.m());
  const int sa = static_cast<int>(std::lround(info.mu - a.mu()));
  const int sb = static_cast<int>(std::lround(info.mu - b.mu()));
  constexpr int kUnbounded = std::numeric_limits<int>::max() / 2;
  const int da = a.vanishes_beyond_depth() ? kUnbounded : sa + a.depth();
  const int db = b.vanishes_beyond_depth() ? kUnbounded : sb + b.depth();
  info.depth = std::min(da, db);
  if (info.depth == kUnbounded) {
    info.depth = std::max(sa + a.depth(), sb + b.depth());
    info.polynomial = a.polynomial() && b.polynomial();
    info.zero_tail = !info.polynomial;
  }
  info.label = a.label() + "+" + b.label();

  auto eval = [a, b, sa, sb](std::span<const double> x, std::span<const double> xi,
                             std::span<const int> orders) {
    const int Jr = static_cast<int>(orders.size());
    auto shifted = [&](int shift) {
      std::vector<int> o;
      for (int j = shift; j < Jr; ++j) o.push_back(orders[j]);
      return o;
    };
    const std::vector<int> oa = shifted(sa), ob = shifted(sb);
    const std::vector<Jet> A = a.evaluate(x, xi, oa);
    const std::vector<Jet> B = b.evaluate(x, xi, ob);
    const Point base = joint_point(x, xi);
    std::vector<Jet> out(Jr);
    for (int j = 0; j < Jr; ++j) {
      if (orders[j] < 0) continue;
      Jet c(2 * a.n(), orders[j], a.d(), base);
      if (j >= sa) c += A[j - sa].truncated(orders[j]);
      if (j >= sb) c += B[j - sb].truncated(orders[j]);
      out[j] = std::move(c);
    }
    return out;
  };
  return SGSymbol(info, eval);
}

SGSymbol scale(const SGSymbol& a, Complex s) {
  SGSymbol::Info info = a.info();
  info.label = "scaled(" + a.label() + ")";
  return SGSymbol(info, [a, s](std::span<const double> x, std::span<const double> xi,
                               std::span<const int> orders) {
    std::vector<Jet> out = a.evaluate(x, xi, orders);
    for (std::size_t j = 0; j < out.size(); ++j)
      if (orders[j] >= 0) out[j] *= s;
    return out;
  });
}

SGSymbol pad_zero(const SGSymbol& a, int depth) {
  if (depth < a.depth()) throw std::invalid_argument("pad_zero: depth below the available depth");
  SGSymbol::Info info = a.info();
  info.depth = depth;
  info.polynomial = a.polynomial();
  info.zero_tail = !a.polynomial();
  const int inner = a.depth();
  return SGSymbol(info, [a, inner](std::span<const double> x, std::span<const double> xi,
                                   std::span<const int> orders) {
    const int Jr = static_cast<int>(orders.size());
    std::vector<Jet> out = a.evaluate(x, xi, orders.subspan(0, std::min(Jr, inner)));
    out.resize(Jr);
    const Point base = joint_point(x, xi);
    for (int j = inner; j < Jr; ++j)
      if (orders[j] >= 0) out[j] = Jet(2 * a.n(), orders[j], a.d(), base);
    return out;
  });
}

SGSymbol::ComponentFn xi_component(const SGSymbol& a, double degree) {
  const double jd = a.mu() - degree;
  if (!is_integer(jd) || jd < -1e-12)
    throw std::out_of_range("symbol has no component of degree " + std::to_string(degree));
  const int j = static_cast<int>(std::lround(jd));
  if (j >= a.depth())
    throw std::out_of_range("component of degree " + std::to_string(degree) +
                            " exceeds the available depth " + std::to_string(a.depth()));
  return [a, j](std::span<const double> x, std::span<const double> xi, int order) {
    std::vector<int> orders(j + 1, -1);
    orders[j] = order;
    return a.evaluate(x, xi, orders)[j];
  };
}

double fitted_xi_order(const SGSymbol& a, std::span<const double> x, std::span<const double> xi_dir,
                       std::span<const double> radii, int first, int count) {
  if (count < 0) count = a.depth() - first;
  if (radii.size() < 2) throw std::invalid_argument("fitted_xi_order needs at least two radii");
  std::vector<int> orders(first + count, -1);
  for (int j = first; j < first + count; ++j) orders[j] = 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double t : radii) {
    Point xi(xi_dir.begin(), xi_dir.end());
    for (auto& v : xi) v *= t;
    CMatrix sum = CMatrix::Zero(a.d(), a.d());
    const std::vector<Jet> comps = a.evaluate(x, xi, orders);
    for (int j = first; j < first + count; ++j) sum += comps[j].value();
    const double lx = std::log(t);
    const double ly = std::log(sum.norm());
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double N = static_cast<double>(radii.size());
  return (N * sxy - sx * sy) / (N * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// Lambda-ellipticity
// ---------------------------------------------------------------------------

SectorSpec::SectorSpec(double theta_) : theta(theta_) {
  if (!(theta > 0.0 && theta < std::numbers::pi))
    throw std::invalid_argument("sector angle theta must lie strictly inside (0, pi)");
}

bool SectorSpec::contains(Complex z) const { return margin(z) <= 0.0; }

double SectorSpec::margin(Complex z) const {
  if (z == Complex(0.0)) return -theta;  // the vertex belongs to Lambda
  return theta - std::abs(std::arg(z));
}

EllipticitySamples EllipticitySamples::standard(int n, double R, unsigned seed) {
  EllipticitySamples s;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto random_unit = [&] {
    Point v(n);
    double norm = 0;
    for (auto& c : v) {
      c = normal(rng);
      norm += c * c;
    }
    for (auto& c : v) c /= std::sqrt(norm);
    return v;
  };
  s.xs.push_back(Point(n, 0.0));
  for (double r : {0.5, 2.0, 10.0, 100.0, 1000.0}) {
    Point x = random_unit();
    for (auto& c : x) c *= r;
    s.xs.push_back(x);
  }
  for (int i = 0; i < n; ++i) {
    Point e(n, 0.0);
    e[i] = 1.0;
    s.xi_directions.push_back(e);
  }
  for (int k = 0; k < 6; ++k) s.xi_directions.push_back(random_unit());
  s.xi_radii = {R, 2 * R, 10 * R};
  return s;
}

EllipticityReport lambda_ellipticity_check(const SGSymbol& a, const SectorSpec& sector,
                                           const EllipticitySamples& samples) {
  EllipticityReport rep;
  rep.min_margin = std::numeric_limits<double>::infinity();
  // lambda grid on the boundary rays arg lambda = +-theta plus the vertex
  std::vector<double> moduli{0.0};
  for (int k = -4; k <= 4; ++k) moduli.push_back(std::pow(4.0, k));

  for (const auto& x : samples.xs)
    for (const auto& dir : samples.xi_directions)
      for (double r : samples.xi_radii) {
        Point xi(dir);
        for (auto& v : xi) v *= r;
        const CMatrix value = a.full_value(x, xi);
        const Eigen::ComplexEigenSolver<CMatrix> es(value);
        for (Complex ev : es.eigenvalues()) rep.min_margin = std::min(rep.min_margin, sector.margin(ev));
        ++rep.samples;

        const double scale_mu = std::pow(r, a.mu());
        const double weight = std::pow(1.0 + r, a.mu());
        for (double t : moduli)
          for (double sign : {1.0, -1.0}) {
            const Complex lambda = t * scale_mu * std::polar(1.0, sign * sector.theta);
            const CMatrix shifted = value - lambda * CMatrix::Identity(a.d(), a.d());
            const Eigen::JacobiSVD<CMatrix> svd(shifted);
            const double smin = svd.singularValues().minCoeff();
            const double bound = smin > 0 ? weight / smin : std::numeric_limits<double>::infinity();
            rep.resolvent_bound = std::max(rep.resolvent_bound, bound);
          }
      }
  rep.pass = rep.min_margin > 0.0;
  if (!rep.pass) rep.resolvent_bound = std::numeric_limits<double>::infinity();
  return rep;
}

}  // namespace sgwres
