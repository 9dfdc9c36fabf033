#include "sgwres/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace sgwres {

namespace {

// Truncated power series in u = 1/|x|, used for the asymptotic expansion of
// radial registry metrics at infinity.
class Series {
 public:
  static constexpr int kLength = 48;

  Series() : c_(kLength, 0.0) {}

  static Series monomial(int k, double coeff) {
    Series s;
    if (k < kLength) s.c_[k] = coeff;
    return s;
  }

  double operator[](int k) const { return k < kLength ? c_[k] : 0.0; }

  Series operator+(const Series& o) const {
    Series r;
    for (int k = 0; k < kLength; ++k) r.c_[k] = c_[k] + o.c_[k];
    return r;
  }
  Series operator*(double s) const {
    Series r;
    for (int k = 0; k < kLength; ++k) r.c_[k] = c_[k] * s;
    return r;
  }
  Series operator*(const Series& o) const {
    Series r;
    for (int i = 0; i < kLength; ++i) {
      if (c_[i] == 0.0) continue;
      for (int j = 0; i + j < kLength; ++j) r.c_[i + j] += c_[i] * o.c_[j];
    }
    return r;
  }
  Series derivative() const {
    Series r;
    for (int k = 1; k < kLength; ++k) r.c_[k - 1] = k * c_[k];
    return r;
  }
  /// exp of a series with vanishing constant term.
  Series exp() const {
    if (c_[0] != 0.0) throw std::logic_error("Series::exp expects a zero constant term");
    Series result = monomial(0, 1.0);
    Series power = monomial(0, 1.0);
    double fact = 1.0;
    for (int k = 1; k < kLength; ++k) {
      power = power * (*this);
      fact *= k;
      result = result + power * (1.0 / fact);
    }
    return result;
  }
  /// (1 + h)^q for a series h with vanishing constant term.
  Series pow1p(double q) const {
    if (c_[0] != 0.0) throw std::logic_error("Series::pow1p expects a zero constant term");
    Series result = monomial(0, 1.0);
    Series power = monomial(0, 1.0);
    double binom = 1.0;
    for (int k = 1; k < kLength; ++k) {
      binom *= (q - (k - 1)) / k;
      power = power * (*this);
      result = result + power * binom;
    }
    return result;
  }

 private:
  std::vector<double> c_;
};

int integer_power(double two_p) {
  const double r = std::round(two_p);
  if (std::abs(two_p - r) > 1e-12 || r < 1) return -1;
  return static_cast<int>(r);
}

Jet radius_squared(std::span<const double> x, int order) {
  const int n = static_cast<int>(x.size());
  Point base(x.begin(), x.end());
  Jet r2 = Jet::constant(0.0, n, order, base);
  for (int i = 0; i < n; ++i) {
    const Jet xi = Jet::variable(i, x, order);
    r2 += xi * xi;
  }
  return r2;
}

void require_dim(const MetricField& g, std::span<const double> x) {
  if (static_cast<int>(x.size()) != g.dim())
    throw std::invalid_argument("point dimension does not match the metric");
}

}  // namespace

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::flat: return "flat";
    case MetricKind::conformal: return "conformal";
    case MetricKind::general: return "general";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

MetricField MetricField::flat(int n) {
  if (n < 1) throw std::invalid_argument("metric dimension must be positive");
  MetricField g;
  g.n_ = n;
  g.kind_ = MetricKind::flat;
  g.name_ = "flat";
  g.alpha_ = std::numeric_limits<double>::infinity();
  g.entries_ = [n](std::span<const double> x, int order) {
    return Jet::identity(n, n, order, Point(x.begin(), x.end()));
  };
  g.sqrt_det_series_ = std::vector<double>(32, 0.0);
  (*g.sqrt_det_series_)[0] = 1.0;
  g.volume_excess_ = [](std::span<const double>) { return 0.0; };
  g.scalar_density_series_ = std::vector<double>{};
  g.scalar_density_order_ = -(n + 1.0);
  return g;
}

MetricField MetricField::conformal(int n, double c, double p) {
  if (n < 2) throw std::invalid_argument("conformal metric needs n >= 2");
  if (!(p > 0)) throw std::invalid_argument("conformal decay power p must be positive");
  MetricField g;
  g.n_ = n;
  g.kind_ = MetricKind::conformal;
  g.name_ = "conformal";
  g.alpha_ = 2 * p;
  g.c_ = c;
  g.p_ = p;
  g.entries_ = [n, c, p](std::span<const double> x, int order) {
    const Jet phi = c * pow(Jet::constant(1.0, n, order, Point(x.begin(), x.end())) +
                                radius_squared(x, order),
                            -p);
    return exp(2.0 * phi).tensor(CMatrix::Identity(n, n));
  };
  g.volume_excess_ = [n, c, p](std::span<const double> x) {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    return std::expm1(n * c * std::pow(1.0 + r2, -p));
  };
  g.scalar_density_order_ = -(2 * p + 2);

  const int q = integer_power(2 * p);
  if (q > 0) {
    // phi(u) = c u^q (1 + u^2)^{-p}; derivatives in r via d/dr = -u^2 d/du.
    const Series phi = Series::monomial(q, c) * Series::monomial(2, 1.0).pow1p(-p);
    const Series phi_u = phi.derivative();
    const Series phi_uu = phi_u.derivative();
    const Series laplacian = Series::monomial(3, 3.0 - n) * phi_u + Series::monomial(4, 1.0) * phi_uu;
    const Series grad_sq = Series::monomial(4, 1.0) * phi_u * phi_u;
    const Series density = (phi * (n - 2.0)).exp() *
                           (laplacian * 2.0 + grad_sq * (n - 2.0)) * (-(n - 1.0));
    const Series volume = (phi * static_cast<double>(n)).exp();
    std::vector<double> vol, dens;
    for (int k = 0; k < 32; ++k) {
      vol.push_back(volume[k]);
      dens.push_back(density[k]);
    }
    g.sqrt_det_series_ = vol;
    g.scalar_density_series_ = dens;
  }
  return g;
}

MetricField MetricField::radial_shear(int n, double c, double p) {
  if (n < 2) throw std::invalid_argument("shear metric needs n >= 2");
  if (!(p > 0)) throw std::invalid_argument("shear decay power p must be positive");
  if (!(c > -1.0)) throw std::invalid_argument("shear amplitude must exceed -1 for positivity");
  MetricField g;
  g.n_ = n;
  g.kind_ = MetricKind::general;
  g.name_ = "radial_shear";
  g.alpha_ = 2 * p;
  g.c_ = c;
  g.p_ = p;
  g.entries_ = [n, c, p](std::span<const double> x, int order) {
    const Point base(x.begin(), x.end());
    const Jet w = c * pow(Jet::constant(1.0, n, order, base) + radius_squared(x, order), -p - 1);
    JetGrid grid(n);
    std::vector<Jet> coords;
    for (int i = 0; i < n; ++i) coords.push_back(Jet::variable(i, x, order));
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        Jet e = coords[j] * coords[k] * w;
        if (j == k) e += Jet::constant(1.0, n, order, base);
        grid[j].push_back(std::move(e));
      }
    return from_grid(grid);
  };
  g.volume_excess_ = [c, p](std::span<const double> x) {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    return std::expm1(0.5 * std::log1p(c * r2 * std::pow(1.0 + r2, -p - 1)));
  };
  g.scalar_density_order_ = -(2 * p + 2);

  const int q = integer_power(2 * p);
  if (q > 0) {
    // det g = 1 + c r^2 (1 + r^2)^{-p-1} = 1 + c u^{2p} (1 + u^2)^{-p-1}.
    const Series h = Series::monomial(q, c) * Series::monomial(2, 1.0).pow1p(-p - 1);
    const Series volume = h.pow1p(0.5);
    std::vector<double> vol;
    for (int k = 0; k < 32; ++k) vol.push_back(volume[k]);
    g.sqrt_det_series_ = vol;
  }
  return g;
}

MetricField MetricField::general(int n, JetFn entries, double alpha, std::string name) {
  if (n < 1) throw std::invalid_argument("metric dimension must be positive");
  if (!entries) throw std::invalid_argument("general metric needs an entry function");
  MetricField g;
  g.n_ = n;
  g.kind_ = MetricKind::general;
  g.name_ = std::move(name);
  g.alpha_ = alpha;
  g.entries_ = std::move(entries);
  g.scalar_density_order_ = -(alpha + 2);
  return g;
}

Jet MetricField::jet(std::span<const double> x, int order) const {
  require_dim(*this, x);
  Jet j = entries_(x, order);
  if (j.size() != n_ || j.dim() != n_ || j.order() < order)
    throw std::logic_error("metric entry function returned a malformed jet");
  return j.order() == order ? j : j.truncated(order);
}

Eigen::MatrixXd MetricField::value(std::span<const double> x) const {
  return jet(x, 0).value().real();
}

Jet MetricField::conformal_factor(std::span<const double> x, int order) const {
  if (kind_ == MetricKind::flat) return Jet::constant(0.0, n_, order, Point(x.begin(), x.end()));
  if (kind_ != MetricKind::conformal)
    throw std::invalid_argument("conformal_factor on a non-conformal metric");
  require_dim(*this, x);
  return c_ * pow(Jet::constant(1.0, n_, order, Point(x.begin(), x.end())) +
                      radius_squared(x, order),
                  -p_);
}

ClassicalFunction MetricField::volume_density() const {
  ClassicalFunction f;
  f.n = n_;
  f.order = 0.0;
  f.label = "sqrt_det_g";
  const MetricField self = *this;
  f.value = [self](std::span<const double> x) { return sqrt_det_g(self, x); };
  if (volume_excess_ && sqrt_det_series_) f.excess = volume_excess_;
  if (sqrt_det_series_) {
    for (double coeff : *sqrt_det_series_)
      f.x_terms.push_back([coeff](std::span<const double>) { return coeff; });
  }
  return f;
}

ClassicalFunction MetricField::scalar_curvature_density() const {
  ClassicalFunction f;
  f.n = n_;
  f.order = scalar_density_order_;
  f.label = "scalar_curvature_density";
  const MetricField self = *this;
  if (kind_ == MetricKind::flat) {
    f.value = [](std::span<const double>) { return 0.0; };
    return f;
  }
  f.value = [self](std::span<const double> x) {
    const CurvatureData cd = curvature_at(self, x);
    return cd.scalar * cd.sqrt_det_g;
  };
  if (scalar_density_series_) {
    // Degree (m - j) term is the coefficient of u^{-m + j}.
    const int lead = static_cast<int>(std::lround(-scalar_density_order_));
    const auto& series = *scalar_density_series_;
    for (int j = 0; lead + j < static_cast<int>(series.size()); ++j) {
      const double coeff = series[lead + j];
      f.x_terms.push_back([coeff](std::span<const double>) { return coeff; });
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Curvature
// ---------------------------------------------------------------------------

std::vector<Jet> christoffel_jets(const MetricField& g, std::span<const double> x, int order) {
  const int n = g.dim();
  const Jet gj = g.jet(x, order + 1);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gj.value().real());
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw std::domain_error("metric is not positive definite at the evaluation point");
  const JetGrid gg = to_grid(gj);
  const JetGrid ginv = to_grid(jet_inv(gj));

  // dg[l][j][k] = d_l g_{jk}
  std::vector<Jet> dg;
  dg.reserve(n * n * n);
  for (int l = 0; l < n; ++l)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) dg.push_back(derivative(gg[j][k], l));
  auto d = [&](int l, int j, int k) -> const Jet& { return dg[(l * n + j) * n + k]; };

  std::vector<Jet> gamma;
  gamma.reserve(n * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        Jet acc(n, order, 1, Point(x.begin(), x.end()));
        for (int l = 0; l < n; ++l)
          acc += ginv[i][l].truncated(order) * (d(j, l, k) + d(k, l, j) - d(l, j, k));
        gamma.push_back(0.5 * acc);
      }
  return gamma;
}

CurvatureData curvature_at(const MetricField& g, std::span<const double> x) {
  require_dim(g, x);
  const int n = g.dim();
  CurvatureData out;
  out.n = n;
  out.x.assign(x.begin(), x.end());

  const Jet g0 = g.jet(x, 0);
  const Eigen::MatrixXd gv = g0.value().real();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gv);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw std::domain_error("metric is not positive definite at the evaluation point");
  out.sqrt_det_g = std::sqrt(gv.determinant());
  const Eigen::MatrixXd ginv = gv.inverse();

  const std::vector<Jet> gamma = christoffel_jets(g, x, 1);
  auto G = [&](int i, int j, int k) { return gamma[(i * n + j) * n + k].scalar_value().real(); };
  auto dG = [&](int l, int i, int j, int k) {
    return derivative(gamma[(i * n + j) * n + k], l).scalar_value().real();
  };

  out.christoffel.resize(n * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) out.christoffel[(i * n + j) * n + k] = G(i, j, k);

  out.riemann.assign(n * n * n * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double r = dG(k, i, l, j) - dG(l, i, k, j);
          for (int m = 0; m < n; ++m) r += G(i, k, m) * G(m, l, j) - G(i, l, m) * G(m, k, j);
          out.riemann[((i * n + j) * n + k) * n + l] = r;
        }

  out.ricci.assign(n * n, 0.0);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l)
      for (int i = 0; i < n; ++i) out.ricci[j * n + l] += out.riem(i, j, i, l);

  out.scalar = 0.0;
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) out.scalar += ginv(j, l) * out.ric(j, l);
  return out;
}

Jet scalar_curvature_jet(const MetricField& g, std::span<const double> x, int order) {
  require_dim(g, x);
  if (order < 0 || order + 2 > kMaxJetOrder)
    throw std::invalid_argument("scalar_curvature_jet: order out of range");
  const int n = g.dim();
  const Point base(x.begin(), x.end());
  const std::vector<Jet> hi = christoffel_jets(g, x, order + 1);
  std::vector<Jet> G;
  for (const Jet& j : hi) G.push_back(j.truncated(order));
  auto at = [&](int i, int j, int k) -> const Jet& { return G[(i * n + j) * n + k]; };
  auto dG = [&](int l, int i, int j, int k) { return derivative(hi[(i * n + j) * n + k], l); };
  const JetGrid ginv = to_grid(jet_inv(g.jet(x, order)));

  Jet s(n, order, 1, base);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) {
      // Ric_{jl} = R^i_{jil}
      Jet ric(n, order, 1, base);
      for (int i = 0; i < n; ++i) {
        ric += dG(i, i, l, j) - dG(l, i, i, j);
        for (int m = 0; m < n; ++m) ric += at(i, i, m) * at(m, l, j) - at(i, l, m) * at(m, i, j);
      }
      s += ginv[j][l] * ric;
    }
  return s;
}

double scalar_curvature(const MetricField& g, std::span<const double> x) {
  return curvature_at(g, x).scalar;
}

double sqrt_det_g(const MetricField& g, std::span<const double> x) {
  const Eigen::MatrixXd gv = g.value(x);
  const double det = gv.determinant();
  if (!(det > 0)) throw std::domain_error("metric determinant is not positive");
  return std::sqrt(det);
}

Jet orthonormal_frame(const MetricField& g, std::span<const double> x, int order) {
  const int n = g.dim();
  const JetGrid G = to_grid(g.jet(x, order));
  const Point base(x.begin(), x.end());

  // Cholesky g = L L^T on scalar jets.
  JetGrid L(n, std::vector<Jet>(n, Jet(n, order, 1, base)));
  for (int j = 0; j < n; ++j) {
    Jet diag = G[j][j];
    for (int k = 0; k < j; ++k) diag -= L[j][k] * L[j][k];
    if (!(diag.scalar_value().real() > 0.0))
      throw std::domain_error("metric is not positive definite at the evaluation point");
    L[j][j] = sqrt(diag);
    const Jet inv_diag = reciprocal(L[j][j]);
    for (int i = j + 1; i < n; ++i) {
      Jet v = G[i][j];
      for (int k = 0; k < j; ++k) v -= L[i][k] * L[j][k];
      L[i][j] = v * inv_diag;
    }
  }

  // Frame rows: M = L^{-1}, lower triangular; M g M^T = I.
  JetGrid M(n, std::vector<Jet>(n, Jet(n, order, 1, base)));
  for (int i = 0; i < n; ++i) {
    const Jet inv_diag = reciprocal(L[i][i]);
    M[i][i] = inv_diag;
    for (int j = 0; j < i; ++j) {
      Jet acc(n, order, 1, base);
      for (int k = j; k < i; ++k) acc += L[i][k] * M[k][j];
      M[i][j] = -(acc * inv_diag);
    }
  }
  return from_grid(M);
}

// ---------------------------------------------------------------------------
// SG check
// ---------------------------------------------------------------------------

SgRaySamples SgRaySamples::standard(int n, int rays, int radii, unsigned seed) {
  SgRaySamples s;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int r = 0; r < rays; ++r) {
    Point dir(n, 0.0);
    if (r < n) {
      dir[r] = 1.0;
    } else {
      double norm = 0.0;
      for (auto& v : dir) {
        v = normal(rng);
        norm += v * v;
      }
      for (auto& v : dir) v /= std::sqrt(norm);
    }
    s.directions.push_back(dir);
  }
  for (int k = 0; k < radii; ++k) s.radii.push_back(std::pow(1e4, k / (radii - 1.0)));
  return s;
}

SgCheckReport check_sg_classical(const MetricField& g, int beta_max, const SgRaySamples& samples) {
  if (samples.directions.size() < 8) throw std::invalid_argument("SG check needs at least 8 rays");
  if (samples.radii.size() < 2) throw std::invalid_argument("SG check needs at least 2 radii");
  if (beta_max < 0 || beta_max > kMaxJetOrder) throw std::invalid_argument("beta_max out of range");
  const int n = g.dim();

  // maxima[(j*n + k)*(beta_max+1) + b][radius]
  std::vector<std::vector<double>> maxima(n * n * (beta_max + 1),
                                          std::vector<double>(samples.radii.size(), 0.0));
  std::vector<std::vector<MultiIndex>> by_degree;
  for (int b = 0; b <= beta_max; ++b) by_degree.push_back(multi_indices_of_degree(n, b));

  for (std::size_t ri = 0; ri < samples.radii.size(); ++ri) {
    for (const auto& dir : samples.directions) {
      Point x(n);
      for (int i = 0; i < n; ++i) x[i] = samples.radii[ri] * dir[i];
      const Jet gj = g.jet(x, beta_max);
      for (int b = 0; b <= beta_max; ++b)
        for (const auto& beta : by_degree[b]) {
          const CMatrix d = extract_partial(gj, beta);
          for (int j = 0; j < n; ++j)
            for (int k = j; k < n; ++k) {
              double& m = maxima[(j * n + k) * (beta_max + 1) + b][ri];
              m = std::max(m, std::abs(d(j, k)));
            }
        }
    }
  }

  SgCheckReport report;
  report.beta_max = beta_max;
  for (int j = 0; j < n; ++j)
    for (int k = j; k < n; ++k)
      for (int b = 0; b <= beta_max; ++b) {
        const auto& m = maxima[(j * n + k) * (beta_max + 1) + b];
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int count = 0;
        for (std::size_t ri = 0; ri < m.size(); ++ri) {
          if (!(m[ri] > 1e-300)) continue;
          const double lx = std::log1p(samples.radii[ri]);
          const double ly = std::log(m[ri]);
          sx += lx;
          sy += ly;
          sxx += lx * lx;
          sxy += lx * ly;
          ++count;
        }
        SgEntryFit fit;
        fit.j = j;
        fit.k = k;
        fit.derivative_order = b;
        if (count >= 2) {
          const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
          fit.fitted_exponent = slope;
          fit.pass = slope <= -b + 0.1;
        }
        report.pass = report.pass && fit.pass;
        report.entries.push_back(fit);
      }
  return report;
}

}  // namespace sgwres
