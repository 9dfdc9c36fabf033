#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "sgwres/sgsym.hpp"

using namespace sgwres;

namespace {

struct Vars {
  std::vector<Jet> x, xi;
  Point base;
};

Vars vars(std::span<const double> x, std::span<const double> xi, int order) {
  Vars v;
  v.base = joint_point(x, xi);
  const int n = static_cast<int>(x.size());
  for (int i = 0; i < n; ++i) v.x.push_back(Jet::variable(i, v.base, order));
  for (int i = 0; i < n; ++i) v.xi.push_back(Jet::variable(n + i, v.base, order));
  return v;
}

Jet xi_norm_sq(const Vars& v, int order) {
  Jet s = Jet::constant(0.0, static_cast<int>(v.base.size()), order, v.base);
  for (const auto& e : v.xi) s += e * e;
  return s;
}

// |xi|^2 + c (as homogeneous components p_2 = |xi|^2, p_0 = c) times Id_d.
SGSymbol laplacian_like(int n, int d, double c) {
  SGSymbol::Info info;
  info.n = n;
  info.d = d;
  info.mu = 2;
  info.polynomial = true;
  info.label = "laplacian";
  std::vector<SGSymbol::ComponentFn> comps;
  comps.push_back([d](std::span<const double> x, std::span<const double> xi, int order) {
    const Vars v = vars(x, xi, order);
    return xi_norm_sq(v, order).tensor(CMatrix::Identity(d, d));
  });
  if (c != 0.0) {
    comps.push_back([n, d](std::span<const double> x, std::span<const double> xi, int order) {
      return Jet(2 * n, order, d, joint_point(x, xi));
    });
    comps.push_back([n, d, c](std::span<const double> x, std::span<const double> xi, int order) {
      return Jet::constant(Complex(c) * CMatrix::Identity(d, d), 2 * n, order, joint_point(x, xi));
    });
  }
  return SGSymbol::from_components(info, comps);
}

// Non-polynomial x-dependent test symbol of order mu with random matrix coefficients:
// a_j = (C_j + f_j(x) D_j) |xi|^{mu-j-1} (w_j . xi), f_j(x) = (1 + |x - q_j|^2)^{-1/2}.
SGSymbol random_symbol(int n, int d, double mu, int depth, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<SGSymbol::ComponentFn> comps;
  for (int j = 0; j < depth; ++j) {
    CMatrix C(d, d), D(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) {
        C(r, c) = Complex(u(rng), u(rng));
        D(r, c) = Complex(u(rng), u(rng));
      }
    Point w(n), q(n);
    for (auto& e : w) e = u(rng);
    for (auto& e : q) e = u(rng);
    const double degree = mu - j;
    comps.push_back([=](std::span<const double> x, std::span<const double> xi, int order) {
      const Vars v = vars(x, xi, order);
      const int dim = 2 * n;
      Jet r2 = Jet::constant(1.0, dim, order, v.base);
      Jet wxi = Jet::constant(0.0, dim, order, v.base);
      for (int i = 0; i < n; ++i) {
        const Jet s = v.x[i] - Jet::constant(q[i], dim, order, v.base);
        r2 += s * s;
        wxi += w[i] * v.xi[i];
      }
      const Jet g = pow(xi_norm_sq(v, order), (degree - 1) / 2) * wxi;
      const Jet f = pow(r2, -0.5);
      return g.tensor(C) + (f * g).tensor(D);
    });
  }
  SGSymbol::Info info;
  info.n = n;
  info.d = d;
  info.mu = mu;
  info.m = 0;
  info.label = "random" + std::to_string(seed);
  return SGSymbol::from_components(info, comps);
}

Point random_point(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Point p(n);
  for (auto& e : p) e = u(rng);
  return p;
}

double max_component_diff(const SGSymbol& a, const SGSymbol& b, int J, std::span<const double> x,
                          std::span<const double> xi) {
  double m = 0;
  for (int j = 0; j < J; ++j) m = std::max(m, (a.component(j, x, xi) - b.component(j, x, xi)).norm());
  return m;
}

// Euler identity xi . d_xi c = degree * c from the first-order jet of a component.
double euler_defect(const SGSymbol& a, int j, std::span<const double> x, std::span<const double> xi) {
  const int n = a.n();
  const Jet c = xi_component(a, a.mu() - j)(x, xi, 1);
  CMatrix lhs = CMatrix::Zero(a.d(), a.d());
  for (int i = 0; i < n; ++i) {
    MultiIndex e(2 * n, 0);
    e[n + i] = 1;
    lhs += xi[i] * c.coeff(e);
  }
  const CMatrix rhs = (a.mu() - j) * c.value();
  return (lhs - rhs).norm() / std::max(1.0, rhs.norm());
}

}  // namespace

TEST_CASE("identity symbol is a two-sided unit") {
  std::mt19937_64 rng(1);
  const SGSymbol a = random_symbol(3, 2, 1.5, 3, 42);
  const SGSymbol id = SGSymbol::identity(3, 2);
  const SGSymbol left = compose(id, a, 3);
  const SGSymbol right = compose(a, id, 3);
  for (int t = 0; t < 5; ++t) {
    const Point x = random_point(rng, 3, -2, 2);
    const Point xi = random_point(rng, 3, -3, 3);
    CHECK(max_component_diff(left, a, 3, x, xi) < 1e-13);
    CHECK(max_component_diff(right, a, 3, x, xi) < 1e-13);
  }
}

TEST_CASE("xi_1 composed with x_1 agrees with the quantized product on a Gaussian") {
  SGSymbol::Info ia;
  ia.n = 1;
  ia.mu = 1;
  ia.m = 1;
  ia.polynomial = true;
  ia.label = "xi1";
  const SGSymbol a = SGSymbol::from_components(ia, {[](std::span<const double> x, std::span<const double> xi,
                                                       int order) { return Jet::variable(1, joint_point(x, xi), order); }});
  SGSymbol::Info ib;
  ib.n = 1;
  ib.mu = 0;
  ib.m = 1;
  ib.polynomial = true;
  ib.label = "x1";
  const SGSymbol b = SGSymbol::from_components(ib, {[](std::span<const double> x, std::span<const double> xi,
                                                       int order) { return Jet::variable(0, joint_point(x, xi), order); }});
  const SGSymbol c = compose(a, b, 2);
  CHECK(c.polynomial());
  const Point x0{0.7}, xi0{-1.3};
  CHECK(std::abs(c.component(0, x0, xi0)(0, 0) - Complex(0.7 * -1.3)) < 1e-15);
  CHECK(std::abs(c.component(1, x0, xi0)(0, 0) - Complex(0.0, -1.0)) < 1e-15);

  // Kohn-Nirenberg quantization Op(p)u(x) = (2 pi)^{-1} int e^{i x xi} p(x, xi) u^(xi) dxi,
  // with Fourier transforms by the trapezoid rule on a grid wide enough for Gaussians.
  const double h = 0.02, L = 14.0;
  std::vector<double> grid;
  for (double t = -L; t <= L + 1e-12; t += h) grid.push_back(t);
  auto fourier = [&](const std::vector<Complex>& f) {
    std::vector<Complex> out(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      Complex s = 0;
      for (std::size_t m = 0; m < grid.size(); ++m) s += std::exp(Complex(0, -grid[m] * grid[k])) * f[m];
      out[k] = s * h;
    }
    return out;
  };
  auto op = [&](const SGSymbol& p, const std::vector<Complex>& uhat, double x) {
    Complex s = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const Point xp{x}, xik{grid[k]};
      s += std::exp(Complex(0, x * grid[k])) * p.full_value(xp, xik)(0, 0) * uhat[k];
    }
    return s * h / (2 * std::numbers::pi);
  };
  std::vector<Complex> u(grid.size());
  for (std::size_t m = 0; m < grid.size(); ++m) u[m] = std::exp(-0.5 * grid[m] * grid[m]);
  const std::vector<Complex> uhat = fourier(u);
  // v = Op(b) u, kept only where the Gaussian is non-negligible
  std::vector<Complex> v(grid.size(), 0.0);
  for (std::size_t m = 0; m < grid.size(); ++m)
    if (std::abs(grid[m]) < 9.0) v[m] = op(b, uhat, grid[m]);
  const std::vector<Complex> vhat = fourier(v);
  for (double x : {-1.1, 0.0, 0.4, 1.7}) {
    const Complex lhs = op(a, vhat, x);
    const Complex rhs = op(c, uhat, x);
    CHECK(std::abs(lhs - rhs) < 1e-8);
    // closed form: -i (1 - x^2) e^{-x^2/2}
    CHECK(std::abs(rhs - Complex(0, -(1 - x * x) * std::exp(-0.5 * x * x))) < 1e-8);
  }
}

TEST_CASE("scalar commutator drops one xi-order") {
  std::mt19937_64 rng(3);
  const SGSymbol a = random_symbol(2, 1, 2.0, 3, 7);
  const SGSymbol b = random_symbol(2, 1, 1.0, 3, 8);
  const SGSymbol comm = add(compose(a, b, 3), scale(compose(b, a, 3), -1.0));
  const std::vector<double> radii{50, 100, 200, 400, 800};
  for (int t = 0; t < 3; ++t) {
    const Point x = random_point(rng, 2, -1, 1);
    const Point xi = random_point(rng, 2, -1, 1);
    CHECK(comm.component(0, x, xi).norm() < 1e-12);
    CHECK(fitted_xi_order(comm, x, xi, radii) <= 3.0 - 1.0 + 0.05);
  }
}

TEST_CASE("parametrix of x-independent Laplace symbols") {
  std::mt19937_64 rng(4);
  SUBCASE("flat Laplacian") {
    const SGSymbol b = parametrix(laplacian_like(4, 2, 0.0), 3);
    for (int t = 0; t < 5; ++t) {
      const Point x = random_point(rng, 4, -3, 3);
      const Point xi = random_point(rng, 4, -2, 2);
      double r2 = 0;
      for (double e : xi) r2 += e * e;
      CHECK((b.component(0, x, xi) - CMatrix::Identity(2, 2) / r2).norm() < 1e-14);
      CHECK(b.component(1, x, xi).norm() < 1e-14);
      CHECK(b.component(2, x, xi).norm() < 1e-14);
    }
  }
  SUBCASE("|xi|^2 + 1") {
    const SGSymbol b = parametrix(laplacian_like(4, 1, 1.0), 3);
    for (int t = 0; t < 5; ++t) {
      const Point x = random_point(rng, 4, -3, 3);
      const Point xi = random_point(rng, 4, -2, 2);
      double r2 = 0;
      for (double e : xi) r2 += e * e;
      CHECK(std::abs(b.component(0, x, xi)(0, 0) - 1.0 / r2) < 1e-14);
      CHECK(std::abs(b.component(1, x, xi)(0, 0)) < 1e-14);
      CHECK(std::abs(b.component(2, x, xi)(0, 0) + 1.0 / (r2 * r2)) < 1e-13);
    }
  }
}

TEST_CASE("associativity at truncation depth 3") {
  std::mt19937_64 rng(5);
  const SGSymbol a = random_symbol(2, 2, 1.0, 3, 11);
  const SGSymbol b = random_symbol(2, 2, 0.5, 3, 12);
  const SGSymbol c = random_symbol(2, 2, -1.0, 3, 13);
  const SGSymbol lhs = compose(compose(a, b, 3), c, 3);
  const SGSymbol rhs = compose(a, compose(b, c, 3), 3);
  for (int t = 0; t < 10; ++t) {
    const Point x = random_point(rng, 2, -2, 2);
    const Point xi = random_point(rng, 2, -2, 2);
    double scale = 1.0;
    for (int j = 0; j < 3; ++j) scale = std::max(scale, lhs.component(j, x, xi).norm());
    CHECK(max_component_diff(lhs, rhs, 3, x, xi) <= 1e-9 * scale);
  }
}

TEST_CASE("order additivity along xi rays") {
  std::mt19937_64 rng(6);
  const std::vector<double> radii{100, 200, 400, 800, 1600};
  for (int t = 0; t < 5; ++t) {
    const SGSymbol a = random_symbol(3, 2, 1.0 + 0.5 * t, 3, 20 + t);
    const SGSymbol b = random_symbol(3, 2, -0.5 * t, 3, 40 + t);
    const SGSymbol c = compose(a, b, 3);
    const Point x = random_point(rng, 3, -1, 1);
    const Point xi = random_point(rng, 3, -1, 1);
    CHECK(std::abs(fitted_xi_order(c, x, xi, radii) - (a.mu() + b.mu())) <= 0.05);
  }
}

TEST_CASE("homogeneity: Euler identity and scaling for composed and parametrix components") {
  std::mt19937_64 rng(7);
  const SGSymbol a = random_symbol(3, 2, 1.0, 3, 60);
  const SGSymbol b = random_symbol(3, 2, 1.0, 3, 61);
  const SGSymbol c = compose(a, b, 3);
  // elliptic: |xi|^2 Id plus lower-order random terms
  const SGSymbol p = add(laplacian_like(3, 2, 0.0), scale(random_symbol(3, 2, 1.0, 3, 62), 0.1));
  const SGSymbol q = parametrix(p, 3);
  for (int t = 0; t < 20; ++t) {
    const Point x = random_point(rng, 3, -2, 2);
    const Point xi = random_point(rng, 3, -2, 2);
    for (int j = 0; j < 3; ++j) {
      CHECK(euler_defect(c, j, x, xi) < 1e-10);
      CHECK(euler_defect(q, j, x, xi) < 1e-10);
    }
    for (double s : {2.0, 5.0}) {
      Point sxi = xi;
      for (auto& e : sxi) e *= s;
      for (int j = 0; j < 3; ++j) {
        const CMatrix base = q.component(j, x, xi);
        const CMatrix scaled = q.component(j, x, sxi);
        CHECK((scaled - std::pow(s, q.mu() - j) * base).norm() <= 1e-12 * std::max(1.0, base.norm()));
      }
    }
  }
}

TEST_CASE("parametrix residual vanishes to depth and has xi-order -J on both sides") {
  std::mt19937_64 rng(8);
  const SGSymbol p = add(laplacian_like(2, 2, 0.0), scale(random_symbol(2, 2, 1.0, 3, 70), 0.2));
  const int J = 3;
  const SGSymbol b = parametrix(p, J);
  const SGSymbol left = compose(b, p, J);
  const SGSymbol right = compose(p, b, J);
  const SGSymbol left_tail = compose(pad_zero(b, J + 1), p, J + 1);
  const SGSymbol right_tail = compose(p, pad_zero(b, J + 1), J + 1);
  const std::vector<double> radii{20, 40, 80, 160, 320};
  const CMatrix id = CMatrix::Identity(2, 2);
  for (int t = 0; t < 6; ++t) {
    const Point x = random_point(rng, 2, -2, 2);
    const Point xi = random_point(rng, 2, -1, 1);
    CHECK((left.component(0, x, xi) - id).norm() < 1e-10);
    CHECK((right.component(0, x, xi) - id).norm() < 1e-10);
    for (int j = 1; j < J; ++j) {
      CHECK(left.component(j, x, xi).norm() < 1e-10);
      CHECK(right.component(j, x, xi).norm() < 1e-10);
    }
    CHECK(fitted_xi_order(left_tail, x, xi, radii, J, 1) <= -J + 0.05);
    CHECK(fitted_xi_order(right_tail, x, xi, radii, J, 1) <= -J + 0.05);
  }
}

TEST_CASE("xi_component contract") {
  const SGSymbol lap = laplacian_like(3, 1, 0.0);
  const Point x{0.1, 0.2, 0.3}, xi{1.0, -2.0, 0.5};
  CHECK(std::abs(xi_component(lap, 2.0)(x, xi, 0).scalar_value() - Complex(5.25)) < 1e-15);
  CHECK_THROWS_AS(xi_component(lap, 1.0), std::out_of_range);
  CHECK_THROWS_AS(xi_component(lap, 2.5), std::out_of_range);
  CHECK_THROWS_AS(xi_component(lap, 3.0), std::out_of_range);
  // polynomial symbols vanish beyond their depth
  CHECK(lap.component(2, x, xi).norm() == 0.0);
  const SGSymbol r = random_symbol(3, 1, 0.0, 2, 1);
  CHECK_THROWS_AS(r.component(2, x, xi), std::out_of_range);
  CHECK_THROWS_AS(compose(r, lap, 3).component(2, x, xi), std::out_of_range);
  CHECK_THROWS_AS(compose(r, random_symbol(2, 1, 0.0, 2, 1), 2), std::invalid_argument);
}

TEST_CASE("Lambda-ellipticity sampling") {
  const EllipticitySamples samples = EllipticitySamples::standard(3, 1.0);
  const SectorSpec sector(std::numbers::pi / 4);
  const auto good = lambda_ellipticity_check(laplacian_like(3, 2, 0.0), sector, samples);
  CHECK(good.pass);
  CHECK(good.min_margin == doctest::Approx(std::numbers::pi / 4));
  CHECK(std::isfinite(good.resolvent_bound));
  const auto bad = lambda_ellipticity_check(scale(laplacian_like(3, 2, 0.0), -1.0), sector, samples);
  CHECK_FALSE(bad.pass);
  CHECK(sector.contains(Complex(-1.0, 0.0)));
  CHECK(sector.contains(Complex(0.0, 1.0)));
  CHECK_FALSE(sector.contains(Complex(1.0, 0.5)));
  CHECK(sector.contains(Complex(0.0)));
  CHECK_THROWS_AS(SectorSpec(0.0), std::invalid_argument);
  CHECK_THROWS_AS(SectorSpec(std::numbers::pi), std::invalid_argument);
}
