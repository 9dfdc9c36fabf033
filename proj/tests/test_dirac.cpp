#include <cmath>
#include <numbers>
#include <random>
#include <tuple>

#include "doctest.h"
#include "sgwres/dirac.hpp"
#include "sgwres/laplacian.hpp"

using namespace sgwres;

namespace {

constexpr double kPi = std::numbers::pi;

// Non-radial perturbation g = delta + 0.3 exp(-|x|^2/4) v v^T, v = (1, x_0, x_1 x_2, 0.5 + x_3).
MetricField bumpy_metric() {
  return MetricField::general(
      4,
      [](std::span<const double> x, int order) {
        const Point base(x.begin(), x.end());
        std::vector<Jet> xs;
        for (int i = 0; i < 4; ++i) xs.push_back(Jet::variable(i, base, order));
        Jet r2 = Jet::constant(0.0, 4, order, base);
        for (const Jet& v : xs) r2 += v * v;
        const Jet bump = 0.3 * exp(-0.25 * r2);
        const std::vector<Jet> v{Jet::constant(1.0, 4, order, base), xs[0], xs[1] * xs[2],
                                 Jet::constant(0.5, 4, order, base) + xs[3]};
        JetGrid g(4, std::vector<Jet>(4));
        for (int j = 0; j < 4; ++j)
          for (int k = 0; k < 4; ++k) {
            g[j][k] = bump * v[j] * v[k];
            if (j == k) g[j][k] += Jet::constant(1.0, 4, order, base);
          }
        return from_grid(g);
      },
      100.0, "bumpy");
}

std::vector<Point> sample_points(int count, double spread, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-spread, spread);
  std::vector<Point> pts;
  for (int i = 0; i < count; ++i) pts.push_back({u(rng), u(rng), u(rng), u(rng)});
  return pts;
}

ConnectionFn spin_connection_fn(const MetricField& g, const CliffordAlgebra& cl) {
  return [g, cl](std::span<const double> x, int order) { return spin_connection(g, cl, x, order); };
}

}  // namespace

TEST_CASE("Clifford relations") {
  for (int n : {2, 4, 6, 8}) {
    const CliffordAlgebra cl = build_clifford(n);
    CHECK(cl.d == (1 << (n / 2)));
    REQUIRE(static_cast<int>(cl.gamma.size()) == n);
    const CMatrix id = CMatrix::Identity(cl.d, cl.d);
    for (int a = 0; a < n; ++a) {
      CHECK((cl.gamma[a] - cl.gamma[a].adjoint()).norm() == 0.0);
      CHECK(std::abs(cl.gamma[a].trace()) == 0.0);
      for (int b = 0; b < n; ++b) {
        const CMatrix anti = cl.gamma[a] * cl.gamma[b] + cl.gamma[b] * cl.gamma[a];
        CHECK((anti - (a == b ? 2.0 : 0.0) * id).norm() == 0.0);
        if (n == 4) CHECK(std::abs((cl.gamma[a] * cl.gamma[b]).trace() - (a == b ? 4.0 : 0.0)) < 1e-15);
      }
    }
  }
  for (int n : {0, 3, 5, 10}) CHECK_THROWS_AS(build_clifford(n), std::invalid_argument);
}

TEST_CASE("Dirac symbol") {
  const CliffordAlgebra cl = build_clifford(4);
  const Point x{0.3, -0.7, 0.2, 1.1}, xi{0.5, -1.2, 0.8, 0.3};

  SUBCASE("flat") {
    const SGSymbol d = dirac_symbol(MetricField::flat(4), cl);
    CMatrix expect = CMatrix::Zero(4, 4);
    for (int a = 0; a < 4; ++a) expect += xi[a] * cl.gamma[a];
    CHECK((d.component(0, x, xi) - expect).norm() < 1e-15);
    CHECK(d.component(1, x, xi).norm() < 1e-15);
  }
  SUBCASE("conformal frame") {
    const double c = 0.4, p = 2.5;
    const MetricField g = MetricField::conformal(4, c, p);
    const SGSymbol d = dirac_symbol(g, cl);
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    const double phi = c * std::pow(1.0 + r2, -p);
    CMatrix expect = CMatrix::Zero(4, 4);
    for (int a = 0; a < 4; ++a) expect += std::exp(-phi) * xi[a] * cl.gamma[a];
    CHECK((d.component(0, x, xi) - expect).norm() < 1e-13);
  }
  SUBCASE("traceless and homogeneous") {
    const SGSymbol d = dirac_symbol(bumpy_metric(), cl);
    for (const Point& y : sample_points(5, 1.5, 3)) {
      CHECK(std::abs(d.component(0, y, xi).trace()) < 1e-14);
      Point txi = xi;
      for (double& v : txi) v *= 3.0;
      CHECK((d.component(0, y, txi) - 3.0 * d.component(0, y, xi)).norm() < 1e-12);
      CHECK((d.component(1, y, txi) - d.component(1, y, xi)).norm() < 1e-12);
    }
  }
  SUBCASE("non-positive metric") {
    const MetricField bad = MetricField::general(
        4, [](std::span<const double> x, int order) {
          return Jet::identity(4, 4, order, Point(x.begin(), x.end())) * -1.0;
        },
        0.0, "negative");
    const SGSymbol d = dirac_symbol(bad, cl);
    CHECK_THROWS_AS(d.component(0, x, xi), std::domain_error);
  }
  CHECK_THROWS_AS(dirac_symbol(MetricField::flat(6), cl), std::invalid_argument);
  CHECK_THROWS_AS(build_dirac(MetricField::flat(6)), std::invalid_argument);
}

TEST_CASE("square of the Dirac symbol") {
  const Point xi{0.5, -1.2, 0.8, 0.3};
  double xi2 = 0.0;
  for (double v : xi) xi2 += v * v;

  SUBCASE("flat") {
    const DiracData dd = build_dirac(MetricField::flat(4));
    const Point x{1.0, 2.0, -0.5, 0.0};
    CHECK((dd.symbol_D2.component(0, x, xi) - xi2 * CMatrix::Identity(4, 4)).norm() < 1e-14);
    CHECK(dd.symbol_D2.component(1, x, xi).norm() < 1e-15);
    CHECK(dd.symbol_D2.component(2, x, xi).norm() < 1e-15);
  }
  SUBCASE("conformal leading term") {
    const double c = 0.4, p = 2.5;
    const DiracData dd = build_dirac(MetricField::conformal(4, c, p));
    for (const Point& x : sample_points(4, 1.5, 5)) {
      double r2 = 0.0;
      for (double v : x) r2 += v * v;
      const double phi = c * std::pow(1.0 + r2, -p);
      CHECK((dd.symbol_D2.component(0, x, xi) - std::exp(-2 * phi) * xi2 * CMatrix::Identity(4, 4)).norm() <
            1e-13);
    }
  }
  SUBCASE("Lichnerowicz") {
    // D^2 = nabla* nabla + s/4 for the spin connection: the two symbols differ
    // only in the zero-order term, by s/4 Id.
    for (const MetricField& g : {MetricField::conformal(4, 0.4, 2.5), MetricField::radial_shear(4, 0.5, 2.0),
                                 bumpy_metric()}) {
      const DiracData dd = build_dirac(g);
      const GeneralizedLaplacian L{g, 4, spin_connection_fn(g, dd.clifford), Endomorphism::zero()};
      const SGSymbol bochner = laplace_type_symbol(L);
      for (const Point& x : sample_points(6, 1.5, 11)) {
        INFO(g.name());
        const double s = scalar_curvature(g, x);
        for (int j = 0; j < 2; ++j)
          CHECK((dd.symbol_D2.component(j, x, xi) - bochner.component(j, x, xi)).norm() < 1e-12);
        const CMatrix diff = dd.symbol_D2.component(2, x, xi) - bochner.component(2, x, xi);
        CHECK((diff - Complex(s / 4) * CMatrix::Identity(4, 4)).norm() < 1e-6 * std::max(1.0, std::abs(s)));
      }
    }
  }
}

TEST_CASE("parametrix of D^2") {
  const DiracData dd = build_dirac(bumpy_metric());
  const SGSymbol residual = compose(pad_zero(dd.parametrix_D2, 4), dd.symbol_D2, 4);
  const Point x{0.4, -0.3, 0.9, 0.1};
  const Point dir{0.5, 0.5, -0.5, 0.5};
  const Point xi{0.5, -1.2, 0.8, 0.3};
  CHECK((residual.component(0, x, xi) - CMatrix::Identity(4, 4)).norm() < 1e-12);
  CHECK(residual.component(1, x, xi).norm() < 1e-12);
  CHECK(residual.component(2, x, xi).norm() < 1e-12);
  const std::vector<double> radii{4, 8, 16, 32, 64};
  CHECK(fitted_xi_order(residual, x, dir, radii, 3, 1) <= -3 + 0.05);
  CHECK(fitted_xi_order(residual, x, dir, radii, 1, 3) <= -3 + 0.05);

  // a_{-4} is homogeneous of degree -4
  const SGSymbol::ComponentFn a = a_minus_n_component(dd);
  Point txi = xi;
  for (double& v : txi) v *= 2.5;
  CHECK((a(x, txi, 0).value() - std::pow(2.5, -4) * a(x, xi, 0).value()).norm() <
        1e-10 * a(x, xi, 0).value().norm());
}

TEST_CASE("Kastler pointwise identity") {
  const SphereRule rule = sphere_rule(4, 4);
  SUBCASE("flat") {
    const DiracData dd = build_dirac(MetricField::flat(4));
    CHECK(a_minus_n_component(dd)(Point{1, 2, 3, 4}, Point{1, 0, 0, 0}, 0).value().norm() == 0.0);
    CHECK(kastler_integral(dd, Point{0.5, 0, 1, 0}, rule) == 0.0);
  }
  SUBCASE("ratio is the universal constant") {
    // the anisotropic metric needs a finer xi-rule; the error decays spectrally in the level
    for (const auto& [g, level, tol] : {std::tuple{MetricField::conformal(4, 0.4, 2.5), 4, 1e-8},
                                        std::tuple{bumpy_metric(), 12, 1e-6}}) {
      const DiracData dd = build_dirac(g);
      const SphereRule fine = sphere_rule(4, level);
      int used = 0;
      for (const Point& x : sample_points(10, 1.5, 17)) {
        const double s = scalar_curvature(g, x);
        if (std::abs(s) <= 1e-6) continue;
        ++used;
        INFO(g.name());
        CHECK(kastler_integral(dd, x, fine) / s == doctest::Approx(kastler_constant()).epsilon(tol));
      }
      CHECK(used >= 8);
    }
  }
  SUBCASE("small conformal factor") {
    const Point origin{0, 0, 0, 0};
    double prev_k = 0.0, prev_s = 0.0;
    for (double c : {0.02, 0.01}) {
      const MetricField g = MetricField::conformal(4, c, 2.5);
      const double k = kastler_integral(build_dirac(g), origin, rule);
      const double s = scalar_curvature(g, origin);
      CHECK(k == doctest::Approx(kastler_constant() * s).epsilon(1e-4));
      if (prev_s != 0.0) {
        // s is linear in c to leading order: halving c halves s and the integral
        CHECK(s / prev_s == doctest::Approx(0.5).epsilon(0.05));
        CHECK(k / prev_k == doctest::Approx(s / prev_s).epsilon(0.05));
      }
      prev_k = k;
      prev_s = s;
    }
  }
  CHECK(kastler_constant() == doctest::Approx(-1.0 / (24 * kPi * kPi)).epsilon(1e-15));
}

TEST_CASE("residue of the inverse square") {
  DiracWresOptions opts;
  opts.xi_rule = sphere_rule(4, 3);
  opts.x_rule = SphereRule::single_direction(4);

  SUBCASE("flat") {
    const DiracWresReport rep = wres_dirac(build_dirac(MetricField::flat(4)), opts);
    CHECK(std::abs(rep.wres_symbol_route) < 1e-8);
    CHECK(std::abs(rep.wres_curvature_route) < 1e-8);
  }
  SUBCASE("conformal, both routes") {
    const MetricField g = MetricField::conformal(4, 0.3, 2.5);
    opts.kastler_points = {{0, 0, 0, 0}, {0.5, 0, 0, 0}};
    const DiracWresReport rep = wres_dirac(build_dirac(g), opts);
    CHECK(rep.symbol_route.component_index == 2);
    CHECK(rep.relative_gap < 1e-3);
    REQUIRE(rep.plain_integral.has_value());
    CHECK(rep.curvature_fpint.value == doctest::Approx(*rep.plain_integral).epsilon(1e-4));
    REQUIRE(rep.kastler_pointwise.size() == 2);
    for (const auto& k : rep.kastler_pointwise) CHECK(k.ratio == doctest::Approx(kastler_constant()).epsilon(1e-8));
    const nlohmann::json j = to_json(rep);
    for (const char* key : {"wres_symbol_route", "wres_curvature_route", "relative_gap", "kastler_pointwise"})
      CHECK(j.contains(key));
  }
  SUBCASE("locality") {
    // components of degree above -4 do not enter the residue
    opts.fp.radial_nodes = 8;
    opts.xi_rule = sphere_rule(4, 2);
    DiracData dd = build_dirac(MetricField::conformal(4, 0.3, 2.5));
    const double base = wres_dirac(dd, opts).wres_symbol_route;
    SGSymbol::Info info{4, 4, -2, 0, 2, false, true, "perturbation"};
    auto xi_sq = [](const Point& b, int order) {
      Jet r = Jet::constant(0.0, 8, order, b);
      for (int i = 4; i < 8; ++i) r += Jet::variable(i, b, order) * Jet::variable(i, b, order);
      return r;
    };
    const SGSymbol bump = SGSymbol::from_components(
        info, {[xi_sq](std::span<const double> x, std::span<const double> xi, int order) {
                 const Point b = joint_point(x, xi);
                 Jet r = Jet::constant(1.0, 8, order, b);
                 for (int i = 0; i < 4; ++i) r += Jet::variable(i, b, order) * Jet::variable(i, b, order);
                 return (pow(r, -1.0) * pow(xi_sq(b, order), -1.0)).tensor(CMatrix::Identity(4, 4));
               },
               [xi_sq](std::span<const double> x, std::span<const double> xi, int order) {
                 const Point b = joint_point(x, xi);
                 const Jet f = Jet::variable(0, b, order) * Jet::variable(5, b, order) * pow(xi_sq(b, order), -2.0);
                 return f.tensor(Complex(0.0, 1.0) * CMatrix::Identity(4, 4));
               }});
    dd.parametrix_D2 = add(dd.parametrix_D2, pad_zero(bump, 3));
    CHECK(std::abs(wres_dirac(dd, opts).wres_symbol_route - base) < 1e-8);
  }
}
