#include "sgwres_run.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "sgwres/dirac.hpp"
#include "sgwres/laplacian.hpp"

namespace sgwres::cli {

namespace {

const std::vector<std::string> kCommands{"curvature",      "fpint",         "wres-dirac",
                                         "wres-laplacian", "epsilon-shift", "verify-kkw"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, v));
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(fmt::format("{}: expected an integer, got '{}'", key, v));
  return out;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> s{
      {"command", [](RunConfig& c, auto&, auto& v) { c.command = v; }},
      {"output", [](RunConfig& c, auto&, auto& v) { c.output = v; }},
      {"seed", [](RunConfig& c, auto& k, auto& v) { c.seed = static_cast<unsigned>(to_int(k, v)); }},
      {"metric.kind", [](RunConfig& c, auto&, auto& v) { c.metric_kind = v; }},
      {"metric.n", [](RunConfig& c, auto& k, auto& v) { c.n = to_int(k, v); }},
      {"metric.c", [](RunConfig& c, auto& k, auto& v) { c.c = to_double(k, v); }},
      {"metric.p", [](RunConfig& c, auto& k, auto& v) { c.p = to_double(k, v); }},
      {"metric.alpha", [](RunConfig& c, auto& k, auto& v) { c.alpha = to_double(k, v); }},
      {"endo.kind", [](RunConfig& c, auto&, auto& v) { c.endo_kind = v; }},
      {"endo.c", [](RunConfig& c, auto& k, auto& v) { c.endo_c = to_double(k, v); }},
      {"bundle.rank", [](RunConfig& c, auto& k, auto& v) { c.rank = to_int(k, v); }},
      {"quad.sphere_level", [](RunConfig& c, auto& k, auto& v) { c.sphere_level = to_int(k, v); }},
      {"quad.x_level", [](RunConfig& c, auto& k, auto& v) { c.x_level = to_int(k, v); }},
      {"quad.rho0", [](RunConfig& c, auto& k, auto& v) { c.fp.rho0 = to_double(k, v); }},
      {"quad.ladder", [](RunConfig& c, auto& k, auto& v) { c.fp.ladder = to_int(k, v); }},
      {"quad.radial_nodes", [](RunConfig& c, auto& k, auto& v) { c.fp.radial_nodes = to_int(k, v); }},
      {"quad.fit_terms", [](RunConfig& c, auto& k, auto& v) { c.fp.fit_terms = to_int(k, v); }},
      {"quad.tolerance", [](RunConfig& c, auto& k, auto& v) { c.fp.tolerance = to_double(k, v); }},
      {"fpint.integrand", [](RunConfig& c, auto&, auto& v) { c.integrand = v; }},
      {"fpint.power", [](RunConfig& c, auto& k, auto& v) { c.power = to_double(k, v); }},
      {"epsilon.values", [](RunConfig& c, auto& k, auto& v) { c.epsilons = to_list(k, v); }},
      {"check.points", [](RunConfig& c, auto& k, auto& v) { c.points = to_int(k, v); }},
      {"check.spread", [](RunConfig& c, auto& k, auto& v) { c.spread = to_double(k, v); }},
      {"check.gap_tolerance", [](RunConfig& c, auto& k, auto& v) { c.gap_tolerance = to_double(k, v); }},
  };
  return s;
}

bool any_of(const std::string& v, std::initializer_list<const char*> options) {
  return std::any_of(options.begin(), options.end(), [&](const char* o) { return v == o; });
}

SphereRule x_rule(const RunConfig& cfg) {
  return cfg.x_level == 0 ? SphereRule::single_direction(cfg.n) : sphere_rule(cfg.n, cfg.x_level);
}

// Fixed spread-out points, optionally jittered by the seed.
std::vector<Point> sample_points(const RunConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  std::vector<Point> pts;
  for (int i = 0; i < cfg.points; ++i) {
    Point x(cfg.n);
    for (int k = 0; k < cfg.n; ++k) {
      x[k] = cfg.spread * std::sin(1.3 * (i + 1) * (k + 1) + 0.4 * k);
      if (cfg.seed != 0) x[k] += cfg.spread * jitter(rng);
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

Endomorphism make_endomorphism(const RunConfig& cfg) {
  if (cfg.endo_kind == "constant") return Endomorphism::constant(cfg.endo_c);
  if (cfg.endo_kind == "lichnerowicz") return Endomorphism::lichnerowicz();
  return Endomorphism::zero();
}

// (1 + |x|^2)^{-k} with its x-expansion r^{-2k} sum_i binom(-k, i) r^{-2i}.
ClassicalFunction bracket_power(int n, double k) {
  ClassicalFunction f;
  f.n = n;
  f.order = -2 * k;
  f.label = fmt::format("(1+|x|^2)^-{}", k);
  f.value = [k](std::span<const double> x) {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    return std::pow(1.0 + r2, -k);
  };
  f.excess = [k](std::span<const double> x) {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    return std::pow(r2, -k) * std::expm1(-k * std::log1p(1.0 / r2));
  };
  double binom = 1.0;
  for (int j = 0; j < 24; ++j) {
    double c = 0.0;
    if (j % 2 == 0) {
      c = binom;
      binom *= (-k - j / 2) / (j / 2 + 1.0);
    }
    f.x_terms.push_back([c](std::span<const double>) { return c; });
  }
  return f;
}

// Analytic continuation of the radial beta integral; absent at the log poles.
std::optional<double> bracket_closed_form(int n, double k) {
  const double a = k - n / 2.0;
  if (a <= 0 && std::abs(a - std::round(a)) < 1e-12) return std::nullopt;
  return sphere_volume(n) * 0.5 * std::tgamma(n / 2.0) * std::tgamma(a) / std::tgamma(k);
}

struct Outcome {
  nlohmann::json result;
  std::vector<std::string> lines;
  bool ok = true;      // every finite-part fit converged
  bool passed = true;  // the command's own check, when it has one
};

Outcome run_curvature(const RunConfig& cfg, const MetricField& g) {
  Outcome o;
  nlohmann::json pts = nlohmann::json::array();
  for (const Point& x : sample_points(cfg)) {
    const CurvatureData cd = curvature_at(g, x);
    pts.push_back({{"x", x}, {"scalar", cd.scalar}, {"sqrt_det_g", cd.sqrt_det_g}});
  }
  const FPIntReport fp = finite_part_integral_fitting_x_terms(g.scalar_curvature_density(), x_rule(cfg), cfg.fp);
  o.result = {{"points", pts}, {"scalar_density_fpint", to_json(fp)}};
  o.lines.push_back(fmt::format("fpint s sqrt(g) = {:.12g}", fp.value));
  if (g.alpha() > 2) {
    const double plain = plain_integral(g.scalar_curvature_density(), x_rule(cfg));
    o.result["scalar_density_plain"] = plain;
    o.lines.push_back(fmt::format("plain  s sqrt(g) = {:.12g}", plain));
  }
  o.ok = fp.converged;
  return o;
}

Outcome run_fpint(const RunConfig& cfg, const MetricField& g) {
  Outcome o;
  ClassicalFunction f;
  std::optional<double> exact;
  if (cfg.integrand == "bracket") {
    f = bracket_power(cfg.n, cfg.power);
    exact = bracket_closed_form(cfg.n, cfg.power);
  } else if (cfg.integrand == "volume") {
    f = g.volume_density();
  } else {
    f = g.scalar_curvature_density();
  }
  const FPIntReport fp = finite_part_integral_fitting_x_terms(f, x_rule(cfg), cfg.fp);
  o.result = to_json(fp);
  o.lines.push_back(fmt::format("fpint {} on R^{} = {:.12g}", f.label, cfg.n, fp.value));
  if (exact) {
    o.result["closed_form"] = *exact;
    o.result["closed_form_error"] = std::abs(fp.value - *exact);
    o.lines.push_back(fmt::format("closed form = {:.12g}", *exact));
  }
  o.ok = fp.converged;
  return o;
}

Outcome run_wres_dirac(const RunConfig& cfg, const MetricField& g) {
  Outcome o;
  DiracWresOptions opts;
  opts.xi_rule = sphere_rule(4, cfg.sphere_level);
  opts.x_rule = x_rule(cfg);
  opts.fp = cfg.fp;
  opts.kastler_points = sample_points(cfg);
  const DiracWresReport r = wres_dirac(build_dirac(g), opts);
  o.result = to_json(r);
  o.lines.push_back(fmt::format("wres symbol route    = {:.12g}", r.wres_symbol_route));
  o.lines.push_back(fmt::format("wres curvature route = {:.12g}", r.wres_curvature_route));
  o.lines.push_back(fmt::format("relative gap         = {:.3g}", r.relative_gap));
  o.ok = r.symbol_route.fpint.converged && r.curvature_fpint.converged;
  return o;
}

Outcome run_wres_laplacian(const RunConfig& cfg, const MetricField& g) {
  Outcome o;
  GeneralizedLaplacian L{g, cfg.rank, {}, make_endomorphism(cfg)};
  const HeatWresReport heat = wres_from_heat(L, x_rule(cfg), cfg.fp);
  o.result = to_json(heat);
  o.lines.push_back(fmt::format("wres heat route   = {:.12g}", heat.wres));
  o.ok = heat.coefficients.converged;
  if (cfg.n == 4) {
    const WresReport sym = wres_laplacian_symbol(L, sphere_rule(4, cfg.sphere_level), x_rule(cfg), cfg.fp);
    const double gap = std::abs(sym.value - heat.wres) / std::max(std::abs(heat.wres), 1e-10);
    o.result["symbol_route"] = to_json(sym);
    o.result["relative_gap"] = gap;
    o.lines.push_back(fmt::format("wres symbol route = {:.12g}", sym.value));
    o.lines.push_back(fmt::format("relative gap      = {:.3g}", gap));
    o.ok = o.ok && sym.fpint.converged;
  }
  return o;
}

Outcome run_epsilon_shift(const RunConfig& cfg, const MetricField& g) {
  Outcome o;
  nlohmann::json rows = nlohmann::json::array();
  std::vector<EpsilonShiftReport> reps;
  for (double eps : cfg.epsilons) {
    reps.push_back(epsilon_shift_wres(g, eps, x_rule(cfg), cfg.fp));
    rows.push_back(to_json(reps.back()));
    o.lines.push_back(fmt::format("eps = {:<8g} wres = {:.12g}", eps, reps.back().value));
    o.ok = o.ok && reps.back().curvature.converged && reps.back().volume.converged;
  }
  // Deviation from the line through the first two samples.
  double affine_gap = 0.0;
  if (reps.size() >= 2 && reps[1].epsilon != reps[0].epsilon) {
    const double slope = (reps[1].value - reps[0].value) / (reps[1].epsilon - reps[0].epsilon);
    for (const auto& r : reps)
      affine_gap = std::max(affine_gap, std::abs(r.value - reps[0].value - slope * (r.epsilon - reps[0].epsilon)));
  }
  o.result = {{"samples", rows}, {"affine_gap", affine_gap}};
  o.lines.push_back(fmt::format("affine gap = {:.3g}", affine_gap));
  return o;
}

Outcome run_verify_kkw(const RunConfig& cfg, const MetricField& g) {
  Outcome o;
  const int spinor_rank = 1 << (cfg.n / 2);
  GeneralizedLaplacian L{g, spinor_rank, {}, Endomorphism::lichnerowicz()};
  const HeatWresReport heat = wres_from_heat(L, x_rule(cfg), cfg.fp);
  double other = 0.0;
  std::string other_name;
  bool converged = heat.coefficients.converged;
  if (cfg.n == 4) {
    DiracWresOptions opts;
    opts.xi_rule = sphere_rule(4, cfg.sphere_level);
    opts.x_rule = x_rule(cfg);
    opts.fp = cfg.fp;
    opts.kastler_points = sample_points(cfg);
    const DiracWresReport d = wres_dirac(build_dirac(g), opts);
    other = d.wres_symbol_route;
    other_name = "symbol";
    o.result["dirac"] = to_json(d);
    converged = converged && d.symbol_route.fpint.converged && d.curvature_fpint.converged;
  } else {
    // No parametrix route beyond n = 4; compare with the curvature formula.
    const EpsilonShiftReport e = epsilon_shift_wres(g, 0.0, x_rule(cfg), cfg.fp);
    other = e.value;
    other_name = "curvature";
    o.result["curvature_formula"] = to_json(e);
    converged = converged && e.curvature.converged;
  }
  const double gap = std::abs(other - heat.wres) / std::max(std::abs(heat.wres), 1e-10);
  const bool pass = gap <= cfg.gap_tolerance;
  o.result["heat"] = to_json(heat);
  o.result["compared_route"] = other_name;
  o.result["wres_heat_route"] = heat.wres;
  o.result["wres_compared_route"] = other;
  o.result["relative_gap"] = gap;
  o.result["gap_tolerance"] = cfg.gap_tolerance;
  o.result["pass"] = pass;
  o.lines.push_back(fmt::format("wres heat route  = {:.12g}", heat.wres));
  o.lines.push_back(fmt::format("wres {:<11} = {:.12g}", other_name + " route", other));
  o.lines.push_back(fmt::format("relative gap     = {:.3g} (tolerance {:g}) {}", gap, cfg.gap_tolerance,
                                pass ? "PASS" : "FAIL"));
  o.ok = converged;
  o.passed = pass;
  return o;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(fmt::format("line {}: expected key = value", lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(fmt::format("line {}: unknown key '{}'", lineno, key));
    if (value.empty()) throw ConfigError(fmt::format("line {}: empty value for '{}'", lineno, key));
    it->second(cfg, key, value);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse_config(in);
}

void validate(const RunConfig& cfg) {
  if (std::find(kCommands.begin(), kCommands.end(), cfg.command) == kCommands.end())
    throw ConfigError(cfg.command.empty() ? "missing command" : "unknown command '" + cfg.command + "'");
  if (cfg.n % 2 != 0 || cfg.n < 4 || cfg.n > 8) throw ConfigError(fmt::format("unsupported n={}", cfg.n));
  if (cfg.command == "wres-dirac" && cfg.n != 4) throw ConfigError("wres-dirac requires n=4");
  if (!any_of(cfg.metric_kind, {"flat", "conformal", "shear"}))
    throw ConfigError("unknown metric.kind '" + cfg.metric_kind + "'");
  if (cfg.metric_kind != "flat") {
    if (!(cfg.p > 0)) throw ConfigError("metric.p must be positive");
    // max of r^2 (1 + r^2)^{-p-1} over r is below 1 for p > 0.
    if (cfg.metric_kind == "shear" && cfg.c <= -1) throw ConfigError("metric.c <= -1 is not positive definite");
  }
  if (!any_of(cfg.endo_kind, {"zero", "constant", "lichnerowicz"}))
    throw ConfigError("unknown endo.kind '" + cfg.endo_kind + "'");
  if (!any_of(cfg.integrand, {"bracket", "volume", "scalar"}))
    throw ConfigError("unknown fpint.integrand '" + cfg.integrand + "'");
  if (!(cfg.fp.tolerance > 0) || !(cfg.gap_tolerance > 0)) throw ConfigError("tolerances must be positive");
  if (!(cfg.fp.rho0 > 0)) throw ConfigError("quad.rho0 must be positive");
  if (cfg.fp.fit_terms < 1 || cfg.fp.ladder <= cfg.fp.fit_terms)
    throw ConfigError("quad.ladder must exceed quad.fit_terms >= 1");
  if (cfg.fp.radial_nodes < 2) throw ConfigError("quad.radial_nodes must be at least 2");
  if (cfg.sphere_level < 1 || cfg.x_level < 0) throw ConfigError("invalid quadrature level");
  if (cfg.rank < 1) throw ConfigError("bundle.rank must be positive");
  if (cfg.points < 1 || !(cfg.spread > 0)) throw ConfigError("invalid check.points or check.spread");
  for (double e : cfg.epsilons)
    if (e < 0) throw ConfigError("epsilon values must be non-negative");
  if (cfg.alpha) {
    const double a = make_metric(cfg).alpha();
    if (std::isfinite(a) ? std::abs(*cfg.alpha - a) > 1e-12 : std::isfinite(*cfg.alpha))
      throw ConfigError(fmt::format("metric.alpha={} disagrees with the registry value {}", *cfg.alpha, a));
  }
}

MetricField make_metric(const RunConfig& cfg) {
  if (cfg.metric_kind == "conformal") return MetricField::conformal(cfg.n, cfg.c, cfg.p);
  if (cfg.metric_kind == "shear") return MetricField::radial_shear(cfg.n, cfg.c, cfg.p);
  return MetricField::flat(cfg.n);
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json metric{{"kind", cfg.metric_kind}, {"n", cfg.n}};
  if (cfg.metric_kind != "flat") {
    metric["c"] = cfg.c;
    metric["p"] = cfg.p;
  }
  return {{"command", cfg.command},
          {"metric", metric},
          {"endo", {{"kind", cfg.endo_kind}, {"c", cfg.endo_c}}},
          {"bundle_rank", cfg.rank},
          {"quad",
           {{"sphere_level", cfg.sphere_level},
            {"x_level", cfg.x_level},
            {"rho0", cfg.fp.rho0},
            {"ladder", cfg.fp.ladder},
            {"radial_nodes", cfg.fp.radial_nodes},
            {"fit_terms", cfg.fp.fit_terms},
            {"tolerance", cfg.fp.tolerance}}},
          {"seed", cfg.seed}};
}

RunResult run(const RunConfig& cfg) {
  validate(cfg);
  const MetricField g = make_metric(cfg);
  Outcome o;
  if (cfg.command == "curvature") o = run_curvature(cfg, g);
  else if (cfg.command == "fpint") o = run_fpint(cfg, g);
  else if (cfg.command == "wres-dirac") o = run_wres_dirac(cfg, g);
  else if (cfg.command == "wres-laplacian") o = run_wres_laplacian(cfg, g);
  else if (cfg.command == "epsilon-shift") o = run_epsilon_shift(cfg, g);
  else o = run_verify_kkw(cfg, g);

  RunResult res;
  const char* status = !o.ok ? "not_converged" : !o.passed ? "check_failed" : "ok";
  res.status = o.ok && o.passed ? 0 : 2;
  res.report = {{"schema", "sg-wres/1"},
                {"config", to_json(cfg)},
                {"metric_alpha", std::isfinite(g.alpha()) ? nlohmann::json(g.alpha()) : nlohmann::json("inf")},
                {"result", o.result},
                {"status", status}};
  std::string s = fmt::format("{} on {} metric, n={}\n", cfg.command, cfg.metric_kind, cfg.n);
  for (const auto& l : o.lines) s += "  " + l + "\n";
  s += fmt::format("status: {}\n", status);
  res.summary = s;
  return res;
}

}  // namespace sgwres::cli
