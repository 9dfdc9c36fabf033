#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "sgwres_run.hpp"

using namespace sgwres::cli;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string validation_error(const RunConfig& cfg) {
  try {
    validate(cfg);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig cfg = parse(
      "# comment line\n"
      "command = wres-laplacian   # trailing comment\n"
      "\n"
      "metric.kind=conformal\n"
      "  metric.n = 6\n"
      "metric.c = -0.25\n"
      "metric.p = 1.5\n"
      "endo.kind = constant\n"
      "endo.c = 2e-1\n"
      "bundle.rank = 3\n"
      "quad.sphere_level = 5\n"
      "quad.rho0 = 16\n"
      "quad.tolerance = 1e-7\n"
      "epsilon.values = 0, 0.5 ,3\n");
  CHECK(cfg.command == "wres-laplacian");
  CHECK(cfg.metric_kind == "conformal");
  CHECK(cfg.n == 6);
  CHECK(cfg.c == -0.25);
  CHECK(cfg.p == 1.5);
  CHECK(cfg.endo_kind == "constant");
  CHECK(cfg.endo_c == 0.2);
  CHECK(cfg.rank == 3);
  CHECK(cfg.sphere_level == 5);
  CHECK(cfg.fp.rho0 == 16);
  CHECK(cfg.fp.tolerance == 1e-7);
  CHECK(cfg.epsilons == std::vector<double>{0, 0.5, 3});
  CHECK(validation_error(cfg).empty());

  CHECK_THROWS_AS(parse("metric.kind conformal\n"), ConfigError);
  CHECK_THROWS_AS(parse("metric.colour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse("metric.n = 4.5\n"), ConfigError);
  CHECK_THROWS_AS(parse("metric.c = 0.3x\n"), ConfigError);
  CHECK_THROWS_AS(parse("metric.c =\n"), ConfigError);
  CHECK_THROWS_AS(parse("epsilon.values = 0,,1\n"), ConfigError);
}

TEST_CASE("config validation") {
  RunConfig cfg;
  cfg.command = "fpint";
  CHECK(validation_error(cfg).empty());

  RunConfig bad = cfg;
  bad.command = "integrate";
  CHECK(validation_error(bad) == "unknown command 'integrate'");
  bad.command.clear();
  CHECK(validation_error(bad) == "missing command");

  for (int n : {2, 3, 5, 10}) {
    bad = cfg;
    bad.n = n;
    CHECK(!validation_error(bad).empty());
  }
  for (int n : {4, 6, 8}) {
    bad = cfg;
    bad.n = n;
    CHECK(validation_error(bad).empty());
  }

  bad = cfg;
  bad.command = "wres-dirac";
  bad.n = 6;
  CHECK(validation_error(bad) == "wres-dirac requires n=4");

  bad = cfg;
  bad.fp.tolerance = 0;
  CHECK(!validation_error(bad).empty());
  bad = cfg;
  bad.gap_tolerance = -1e-3;
  CHECK(!validation_error(bad).empty());

  bad = cfg;
  bad.metric_kind = "shear";
  bad.c = -1.0;
  CHECK(!validation_error(bad).empty());
  bad.c = 0.5;
  bad.p = 0;
  CHECK(!validation_error(bad).empty());

  bad = cfg;
  bad.metric_kind = "conformal";
  bad.p = 2.5;
  bad.alpha = 5.0;
  CHECK(validation_error(bad).empty());
  bad.alpha = 4.0;
  CHECK(!validation_error(bad).empty());

  bad = cfg;
  bad.epsilons = {0.0, -0.1};
  CHECK(!validation_error(bad).empty());
  bad = cfg;
  bad.fp.ladder = bad.fp.fit_terms;
  CHECK(!validation_error(bad).empty());

  bad = cfg;
  bad.n = 6;
  CHECK_THROWS_WITH_AS(run([&] {
                         RunConfig c = bad;
                         c.command = "wres-dirac";
                         return c;
                       }()),
                       "wres-dirac requires n=4", ConfigError);
}

TEST_CASE("fpint command against closed forms") {
  RunConfig cfg;
  cfg.command = "fpint";
  cfg.power = 3;
  RunResult res = run(cfg);
  CHECK(res.status == 0);
  CHECK(res.report["schema"] == "sg-wres/1");
  CHECK(res.report["status"] == "ok");
  const double half_pi_sq = std::numbers::pi * std::numbers::pi / 2;
  CHECK(std::abs(res.report["result"]["value"].get<double>() - half_pi_sq) < 1e-6);
  CHECK(std::abs(res.report["result"]["closed_form"].get<double>() - half_pi_sq) < 1e-12);
  for (const char* key : {"fit_residual", "rho_samples", "converged"}) CHECK(res.report["result"].contains(key));

  // Log-divergent case: no closed form field, finite part 0.
  cfg.power = 1;
  res = run(cfg);
  CHECK(std::abs(res.report["result"]["value"].get<double>()) < 1e-6);
  CHECK(!res.report["result"].contains("closed_form"));

  // Non-integer order on R^6 against the continued beta integral.
  cfg.n = 6;
  cfg.power = 1.25;
  res = run(cfg);
  CHECK(res.report["result"]["closed_form_error"].get<double>() < 1e-6);

  cfg.n = 4;
  cfg.integrand = "volume";
  CHECK(std::abs(run(cfg).report["result"]["value"].get<double>()) < 1e-10);
}

TEST_CASE("reports are deterministic") {
  RunConfig cfg;
  cfg.command = "curvature";
  cfg.metric_kind = "conformal";
  cfg.c = 0.3;
  cfg.p = 2;
  cfg.points = 3;
  const std::string a = run(cfg).report.dump();
  CHECK(run(cfg).report.dump() == a);
  cfg.seed = 7;
  const std::string b = run(cfg).report.dump();
  CHECK(b != a);
  CHECK(run(cfg).report.dump() == b);
}

TEST_CASE("epsilon-shift and verify-kkw commands") {
  RunConfig cfg;
  cfg.command = "epsilon-shift";
  cfg.metric_kind = "conformal";
  cfg.c = 0.3;
  cfg.p = 2;
  cfg.epsilons = {0.0, 0.5, 1.0, 4.0};
  RunResult res = run(cfg);
  CHECK(res.status == 0);
  CHECK(res.report["result"]["samples"].size() == 4);
  CHECK(res.report["result"]["affine_gap"].get<double>() < 1e-10);

  cfg.command = "verify-kkw";
  cfg.n = 6;
  res = run(cfg);
  CHECK(res.status == 0);
  CHECK(res.report["result"]["compared_route"] == "curvature");
  CHECK(res.report["result"]["pass"] == true);

  cfg.metric_kind = "flat";
  cfg.n = 4;
  cfg.sphere_level = 2;
  cfg.points = 2;
  res = run(cfg);
  CHECK(res.status == 0);
  CHECK(res.report["result"]["compared_route"] == "symbol");
  CHECK(res.report["result"]["wres_heat_route"].get<double>() == 0.0);
  CHECK(std::abs(res.report["result"]["wres_compared_route"].get<double>()) < 1e-12);
  CHECK(res.report["result"]["relative_gap"].get<double>() < 1e-12);
  CHECK(res.summary.find("PASS") != std::string::npos);
}
