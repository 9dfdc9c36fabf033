#pragma once

// Batch driver behind sgwres_cli: a flat key = value run configuration and the
// pipelines it selects.

#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sgwres/fpint.hpp"
#include "sgwres/geometry.hpp"

namespace sgwres::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;

  std::string metric_kind = "flat";  // flat | conformal | shear
  int n = 4;
  double c = 0.0;
  double p = 1.0;
  std::optional<double> alpha;  // must agree with the registry value when given

  std::string endo_kind = "zero";  // zero | constant | lichnerowicz
  double endo_c = 0.0;
  int rank = 1;

  int sphere_level = 3;  // xi-sphere rule
  int x_level = 0;       // 0: one direction (radial registry metrics)
  FPIntOptions fp;

  std::string integrand = "bracket";  // bracket | volume | scalar
  double power = 3.0;

  std::vector<double> epsilons{0.0, 0.5, 1.0};
  int points = 10;
  double spread = 1.5;
  double gap_tolerance = 1e-3;

  std::string output = "sg-wres-report.json";
  unsigned seed = 0;
};

/// Reads `key = value` lines; '#' starts a comment. Unknown keys are errors.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

/// Throws ConfigError when the configuration cannot be run.
void validate(const RunConfig& cfg);

MetricField make_metric(const RunConfig& cfg);

struct RunResult {
  nlohmann::json report;
  std::string summary;
  int status = 0;  // 0 ok, 2 not converged or check failed
};

RunResult run(const RunConfig& cfg);

nlohmann::json to_json(const RunConfig& cfg);

}  // namespace sgwres::cli
