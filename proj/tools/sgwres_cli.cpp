// sgwres_cli --config run.cfg [--output report.json] [--tolerance t] [--seed s]
//
// Exit status: 0 ok, 2 non-converged or failed check (report still written),
// 1 hard error.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "sgwres_run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Regularized residues of SG-classical symbols on R^n"};
  std::string config_path;
  std::optional<std::string> output;
  std::optional<double> tolerance;
  std::optional<unsigned> seed;
  app.add_option("--config", config_path, "key = value run configuration")->required();
  app.add_option("--output", output, "JSON report path; the summary goes next to it as .txt");
  app.add_option("--tolerance", tolerance, "overrides quad.tolerance");
  app.add_option("--seed", seed, "jitter for sample points (0: none)");
  CLI11_PARSE(app, argc, argv);

  try {
    sgwres::cli::RunConfig cfg = sgwres::cli::load_config(config_path);
    if (output) cfg.output = *output;
    if (tolerance) cfg.fp.tolerance = *tolerance;
    if (seed) cfg.seed = *seed;
    const sgwres::cli::RunResult res = sgwres::cli::run(cfg);

    std::filesystem::path json_path(cfg.output);
    std::ofstream(json_path) << res.report.dump(2) << '\n';
    std::filesystem::path txt_path = json_path;
    txt_path.replace_extension(".txt");
    std::ofstream(txt_path) << res.summary;
    std::cout << res.summary;
    return res.status;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
