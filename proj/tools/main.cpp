#include <CLI11.hpp>

#include <iostream>

#include "thermobound/cli/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"thermobound: precision bounds on the mean logarithmic error of "
               "Bayesian thermometry, with Monte-Carlo validation"};
  std::string config_path;
  std::string output_dir;
  bool quiet = false;
  app.add_option("-c,--config", config_path, "JSON run configuration file")->required();
  app.add_option("-o,--output-dir", output_dir, "directory prefix for relative output paths");
  app.add_flag("-q,--quiet", quiet, "suppress progress output");
  CLI11_PARSE(app, argc, argv);
  return thermo::cli::run_config_file(config_path, output_dir, quiet, std::cout, std::cerr);
}
