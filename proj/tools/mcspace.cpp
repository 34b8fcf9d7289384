#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mcspace/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"microcanonical phase spaces and single-measurement algebra at desk scale"};
  app.require_subcommand(1);

  mcspace::CliOptions opt;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::uint64_t cap = 0;

  const struct {
    const char* name;
    const char* help;
  } commands[] = {
      {"shells", "enumerate the microcanonical census"},
      {"gamma", "map configured observables onto the shell space"},
      {"law", "probability law of each observable under the configured state"},
      {"spectral", "spectral chains and reconstruction summary"},
      {"sample", "draw single measurements of the first observable"},
      {"verify", "run the full verification suite"},
      {"stability", "repeat expectations on a lattice grown by 2 per axis"},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", opt.config_path, "JSON run configuration")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out_dir, "output directory for artifacts")->required();
    sub->add_option("--seed", seed, "override run.seed");
    sub->add_option("--workers", workers, "override run.workers");
    sub->add_option("--cap", cap, "override run.cap (enumeration guard)");
  }

  // Exit status: 0 success, 1 bad input or environment, 2 a verified
  // property failed.
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  const CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed") > 0) opt.seed = seed;
  if (sub->count("--workers") > 0) opt.workers = workers;
  if (sub->count("--cap") > 0) opt.cap = cap;

  const std::string command = sub->get_name();
  try {
    return mcspace::run_command(command, opt, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
