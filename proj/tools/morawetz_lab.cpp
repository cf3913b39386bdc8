// morawetz-lab: command-line driver for the verification suites and decay runs.
//
// Exit status: 0 all checks pass, 1 a check fails, 2 configuration error.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "morawetz/lab/suites.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Low-frequency Morawetz estimate laboratory"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<int> threads;

  struct Cmd {
    const char* name;
    const char* help;
  };
  const Cmd cmds[] = {
      {"verify-operators", "operator algebra, commutator identities and solver oracles"},
      {"verify-speccalc", "spectral cutoff and resolvent exponent sweeps, Hardy ratios"},
      {"run-decay", "global space-time decay functionals (n >= 4)"},
      {"run-local", "forward-cone and compact-set decay functionals (n >= 3)"},
      {"report", "SVG plots and a text summary of a finished run"},
  };
  for (const auto& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    if (std::string(c.name) == "report") {
      sub->add_option("--out", out_dir, "run directory to summarize")->required();
      sub->add_option("--config", config_path, "unused; accepted for symmetry");
    } else {
      sub->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
      sub->add_option("--out", out_dir, "output directory")->required();
    }
    sub->add_option("--threads", threads, "worker threads (default: $MORAWETZ_LAB_THREADS or 1)")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const morawetz::lab::SuiteResult r = morawetz::lab::run_command(command, config_path, out_dir, threads);
    std::printf("%s", r.summary.c_str());
    return r.exit_code;
  } catch (const morawetz::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
