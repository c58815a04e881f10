#include <CLI11.hpp>

#include <adiax/cli_core.hpp>

int main(int argc, char** argv) {
  CLI::App app{"adiabatic waveguide/lattice reduction toolkit"};
  app.require_subcommand(1);

  const std::vector<std::string> commands = {"bands",     "reduce",   "bound-states", "scatter",
                                             "propagate", "validate", "regimes"};
  std::string config_path, outdir = "out";
  std::size_t threads = 1;
  for (const auto& name : commands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--outdir", outdir, "output root directory");
    sub->add_option("--threads", threads, "worker thread count")
        ->check(CLI::Range(std::size_t(1), std::size_t(256)));
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();
  return adiax::cli::run_command(command, config_path, outdir, threads);
}
