#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "epinp/config.hpp"
#include "epinp/errors.hpp"
#include "epinp/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::string seed;
  std::string data;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run configuration file")
      ->required();
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "override the configured seed");
  cmd->add_option("--data", args.data, "override the configured data path");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian nonparametric inference for SIR epidemics observed "
               "through removal times"};
  app.require_subcommand(1);

  CommonArgs args;
  const char* commands[] = {"simulate",        "fit-parametric",
                            "fit-discrete-gp", "fit-cts-gp",
                            "ml-estimate",     "summarize"};
  const char* blurbs[] = {
      "simulate an epidemic and export events + removals",
      "fit the constant-rate model by data-augmented MCMC",
      "fit the discrete-time model with a GP log-infection-rate",
      "fit the continuous-time model with a sigmoidal-GP infection rate",
      "per-day binomial ML estimates from fully observed infections",
      "recompute summary.csv from an existing samples.csv"};
  for (std::size_t k = 0; k < 6; ++k)
    add_common(app.add_subcommand(commands[k], blurbs[k]), args);

  CLI11_PARSE(app, argc, argv);

  std::string command = app.get_subcommands().front()->get_name();
  try {
    epinp::RunConfig config = epinp::RunConfig::from_file(args.config_path);
    if (!args.seed.empty()) {
      config.set("mcmc.seed", args.seed);
      config.set("sim.seed", args.seed);
    }
    if (!args.data.empty()) config.set("data", args.data);
    epinp::run_pipeline(command, config, args.out_dir);
    return 0;
  } catch (const epinp::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const epinp::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
}
