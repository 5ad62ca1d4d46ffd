// splinecos: simulate, fit, predict and diagnose from the command line.
//
// Exit codes: 0 success, 1 validation error, 2 runtime error.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "splinecos/commands.hpp"
#include "splinecos/error.hpp"

namespace {

int fail(int code, const std::string& message) {
  std::cerr << "splinecos: error: " << message << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace splinecos;
  CLI::App app{"Spatial latent Gaussian models with change of support"};
  app.set_version_flag("--version", SPLINECOS_VERSION);
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a simulated dataset");
  simulate->add_option("scenario", sim.scenario,
                       "regular-grid, irregular-grid, sparse, overlapping or full-binary")
      ->required();
  simulate->add_option("--config", sim.config, "JSON file of scenario parameters");
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--out", sim.out, "Output directory")->capture_default_str();

  FitArgs fit;
  std::string fit_config;
  auto* fit_cmd = app.add_subcommand("fit", "Run the Gibbs sampler");
  fit_cmd->add_option("config_file", fit_config, "Run configuration (JSON)");
  fit_cmd->add_option("--config", fit_config, "Run configuration (JSON)");
  fit_cmd->add_option("--seed", fit.seed, "Override the sampler seed");
  fit_cmd->add_option("--threads", fit.threads, "Chains run concurrently")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--out", fit.out, "Override the output directory");

  PredictArgs pred;
  auto* predict = app.add_subcommand("predict", "Summarise posterior predictions on target supports");
  predict->add_option("--config", pred.config, "Run configuration the chains were fitted with")->required();
  predict->add_option("--chains", pred.chains, "Chain store directory")->required();
  predict->add_option("--grid", pred.grids, "Target grid x0,y0,dx,dy,ncols,nrows (repeatable)");
  predict->add_option("--rects", pred.rects, "Observation-format file of target supports");
  predict->add_option("--field", pred.field, "eta, W, LS or V[<id>]")->capture_default_str();
  predict->add_option("--truth", pred.truth, "True values (.asc raster or vector file)");
  predict->add_option("--source", pred.source, "Response id for success probabilities");
  predict->add_option("--threads", pred.threads, "Worker threads")->check(CLI::PositiveNumber);
  predict->add_option("--out", pred.out, "Output directory")->capture_default_str();

  DiagnoseArgs diag;
  auto* diagnose = app.add_subcommand("diagnose", "Effective sample sizes and split R-hat");
  diagnose->add_option("chains", diag.chains, "Chain store directory")->required();
  diagnose->add_option("--out", diag.out, "Output directory (default: the chain store)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*simulate) {
      simulate_command(sim, std::cout);
    } else if (*fit_cmd) {
      if (fit_config.empty()) return fail(1, "fit needs a configuration file");
      fit.config = fit_config;
      fit_command(fit, std::cout);
    } else if (*predict) {
      predict_command(pred, std::cout);
    } else if (*diagnose) {
      diagnose_command(diag, std::cout);
    }
  } catch (const ValidationError& e) {
    return fail(1, e.what());
  } catch (const std::exception& e) {
    return fail(2, e.what());
  }
  return 0;
}
