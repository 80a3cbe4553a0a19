#include <iostream>

#include <CLI11.hpp>

#include "mobfair/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mobility-driven case forecasting with a fairness audit"};
  app.set_version_flag("--version", MOBFAIR_VERSION);
  app.require_subcommand(1);

  mobfair::CommandOptions opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "Run configuration file")->required();
    sub->add_option("--seed", opts.seed, "Override the configured seed");
    sub->add_option("--workers", opts.workers, "Worker threads for the backtest");
    sub->add_option("--output-dir", opts.output_dir, "Override the output directory");
  };
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  auto* backtest = app.add_subcommand("backtest", "Run the rolling-origin backtest");
  auto* audit = app.add_subcommand("audit", "Correlate forecast error with demographics");
  for (auto* sub : {synth, backtest, audit}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : mobfair::kExitConfig;
  }

  if (synth->parsed()) return mobfair::cmd_synth(opts, std::cout);
  if (backtest->parsed()) return mobfair::cmd_backtest(opts, std::cout);
  return mobfair::cmd_audit(opts, std::cout);
}
