// monoball: track, simulate, eval, sweep.

#include <iostream>

#include <CLI11.hpp>

#include "monoball/commands.hpp"

int main(int argc, char** argv) {
  using namespace monoball;

  CLI::App app{"Ball trajectory reconstruction from a single broadcast camera"};
  app.require_subcommand(1);

  TrackOptions track;
  auto* track_cmd = app.add_subcommand("track", "Stream frames through the fixed-lag filter");
  track_cmd->add_option("input", track.input, "Frame stream (JSONL, '-' for stdin)")->capture_default_str();
  track_cmd->add_option("--output,-o", track.output, "Trajectory output ('-' for stdout)")->capture_default_str();
  track_cmd->add_option("--config", track.config, "Config file (JSON)");
  track_cmd->add_option("--lag", track.lag, "Output lag in frames");
  track_cmd->add_option("--beam", track.beam, "Beam width")->check(CLI::PositiveNumber);

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic clip with ground truth");
  sim_cmd->add_option("--config", sim.config, "Config file (JSON)");
  sim_cmd->add_option("--seed", sim.seed, "Random seed");
  sim_cmd->add_option("--output,-o", sim.output, "Frame stream output ('-' for stdout)")->capture_default_str();
  sim_cmd->add_option("--truth", sim.truth, "Ground-truth sidecar")->capture_default_str();

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score a trajectory against ground truth");
  eval_cmd->add_option("pred", eval.pred, "Trajectory file")->required();
  eval_cmd->add_option("truth", eval.truth, "Ground-truth sidecar")->required();
  eval_cmd->add_option("--window", eval.window, "Event tolerance in frames")->capture_default_str();

  SweepOptions sweep;
  std::string lags = "1,10,25,50";
  auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate the filter at several lags");
  sweep_cmd->add_option("input", sweep.input, "Frame stream")->required();
  sweep_cmd->add_option("truth", sweep.truth, "Ground-truth sidecar")->required();
  sweep_cmd->add_option("--lags", lags, "Comma-separated lags")->capture_default_str();
  sweep_cmd->add_option("--config", sweep.config, "Config file (JSON)");
  sweep_cmd->add_option("--beam", sweep.beam, "Beam width")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--window", sweep.window, "Event tolerance in frames")->capture_default_str();
  sweep_cmd->add_option("--output,-o", sweep.output, "CSV output");

  CLI11_PARSE(app, argc, argv);

  if (*track_cmd) return cmd_track(track, std::cerr);
  if (*sim_cmd) return cmd_simulate(sim, std::cerr);
  if (*eval_cmd) return cmd_eval(eval, std::cout, std::cerr);
  try {
    sweep.lags = parse_lag_list(lags);
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return kExitBadInput;
  }
  return cmd_sweep(sweep, std::cout, std::cerr);
}
