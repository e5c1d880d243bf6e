#include "neuralparc/pipeline.hpp"

#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include <iostream>

using namespace neuralparc::pipeline;

int main(int argc, char** argv) {
  CLI::App app{"neuralparc: reach-avoid planning on learned piecewise-affine trajectory models"};
  app.require_subcommand(1);

  CollectConfig collect_cfg;
  auto* collect = app.add_subcommand("collect", "Roll out a built-in system over its parameter box");
  collect->add_option("--system", collect_cfg.system, "drift2d or boat2d")->required();
  collect->add_option("--n", collect_cfg.n, "Number of trajectories");
  collect->add_option("--seed", collect_cfg.seed, "Sampling and disturbance seed");
  collect->add_option("-o,--output", collect_cfg.output, "Dataset file")->required();

  TrainConfig train_cfg;
  auto* train = app.add_subcommand("train", "Fit a ReLU trajectory model");
  train->add_option("--data", train_cfg.data, "Dataset file")->required();
  train->add_option("--widths", train_cfg.widths, "Hidden layer widths, e.g. 8,8,8,8")->delimiter(',');
  train->add_option("--epochs", train_cfg.epochs);
  train->add_option("--lr", train_cfg.learning_rate, "Adam learning rate");
  train->add_option("--batch", train_cfg.batch_size, "Minibatch size (0 = automatic)");
  train->add_option("--seed", train_cfg.seed);
  train->add_option("-o,--output", train_cfg.output, "Weight file")->required();

  BoundsConfig bounds_cfg;
  auto* bounds = app.add_subcommand("bounds", "Estimate modelling-error bounds by sampling the system");
  bounds->add_option("--net", bounds_cfg.net, "Weight file")->required();
  bounds->add_option("--n-sample", bounds_cfg.n_sample);
  bounds->add_option("--substeps", bounds_cfg.substeps, "Checks per interval");
  bounds->add_option("--splits", bounds_cfg.splits, "Cells per K dimension (one value or one per dimension)")
      ->delimiter(',');
  bounds->add_option("--seed", bounds_cfg.seed);
  bounds->add_option("--p0-half-width", bounds_cfg.p0_half_width, "Start box is [-w, w] per workspace axis");
  bounds->add_option("--validate", bounds_cfg.validation_factor, "Fresh-sample multiple for validation (0 = off)");
  bounds->add_option("-o,--output", bounds_cfg.output, "Bounds file")->required();

  SolveConfig solve_cfg;
  auto* solve = app.add_subcommand("solve", "Search the model's regions for reach-avoid initial conditions");
  solve->add_option("--scenario", solve_cfg.scenario)->required();
  solve->add_option("--net", solve_cfg.net)->required();
  solve->add_option("--bounds", solve_cfg.bounds)->required();
  solve->add_option("--budget-regions", solve_cfg.budget_regions);
  solve->add_option("--budget-seconds", solve_cfg.budget_seconds, "0 = unlimited");
  solve->add_option("--samples", solve_cfg.samples_per_region, "Samples drawn per region");
  solve->add_option("-o,--output", solve_cfg.output, "Report directory")->required();

  VerifyConfig verify_cfg;
  auto* verify = app.add_subcommand("verify", "Replay solve samples on the black-box system");
  verify->add_option("--report", verify_cfg.report, "Report directory or solve.json")->required();
  verify->add_option("--rollouts", verify_cfg.rollouts, "Fresh disturbance seeds per sample");
  verify->add_option("--seed", verify_cfg.seed);
  verify->add_option("-o,--output", verify_cfg.output);

  CLI11_PARSE(app, argc, argv);

  if (*collect) return run_command([&] { return cmd_collect(collect_cfg); });
  if (*train) return run_command([&] { return cmd_train(train_cfg); });
  if (*bounds) return run_command([&] { return cmd_bounds(bounds_cfg); });
  if (*solve) return run_command([&] { return cmd_solve(solve_cfg); });
  if (*verify) return run_command([&] { return cmd_verify(verify_cfg); });
  return kInternal;
}
