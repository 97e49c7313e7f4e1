#include <CLI11.hpp>
#include <string>

#include "pgrnn/experiment.hpp"

// Config-driven front end. Flags select the config file, subcommand and
// verbosity only; every experiment value lives in the config so that results
// stay traceable to one file.
int main(int argc, char** argv) {
  CLI::App app{"physics-guided recurrent system identification"};
  app.require_subcommand(1);

  std::string config_path;
  std::string kind = "pgrnn";
  int count = 1;
  std::uint64_t seed = 1;
  std::string results_dir;
  std::string checkpoint_path;
  std::string sample_id;
  std::string out_path = "rollout.csv";

  auto* generate = app.add_subcommand("generate", "simulate and write the datasets");
  generate->add_option("-c,--config", config_path, "experiment config (JSON)")->required();

  auto* train = app.add_subcommand("train", "train one model");
  train->add_option("-c,--config", config_path, "experiment config (JSON)")->required();
  train->add_option("-k,--kind", kind, "model kind: phy|rnn|pgrnn|mopgrnn")->required();
  train->add_option("-n,--count", count, "number of training sequences")->required();
  train->add_option("-s,--seed", seed, "initialization/shuffle seed")->required();

  auto* sweep = app.add_subcommand("sweep", "run the full model/count comparison");
  sweep->add_option("-c,--config", config_path, "experiment config (JSON)")->required();

  auto* report = app.add_subcommand("report", "summarize a sweep's results table");
  report->add_option("-r,--results", results_dir, "directory holding results.csv")->required();

  auto* roll = app.add_subcommand("rollout", "free-run a checkpoint on a test sample");
  roll->add_option("-c,--config", config_path, "experiment config (JSON)")->required();
  roll->add_option("-m,--checkpoint", checkpoint_path, "model checkpoint (JSON)")->required();
  roll->add_option("--sample", sample_id, "test sample id (default: first)");
  roll->add_option("-o,--out", out_path, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  if (generate->parsed()) return pgrnn::cmd_generate(config_path);
  if (train->parsed()) return pgrnn::cmd_train(config_path, kind, count, seed);
  if (sweep->parsed()) return pgrnn::cmd_sweep(config_path);
  if (report->parsed()) return pgrnn::cmd_report(results_dir);
  if (roll->parsed()) return pgrnn::cmd_rollout(config_path, checkpoint_path, sample_id, out_path);
  return 1;
}
