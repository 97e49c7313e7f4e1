#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pgrnn/datagen.hpp"
#include "pgrnn/training.hpp"

namespace pgrnn {

// Sequence generation settings: how many sequences per split and the ranges
// the excitations and initial states are drawn from.
struct DataConfig {
  std::uint64_t seed = 1;
  std::array<std::size_t, 3> counts{15, 3, 4};  // train, val, test
  SequenceDrawSpec draw;
  bool measured = false;     // rebuild velocity/acceleration by differentiation
  double noise_sigma = 0.0;  // additive noise on recorded states
  std::vector<std::string> train_excitation_filter;  // empty keeps all kinds
};

struct SweepConfig {
  std::vector<ModelKind> kinds{ModelKind::Phy, ModelKind::Rnn, ModelKind::Pgrnn,
                               ModelKind::Mopgrnn};
  std::vector<int> train_counts{3, 9, 15};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4};
  int workers = 1;
  int plot_count = 0;          // 0 selects the largest training count
  std::string plot_sample;     // empty selects the first test sample
  std::uint64_t plot_seed = 0;  // 0 selects the first sweep seed
};

// One reproducible experiment, read from a single JSON file. No value in any
// output is ever taken from a command-line flag.
struct ExperimentConfig {
  SystemKind system = SystemKind::Pendulum;
  OdeSystemSpec truth = OdeSystemSpec::pendulum(pendulum_reference_params());
  OdeSystemSpec phy = OdeSystemSpec::pendulum(pendulum_model_params());
  TimeGrid grid;
  DataConfig data;
  TrainConfig train;
  SweepConfig sweep;
  std::string output_dir = "out";
  nlohmann::json raw;  // the file as given, embedded in every output

  static ExperimentConfig load(const std::string& path);
  static ExperimentConfig from_json(const nlohmann::json& j);

  // PGRNN_OUTPUT_ROOT, when set, re-roots relative output directories.
  std::filesystem::path resolved_output_dir() const;
};

// Output layout under the experiment's output directory.
struct OutputPaths {
  std::filesystem::path root;

  std::filesystem::path data_dir() const { return root / "data"; }
  std::filesystem::path dataset(Split split) const {
    return data_dir() / (to_string(split) + ".json");
  }
  std::filesystem::path checkpoint_dir() const { return root / "checkpoints"; }
  std::filesystem::path history_dir() const { return root / "history"; }
  std::filesystem::path plot_dir() const { return root / "plots"; }
  std::filesystem::path checkpoint(ModelKind kind, int count, std::uint64_t seed) const;
  std::filesystem::path history(ModelKind kind, int count, std::uint64_t seed) const;
  std::filesystem::path plot(ModelKind kind, int count) const;
  std::filesystem::path results() const { return root / "results.csv"; }
};

struct GeneratedData {
  Dataset train, val, test;
};

// Pure generation path shared by cmd_generate and the tests: draw, simulate,
// optionally reconstruct measured signals, split, attach the physics channel.
GeneratedData build_datasets(const ExperimentConfig& cfg);

// Training samples for one run: the filtered first `count` train sequences.
Dataset select_training_subset(const Dataset& train_ds, const DataConfig& data, int count);

// Subcommand entry points; return process exit codes (0 ok, 2 config error,
// 3 data error, 4 training divergence, 5 partial sweep failure).
int cmd_generate(const std::string& config_path);
int cmd_train(const std::string& config_path, const std::string& kind, int count,
              std::uint64_t seed);
int cmd_sweep(const std::string& config_path);
int cmd_report(const std::string& results_dir);
int cmd_rollout(const std::string& config_path, const std::string& checkpoint_path,
                const std::string& sample_id, const std::string& out_path);

// One results.csv row.
struct ResultRow {
  ModelKind kind = ModelKind::Phy;
  int train_count = 0;
  double mean = 0.0, stddev = 0.0, min = 0.0, max = 0.0;
  std::vector<std::uint64_t> seeds;
  std::string note;  // failure annotations
};

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows,
                       const nlohmann::json& metadata);
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

}  // namespace pgrnn
