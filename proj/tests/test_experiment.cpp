#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pgrnn/experiment.hpp"

using namespace pgrnn;
namespace fs = std::filesystem;

namespace {

struct TempTree {
  fs::path root;
  TempTree() {
    root = fs::temp_directory_path() /
           ("pgrnn_exp_" + std::to_string(static_cast<unsigned>(std::rand())));
    fs::create_directories(root);
    setenv("PGRNN_OUTPUT_ROOT", root.c_str(), 1);
  }
  ~TempTree() {
    unsetenv("PGRNN_OUTPUT_ROOT");
    std::error_code ec;
    fs::remove_all(root, ec);
  }
};

nlohmann::json tiny_config() {
  return {{"system", "pendulum"},
          {"params_true", {{"m", 50.0}, {"l", 0.045}, {"d", 2.1}, {"g", 9.81}}},
          {"params_phy", {{"m", 50.0}, {"l", 0.05}, {"d", 2.0}, {"g", 9.81}}},
          {"grid", {{"t0", 0.0}, {"dt", 0.01}, {"n", 41}}},
          {"data",
           {{"seed", 3},
            {"counts", {{"train", 3}, {"val", 1}, {"test", 1}}},
            {"amplitude_range", {8.0, 16.0}},
            {"frequency_range", {0.6, 1.4}}}},
          {"train",
           {{"kind", "pgrnn"},
            {"hidden_dim", 4},
            {"epochs", 2},
            {"tbptt_window", 50},
            {"learning_rate", 0.005},
            {"lambda", 0.5},
            {"rho", 0.95},
            {"epsilon", 1e-8},
            {"seed", 1}}},
          {"sweep",
           {{"kinds", {"phy", "rnn", "pgrnn", "mopgrnn"}},
            {"train_counts", {2, 3}},
            {"seeds", {1, 2}},
            {"workers", 2}}},
          {"output_dir", "out"}};
}

std::string write_config(const TempTree& tree, const nlohmann::json& j) {
  const fs::path path = tree.root / "config.json";
  std::ofstream out(path);
  out << j.dump(2);
  return path.string();
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config loading diagnostics") {
  TempTree tree;

  SUBCASE("malformed JSON fails with exit code 2") {
    const fs::path bad = tree.root / "bad.json";
    std::ofstream(bad) << "{ not json";
    CHECK(cmd_generate(bad.string()) == 2);
  }

  SUBCASE("missing fields are named") {
    nlohmann::json j = tiny_config();
    j.erase("params_phy");
    try {
      ExperimentConfig::from_json(j);
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("params_phy") != std::string::npos);
    }
  }

  SUBCASE("sweep counts beyond the training pool are rejected") {
    nlohmann::json j = tiny_config();
    j["sweep"]["train_counts"] = {99};
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  }
}

TEST_CASE("generate writes deterministic split files") {
  TempTree tree;
  const std::string cfg_path = write_config(tree, tiny_config());
  REQUIRE(cmd_generate(cfg_path) == 0);

  const fs::path data_dir = tree.root / "out" / "data";
  REQUIRE(fs::exists(data_dir / "train.json"));
  const Dataset train_ds = load_dataset((data_dir / "train.json").string());
  const Dataset val_ds = load_dataset((data_dir / "val.json").string());
  const Dataset test_ds = load_dataset((data_dir / "test.json").string());
  CHECK(train_ds.samples.size() == 3);
  CHECK(val_ds.samples.size() == 1);
  CHECK(test_ds.samples.size() == 1);
  for (const auto& s : train_ds.samples) CHECK(s.phys_derivs.has_value());

  const std::string first = read_bytes(data_dir / "train.json");
  REQUIRE(cmd_generate(cfg_path) == 0);
  CHECK(read_bytes(data_dir / "train.json") == first);
}

TEST_CASE("train subcommand per kind") {
  TempTree tree;
  const std::string cfg_path = write_config(tree, tiny_config());
  REQUIRE(cmd_generate(cfg_path) == 0);
  const OutputPaths paths{tree.root / "out"};

  SUBCASE("phy emits a baseline marker checkpoint without training") {
    REQUIRE(cmd_train(cfg_path, "phy", 2, 1) == 0);
    const Model baseline = load_model(paths.checkpoint(ModelKind::Phy, 2, 1).string());
    CHECK(baseline.kind == ModelKind::Phy);
    CHECK(read_history_csv(paths.history(ModelKind::Phy, 2, 1).string()).empty());
  }

  SUBCASE("mopgrnn histories carry a live energy column") {
    REQUIRE(cmd_train(cfg_path, "mopgrnn", 2, 1) == 0);
    const TrainHistory history =
        read_history_csv(paths.history(ModelKind::Mopgrnn, 2, 1).string());
    REQUIRE(history.size() == 2);
    bool energy_live = false;
    for (const auto& rec : history) energy_live = energy_live || rec.loss_energy > 0.0;
    CHECK(energy_live);
    CHECK(history.front().c_energy > 0.0);
  }

  SUBCASE("identical invocations produce byte-identical artifacts") {
    REQUIRE(cmd_train(cfg_path, "pgrnn", 2, 7) == 0);
    const std::string checkpoint1 = read_bytes(paths.checkpoint(ModelKind::Pgrnn, 2, 7));
    const std::string history1 = read_bytes(paths.history(ModelKind::Pgrnn, 2, 7));
    REQUIRE(cmd_train(cfg_path, "pgrnn", 2, 7) == 0);
    CHECK(read_bytes(paths.checkpoint(ModelKind::Pgrnn, 2, 7)) == checkpoint1);
    CHECK(read_bytes(paths.history(ModelKind::Pgrnn, 2, 7)) == history1);
  }

  SUBCASE("unknown kinds are config errors") {
    CHECK(cmd_train(cfg_path, "lstm", 2, 1) == 2);
  }

  SUBCASE("missing datasets are data errors") {
    fs::remove_all(tree.root / "out" / "data");
    CHECK(cmd_train(cfg_path, "pgrnn", 2, 1) == 3);
  }
}

TEST_CASE("sweep produces the results table, plots, and resumes cleanly") {
  TempTree tree;
  const std::string cfg_path = write_config(tree, tiny_config());
  REQUIRE(cmd_generate(cfg_path) == 0);
  REQUIRE(cmd_sweep(cfg_path) == 0);

  const OutputPaths paths{tree.root / "out"};
  const auto rows = read_results_csv(paths.results());
  CHECK(rows.size() == 8);  // 2 counts x 4 kinds

  double phy_mean = -1.0;
  for (const auto& row : rows) {
    if (row.kind == ModelKind::Phy) {
      if (phy_mean < 0.0) {
        phy_mean = row.mean;
      } else {
        CHECK(row.mean == phy_mean);  // the baseline never trains
      }
      CHECK(row.stddev == 0.0);
    } else {
      CHECK(row.seeds.size() == 2);
      CHECK(std::isfinite(row.mean));
      CHECK(row.min <= row.max);
    }
  }

  // Plot files exist for the largest count and the delta column stays
  // nonnegative.
  for (ModelKind kind : {ModelKind::Phy, ModelKind::Rnn, ModelKind::Pgrnn, ModelKind::Mopgrnn}) {
    const fs::path plot = paths.plot(kind, 3);
    REQUIRE(fs::exists(plot));
    std::ifstream in(plot);
    std::string line;
    std::getline(in, line);  // metadata
    std::getline(in, line);  // header
    int rows_seen = 0;
    while (std::getline(in, line)) {
      const auto last_comma = line.rfind(',');
      const double delta = std::strtod(line.substr(last_comma + 1).c_str(), nullptr);
      CHECK(delta >= 0.0);
      ++rows_seen;
    }
    CHECK(rows_seen == 41);
  }

  // A rerun retrains nothing and reproduces the table byte for byte.
  const std::string table = read_bytes(paths.results());
  const auto checkpoint_time = fs::last_write_time(paths.checkpoint(ModelKind::Pgrnn, 3, 1));
  REQUIRE(cmd_sweep(cfg_path) == 0);
  CHECK(read_bytes(paths.results()) == table);
  CHECK(fs::last_write_time(paths.checkpoint(ModelKind::Pgrnn, 3, 1)) == checkpoint_time);
}

TEST_CASE("report summarizes reductions") {
  TempTree tree;
  const fs::path results_dir = tree.root / "results";
  fs::create_directories(results_dir);

  SUBCASE("the 50 percent arithmetic example") {
    std::vector<ResultRow> rows;
    ResultRow phy{ModelKind::Phy, 3, 2.0, 0.0, 2.0, 2.0, {}, ""};
    ResultRow rnn{ModelKind::Rnn, 3, 1.0, 0.0, 1.0, 1.0, {1}, ""};
    ResultRow pgrnn{ModelKind::Pgrnn, 3, 0.5, 0.0, 0.5, 0.5, {1}, ""};
    rows = {phy, rnn, pgrnn};
    write_results_csv(results_dir / "results.csv", rows, nlohmann::json::object());

    std::stringstream captured;
    auto* old = std::cout.rdbuf(captured.rdbuf());
    const int rc = cmd_report(results_dir.string());
    std::cout.rdbuf(old);
    CHECK(rc == 0);
    const std::string text = captured.str();
    CHECK(text.find("pgrnn vs rnn 50.0%") != std::string::npos);
    CHECK(text.find("mopgrnn vs rnn n/a") != std::string::npos);  // missing cell
  }

  SUBCASE("an empty results directory is an error") {
    CHECK(cmd_report(results_dir.string()) == 3);
  }
}

TEST_CASE("rollout subcommand writes the trajectory CSV") {
  TempTree tree;
  const std::string cfg_path = write_config(tree, tiny_config());
  REQUIRE(cmd_generate(cfg_path) == 0);
  REQUIRE(cmd_train(cfg_path, "pgrnn", 2, 1) == 0);
  const OutputPaths paths{tree.root / "out"};

  const fs::path out_csv = tree.root / "traj.csv";
  REQUIRE(cmd_rollout(cfg_path, paths.checkpoint(ModelKind::Pgrnn, 2, 1).string(), "",
                      out_csv.string()) == 0);
  std::ifstream in(out_csv);
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("# {", 0) == 0);
  std::getline(in, line);
  CHECK(line == "t,phi_true,phidot_true,phi_model,phidot_model,u,dE_S,dE_M,delta");
}
