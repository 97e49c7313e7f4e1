#include "pgrnn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "pgrnn/rng.hpp"

namespace fs = std::filesystem;

namespace pgrnn {

namespace {

nlohmann::json parse_json_file(const std::string& path, bool config_context) {
  std::ifstream in(path);
  if (!in) {
    const std::string msg = "cannot open '" + path + "'";
    if (config_context) throw ConfigError(msg);
    throw SchemaError(msg);
  }
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::string msg = "parse error in '" + path + "': " + e.what();
    if (config_context) throw ConfigError(msg);
    throw SchemaError(msg);
  }
}

std::array<double, 2> range_from(const nlohmann::json& j, const char* name,
                                 std::array<double, 2> fallback) {
  if (!j.contains(name)) return fallback;
  const auto& r = j.at(name);
  if (!r.is_array() || r.size() != 2 || !r.at(0).is_number() || !r.at(1).is_number()) {
    throw ConfigError(std::string("field '") + name + "' must be a numeric [lo, hi] pair");
  }
  std::array<double, 2> out{r.at(0).get<double>(), r.at(1).get<double>()};
  if (out[1] < out[0]) throw ConfigError(std::string("field '") + name + "': hi below lo");
  return out;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const InvalidInputError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

std::string id_kind_prefix(const std::string& id) { return id.substr(0, id.find('-')); }

void write_json_file(const fs::path& path, const nlohmann::json& j, int indent) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot open '" + path.string() + "' for writing");
  if (indent > 0) {
    out << j.dump(indent) << '\n';
  } else {
    out << j.dump() << '\n';
  }
  if (!out) throw SchemaError("write failed for '" + path.string() + "'");
}

Dataset load_split(const OutputPaths& paths, Split split) {
  const fs::path file = paths.dataset(split);
  if (!fs::exists(file)) {
    throw SchemaError("missing dataset '" + file.string() + "'; run the generate subcommand first");
  }
  return load_dataset(file.string());
}

// Torque-balance CSV written next to sweep results for one test sample.
void write_trajectory_csv(const fs::path& path, const Trajectory& model_traj,
                          const Sample& reference, const OdeSystemSpec& spec,
                          const nlohmann::json& metadata) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot open '" + path.string() + "' for writing");
  out << "# " << metadata.dump() << '\n';
  out << "t,phi_true,phidot_true,phi_model,phidot_model,u,dE_S,dE_M,delta\n";
  const auto& ref = reference.traj;
  const auto n = static_cast<Eigen::Index>(ref.grid.n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = ref.grid.time_at(static_cast<std::size_t>(k));
    const double de_s = spec.energy_residual(ref.states.row(k).transpose(),
                                             ref.derivs.row(k).transpose(), ref.inputs[k], t);
    const double de_m =
        spec.energy_residual(model_traj.states.row(k).transpose(),
                             model_traj.derivs.row(k).transpose(), model_traj.inputs[k], t);
    out << format_double(t) << ',' << format_double(ref.states(k, 0)) << ','
        << format_double(ref.states(k, 1)) << ',' << format_double(model_traj.states(k, 0)) << ','
        << format_double(model_traj.states(k, 1)) << ',' << format_double(ref.inputs[k]) << ','
        << format_double(de_s) << ',' << format_double(de_m) << ','
        << format_double(std::abs(de_m - de_s)) << '\n';
  }
  if (!out) throw SchemaError("write failed for '" + path.string() + "'");
}

std::string seeds_to_field(const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i > 0) out += ';';
    out += std::to_string(seeds[i]);
  }
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  return from_json(parse_json_file(path, /*config_context=*/true));
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.raw = j;
  if (!j.contains("system")) throw ConfigError("missing field 'system'");
  cfg.system = system_kind_from_string(j.at("system").get<std::string>());

  auto spec_from = [&](const char* field) {
    if (!j.contains(field)) throw ConfigError(std::string("missing field '") + field + "'");
    try {
      if (cfg.system == SystemKind::Pendulum) {
        return OdeSystemSpec::pendulum(PendulumParams::from_json(j.at(field)));
      }
      return OdeSystemSpec::golf(GolfParams::from_json(j.at(field)));
    } catch (const SchemaError& e) {
      throw ConfigError(std::string("field '") + field + "': " + e.what());
    }
  };
  cfg.truth = spec_from("params_true");
  cfg.phy = spec_from("params_phy");

  if (!j.contains("grid")) throw ConfigError("missing field 'grid'");
  try {
    cfg.grid = TimeGrid::from_json(j.at("grid"));
  } catch (const SchemaError& e) {
    throw ConfigError(std::string("field 'grid': ") + e.what());
  }

  if (j.contains("data")) {
    const auto& jd = j.at("data");
    cfg.data.seed = jd.value("seed", cfg.data.seed);
    if (jd.contains("counts")) {
      const auto& jc = jd.at("counts");
      cfg.data.counts = {jc.value("train", cfg.data.counts[0]),
                         jc.value("val", cfg.data.counts[1]),
                         jc.value("test", cfg.data.counts[2])};
    }
    if (jd.contains("excitation_kinds")) {
      cfg.data.draw.kinds.clear();
      for (const auto& k : jd.at("excitation_kinds")) {
        cfg.data.draw.kinds.push_back(excitation_kind_from_string(k.get<std::string>()));
      }
      if (cfg.data.draw.kinds.empty()) throw ConfigError("'excitation_kinds' must not be empty");
    }
    cfg.data.draw.amplitude_range = range_from(jd, "amplitude_range", cfg.data.draw.amplitude_range);
    cfg.data.draw.frequency_range = range_from(jd, "frequency_range", cfg.data.draw.frequency_range);
    cfg.data.draw.chirp_end_frequency_range =
        range_from(jd, "chirp_end_frequency_range", cfg.data.draw.chirp_end_frequency_range);
    cfg.data.draw.step_time_range = range_from(jd, "step_time_range", cfg.data.draw.step_time_range);
    cfg.data.draw.initial_angle_range =
        range_from(jd, "initial_angle_range", cfg.data.draw.initial_angle_range);
    cfg.data.draw.initial_velocity_range =
        range_from(jd, "initial_velocity_range", cfg.data.draw.initial_velocity_range);
    cfg.data.draw.chirp_sweep_duration =
        jd.value("chirp_sweep_duration", cfg.data.draw.chirp_sweep_duration);
    cfg.data.measured = jd.value("measured", cfg.data.measured);
    cfg.data.noise_sigma = jd.value("noise_sigma", cfg.data.noise_sigma);
    if (jd.contains("train_excitation_filter")) {
      for (const auto& k : jd.at("train_excitation_filter")) {
        cfg.data.train_excitation_filter.push_back(k.get<std::string>());
      }
    }
  }

  if (j.contains("train")) {
    try {
      cfg.train = TrainConfig::from_json(j.at("train"));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("field 'train': ") + e.what());
    }
    // The energy balance runs on the physics-model parameters unless the
    // config opts into the plant parameters (simulation studies know them).
    const std::string energy_params = j.at("train").value("energy_params", "phy");
    if (energy_params == "true") {
      cfg.train.energy_system = cfg.truth;
    } else if (energy_params != "phy") {
      throw ConfigError("field 'train.energy_params': expected \"phy\" or \"true\"");
    }
  }

  if (j.contains("sweep")) {
    const auto& js = j.at("sweep");
    if (js.contains("kinds")) {
      cfg.sweep.kinds.clear();
      for (const auto& k : js.at("kinds")) {
        cfg.sweep.kinds.push_back(model_kind_from_string(k.get<std::string>()));
      }
    }
    if (js.contains("train_counts")) {
      cfg.sweep.train_counts.clear();
      for (const auto& c : js.at("train_counts")) cfg.sweep.train_counts.push_back(c.get<int>());
    }
    if (js.contains("seeds")) {
      cfg.sweep.seeds.clear();
      for (const auto& s : js.at("seeds")) cfg.sweep.seeds.push_back(s.get<std::uint64_t>());
    } else if (js.contains("ensemble")) {
      cfg.sweep.seeds.clear();
      const auto k = js.at("ensemble").get<std::uint64_t>();
      for (std::uint64_t s = 1; s <= k; ++s) cfg.sweep.seeds.push_back(s);
    }
    if (cfg.sweep.seeds.empty()) throw ConfigError("sweep needs at least one seed");
    cfg.sweep.workers = js.value("workers", cfg.sweep.workers);
    cfg.sweep.plot_count = js.value("plot_count", cfg.sweep.plot_count);
    cfg.sweep.plot_sample = js.value("plot_sample", cfg.sweep.plot_sample);
    cfg.sweep.plot_seed = js.value("plot_seed", cfg.sweep.plot_seed);
  }

  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  for (int count : cfg.sweep.train_counts) {
    if (count < 1 || static_cast<std::size_t>(count) > cfg.data.counts[0]) {
      throw ConfigError("sweep train_counts exceed the available training sequences");
    }
  }
  return cfg;
}

std::filesystem::path ExperimentConfig::resolved_output_dir() const {
  const char* root = std::getenv("PGRNN_OUTPUT_ROOT");
  if (root != nullptr && root[0] != '\0') return fs::path(root) / output_dir;
  return fs::path(output_dir);
}

std::filesystem::path OutputPaths::checkpoint(ModelKind kind, int count,
                                              std::uint64_t seed) const {
  char buf[96];
  if (kind == ModelKind::Phy) {
    std::snprintf(buf, sizeof buf, "phy_n%03d.json", count);
  } else {
    std::snprintf(buf, sizeof buf, "%s_n%03d_s%llu.json", to_string(kind).c_str(), count,
                  static_cast<unsigned long long>(seed));
  }
  return checkpoint_dir() / buf;
}

std::filesystem::path OutputPaths::history(ModelKind kind, int count, std::uint64_t seed) const {
  char buf[96];
  if (kind == ModelKind::Phy) {
    std::snprintf(buf, sizeof buf, "phy_n%03d.csv", count);
  } else {
    std::snprintf(buf, sizeof buf, "%s_n%03d_s%llu.csv", to_string(kind).c_str(), count,
                  static_cast<unsigned long long>(seed));
  }
  return history_dir() / buf;
}

std::filesystem::path OutputPaths::plot(ModelKind kind, int count) const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "trajectory_%s_n%03d.csv", to_string(kind).c_str(), count);
  return plot_dir() / buf;
}

GeneratedData build_datasets(const ExperimentConfig& cfg) {
  SequenceDrawSpec draw = cfg.data.draw;
  draw.count = cfg.data.counts[0] + cfg.data.counts[1] + cfg.data.counts[2];
  const DrawnSequences seqs = draw_sequences(draw, cfg.grid, cfg.data.seed);

  GenerateOptions options;
  options.zipped = true;
  options.noise_sigma = cfg.data.noise_sigma;
  options.seed = derive_seed(cfg.data.seed, 0xA01);
  Dataset all = generate_dataset(cfg.truth, seqs.excitations, seqs.x0s, cfg.grid, options);
  if (cfg.data.measured) all = reconstruct_measured(std::move(all));

  auto parts = split_dataset(all, cfg.data.counts, derive_seed(cfg.data.seed, 0xB02));
  GeneratedData out{attach_physics_channel(std::move(parts[0]), cfg.phy),
                    attach_physics_channel(std::move(parts[1]), cfg.phy),
                    attach_physics_channel(std::move(parts[2]), cfg.phy)};
  return out;
}

Dataset select_training_subset(const Dataset& train_ds, const DataConfig& data, int count) {
  if (count < 1) throw InvalidInputError("training subset: count must be positive");
  Dataset subset;
  subset.split = Split::Train;
  subset.system = train_ds.system;
  for (const auto& s : train_ds.samples) {
    if (!data.train_excitation_filter.empty()) {
      const std::string kind = id_kind_prefix(s.id);
      bool keep = false;
      for (const auto& allowed : data.train_excitation_filter) keep = keep || allowed == kind;
      if (!keep) continue;
    }
    subset.samples.push_back(s);
    if (subset.samples.size() == static_cast<std::size_t>(count)) break;
  }
  if (subset.samples.size() < static_cast<std::size_t>(count)) {
    throw InvalidInputError("training subset: only " + std::to_string(subset.samples.size()) +
                            " of " + std::to_string(count) +
                            " requested sequences available after filtering");
  }
  return subset;
}

int cmd_generate(const std::string& config_path) {
  return guarded([&]() -> int {
    const ExperimentConfig cfg = ExperimentConfig::load(config_path);
    const OutputPaths paths{cfg.resolved_output_dir()};
    const GeneratedData data = build_datasets(cfg);

    fs::create_directories(paths.data_dir());
    const std::array<const Dataset*, 3> sets{&data.train, &data.val, &data.test};
    const std::array<Split, 3> splits{Split::Train, Split::Val, Split::Test};
    for (std::size_t i = 0; i < 3; ++i) {
      nlohmann::json j = dataset_to_json(*sets[i]);
      j["metadata"] = {{"config", cfg.raw}};
      write_json_file(paths.dataset(splits[i]), j, 0);
    }

    std::cout << "system " << to_string(cfg.system) << ": wrote " << data.train.samples.size()
              << " train / " << data.val.samples.size() << " val / " << data.test.samples.size()
              << " test sequences (" << cfg.grid.n << " samples each, dt = " << cfg.grid.dt
              << " s) under " << paths.data_dir().string() << '\n';
    return 0;
  });
}

namespace {

// Trains one sweep/train member and writes its checkpoint and history.
void run_member(const ExperimentConfig& cfg, const OutputPaths& paths, const Dataset& train_ds,
                const Dataset& val_ds, ModelKind kind, int count, std::uint64_t seed) {
  nlohmann::json meta = {{"config", cfg.raw},
                         {"kind", to_string(kind)},
                         {"train_count", count},
                         {"seed", seed}};
  if (kind == ModelKind::Phy) {
    const Model baseline = make_model(ModelKind::Phy, 0, cfg.truth.state_dim(), cfg.phy, 0);
    nlohmann::json j = model_to_json(baseline);
    j["metadata"] = std::move(meta);
    write_json_file(paths.checkpoint(kind, count, seed), j, 2);
    write_history_csv(paths.history(kind, count, seed).string(), {},
                      nlohmann::json{{"config", cfg.raw},
                                     {"kind", "phy"},
                                     {"train_count", count},
                                     {"baseline", true}});
    return;
  }

  const Dataset subset = select_training_subset(train_ds, cfg.data, count);
  TrainConfig tc = cfg.train;
  tc.kind = kind;
  tc.seed = seed;
  Model model =
      make_model(kind, tc.hidden_dim, static_cast<int>(subset.state_dim()),
                 needs_physics_model(kind) ? std::optional<OdeSystemSpec>(cfg.phy) : std::nullopt,
                 seed);
  TrainResult result = train(std::move(model), subset, val_ds, tc);
  nlohmann::json j = model_to_json(result.model);
  j["metadata"] = std::move(meta);
  write_json_file(paths.checkpoint(kind, count, seed), j, 2);
  write_history_csv(paths.history(kind, count, seed).string(), result.history,
                    nlohmann::json{{"config", cfg.raw},
                                   {"kind", to_string(kind)},
                                   {"train_count", count},
                                   {"seed", seed}});
}

}  // namespace

int cmd_train(const std::string& config_path, const std::string& kind_name, int count,
              std::uint64_t seed) {
  return guarded([&]() -> int {
    const ExperimentConfig cfg = ExperimentConfig::load(config_path);
    const ModelKind kind = model_kind_from_string(kind_name);
    const OutputPaths paths{cfg.resolved_output_dir()};
    const Dataset train_ds = load_split(paths, Split::Train);
    const Dataset val_ds = load_split(paths, Split::Val);

    fs::create_directories(paths.checkpoint_dir());
    fs::create_directories(paths.history_dir());
    run_member(cfg, paths, train_ds, val_ds, kind, count, seed);
    std::cout << "wrote " << paths.checkpoint(kind, count, seed).string() << '\n';
    return 0;
  });
}

int cmd_sweep(const std::string& config_path) {
  return guarded([&]() -> int {
    const ExperimentConfig cfg = ExperimentConfig::load(config_path);
    const OutputPaths paths{cfg.resolved_output_dir()};
    const Dataset train_ds = load_split(paths, Split::Train);
    const Dataset val_ds = load_split(paths, Split::Val);
    const Dataset test_ds = load_split(paths, Split::Test);
    if (test_ds.samples.empty()) throw InvalidInputError("sweep: empty test split");

    fs::create_directories(paths.checkpoint_dir());
    fs::create_directories(paths.history_dir());
    fs::create_directories(paths.plot_dir());

    // Completed cells are detected by checkpoint presence; only missing
    // members are trained, so a rerun resumes where it stopped.
    struct Task {
      ModelKind kind;
      int count;
      std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (int count : cfg.sweep.train_counts) {
      for (ModelKind kind : cfg.sweep.kinds) {
        if (kind == ModelKind::Phy) {
          if (!fs::exists(paths.checkpoint(kind, count, 0))) tasks.push_back({kind, count, 0});
        } else {
          for (std::uint64_t seed : cfg.sweep.seeds) {
            if (!fs::exists(paths.checkpoint(kind, count, seed))) {
              tasks.push_back({kind, count, seed});
            }
          }
        }
      }
    }

    std::vector<std::string> task_errors(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        const Task& task = tasks[i];
        try {
          run_member(cfg, paths, train_ds, val_ds, task.kind, task.count, task.seed);
        } catch (const std::exception& e) {
          task_errors[i] = e.what();
        }
      }
    };
    const int thread_count =
        std::max(1, std::min<int>(cfg.sweep.workers, static_cast<int>(tasks.size())));
    if (thread_count <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int i = 0; i < thread_count; ++i) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (!task_errors[i].empty()) {
        std::cerr << "cell " << to_string(tasks[i].kind) << " n=" << tasks[i].count
                  << " seed=" << tasks[i].seed << " failed: " << task_errors[i] << '\n';
      }
    }

    bool partial = false;
    std::vector<ResultRow> rows;
    for (int count : cfg.sweep.train_counts) {
      for (ModelKind kind : cfg.sweep.kinds) {
        ResultRow row;
        row.kind = kind;
        row.train_count = count;
        if (kind == ModelKind::Phy) {
          try {
            const Model baseline = load_model(paths.checkpoint(kind, count, 0).string());
            const double err =
                evaluate_sim_error(baseline, test_ds, cfg.train.sim_error_discount);
            row.mean = row.min = row.max = err;
            row.stddev = 0.0;
          } catch (const std::exception& e) {
            row.mean = row.stddev = row.min = row.max =
                std::numeric_limits<double>::quiet_NaN();
            row.note = e.what();
            partial = true;
          }
        } else {
          std::vector<double> values;
          for (std::uint64_t seed : cfg.sweep.seeds) {
            try {
              const Model m = load_model(paths.checkpoint(kind, count, seed).string());
              values.push_back(evaluate_sim_error(m, test_ds, cfg.train.sim_error_discount));
              row.seeds.push_back(seed);
            } catch (const std::exception&) {
              row.note += (row.note.empty() ? "" : " ") + std::string("seed ") +
                          std::to_string(seed) + " missing";
              partial = true;
            }
          }
          if (values.empty()) {
            row.mean = row.stddev = row.min = row.max =
                std::numeric_limits<double>::quiet_NaN();
          } else {
            double sum = 0.0;
            for (double v : values) sum += v;
            row.mean = sum / static_cast<double>(values.size());
            row.min = *std::min_element(values.begin(), values.end());
            row.max = *std::max_element(values.begin(), values.end());
            double ss = 0.0;
            for (double v : values) ss += (v - row.mean) * (v - row.mean);
            row.stddev = values.size() > 1
                             ? std::sqrt(ss / static_cast<double>(values.size() - 1))
                             : 0.0;
          }
        }
        rows.push_back(std::move(row));
      }
    }

    write_results_csv(paths.results(), rows,
                      nlohmann::json{{"config", cfg.raw}, {"seeds", cfg.sweep.seeds}});

    // Rollout and constraint-violation traces for one designated test sample.
    const int plot_count = cfg.sweep.plot_count > 0
                               ? cfg.sweep.plot_count
                               : *std::max_element(cfg.sweep.train_counts.begin(),
                                                   cfg.sweep.train_counts.end());
    const std::uint64_t plot_seed =
        cfg.sweep.plot_seed > 0 ? cfg.sweep.plot_seed : cfg.sweep.seeds.front();
    const Sample* plot_sample = &test_ds.samples.front();
    if (!cfg.sweep.plot_sample.empty()) {
      plot_sample = nullptr;
      for (const auto& s : test_ds.samples) {
        if (s.id == cfg.sweep.plot_sample) plot_sample = &s;
      }
      if (plot_sample == nullptr) {
        throw InvalidInputError("sweep: plot_sample '" + cfg.sweep.plot_sample +
                                "' not in the test split");
      }
    }
    for (ModelKind kind : cfg.sweep.kinds) {
      const auto checkpoint = paths.checkpoint(kind, plot_count, plot_seed);
      try {
        const Model m = load_model(checkpoint.string());
        const Trajectory sim = rollout(m, plot_sample->traj.states.row(0).transpose(),
                                       plot_sample->traj.inputs, plot_sample->traj.grid);
        write_trajectory_csv(paths.plot(kind, plot_count), sim, *plot_sample, cfg.phy,
                             nlohmann::json{{"config", cfg.raw},
                                            {"kind", to_string(kind)},
                                            {"train_count", plot_count},
                                            {"seed", plot_seed},
                                            {"sample", plot_sample->id}});
      } catch (const std::exception& e) {
        std::cerr << "plot for " << to_string(kind) << " skipped: " << e.what() << '\n';
      }
    }

    std::cout << "wrote " << paths.results().string() << " (" << rows.size() << " rows)\n";
    return partial ? 5 : 0;
  });
}

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows,
                       const nlohmann::json& metadata) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot open '" + path.string() + "' for writing");
  out << "# " << metadata.dump() << '\n';
  out << "kind,train_count,mean_E_sim,std_E_sim,min_E_sim,max_E_sim,seeds,note\n";
  for (const auto& row : rows) {
    out << to_string(row.kind) << ',' << row.train_count << ',' << format_double(row.mean) << ','
        << format_double(row.stddev) << ',' << format_double(row.min) << ','
        << format_double(row.max) << ',' << seeds_to_field(row.seeds) << ',' << row.note << '\n';
  }
  if (!out) throw SchemaError("write failed for '" + path.string() + "'");
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  std::vector<ResultRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("kind,", 0) == 0) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    while (fields.size() < 8) fields.emplace_back();
    ResultRow row;
    row.kind = model_kind_from_string(fields[0]);
    row.train_count = std::stoi(fields[1]);
    row.mean = std::strtod(fields[2].c_str(), nullptr);
    row.stddev = std::strtod(fields[3].c_str(), nullptr);
    row.min = std::strtod(fields[4].c_str(), nullptr);
    row.max = std::strtod(fields[5].c_str(), nullptr);
    if (fields[6] != "-" && !fields[6].empty()) {
      std::stringstream seeds(fields[6]);
      std::string s;
      while (std::getline(seeds, s, ';')) row.seeds.push_back(std::stoull(s));
    }
    row.note = fields[7];
    rows.push_back(std::move(row));
  }
  return rows;
}

int cmd_report(const std::string& results_dir) {
  return guarded([&]() -> int {
    const fs::path file = fs::path(results_dir) / "results.csv";
    if (!fs::exists(file)) {
      throw SchemaError("no results.csv under '" + results_dir + "'");
    }
    const std::vector<ResultRow> rows = read_results_csv(file);
    if (rows.empty()) throw SchemaError("results table is empty");

    std::map<int, std::map<std::string, double>> table;
    for (const auto& row : rows) table[row.train_count][to_string(row.kind)] = row.mean;

    auto reduction = [](const std::map<std::string, double>& cells, const std::string& from,
                        const std::string& to) -> std::string {
      const auto a = cells.find(from);
      const auto b = cells.find(to);
      if (a == cells.end() || b == cells.end() || !std::isfinite(a->second) ||
          !std::isfinite(b->second) || a->second <= 0.0) {
        return "n/a";
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.1f%%", (a->second - b->second) / a->second * 100.0);
      return buf;
    };

    std::cout << "simulation-error reduction relative to the RNN and physics baselines\n";
    for (const auto& [count, cells] : table) {
      std::cout << "  " << count << " training sequences:"
                << "  pgrnn vs rnn " << reduction(cells, "rnn", "pgrnn") << ", vs phy "
                << reduction(cells, "phy", "pgrnn") << ";  mopgrnn vs rnn "
                << reduction(cells, "rnn", "mopgrnn") << ", vs phy "
                << reduction(cells, "phy", "mopgrnn") << '\n';
    }
    return 0;
  });
}

int cmd_rollout(const std::string& config_path, const std::string& checkpoint_path,
                const std::string& sample_id, const std::string& out_path) {
  return guarded([&]() -> int {
    const ExperimentConfig cfg = ExperimentConfig::load(config_path);
    const OutputPaths paths{cfg.resolved_output_dir()};
    const Dataset test_ds = load_split(paths, Split::Test);
    if (test_ds.samples.empty()) throw SchemaError("rollout: empty test split");

    const Sample* sample = &test_ds.samples.front();
    if (!sample_id.empty()) {
      sample = nullptr;
      for (const auto& s : test_ds.samples) {
        if (s.id == sample_id) sample = &s;
      }
      if (sample == nullptr) {
        throw SchemaError("rollout: sample '" + sample_id + "' not in the test split");
      }
    }

    const Model m = load_model(checkpoint_path);
    const Trajectory sim = rollout(m, sample->traj.states.row(0).transpose(),
                                   sample->traj.inputs, sample->traj.grid);
    write_trajectory_csv(out_path, sim, *sample, cfg.phy,
                         nlohmann::json{{"config", cfg.raw},
                                        {"checkpoint", checkpoint_path},
                                        {"sample", sample->id}});
    std::cout << "wrote " << out_path << '\n';
    return 0;
  });
}

}  // namespace pgrnn
