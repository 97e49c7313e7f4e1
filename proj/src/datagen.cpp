#include "pgrnn/datagen.hpp"

#include <fstream>
#include <numeric>

#include "pgrnn/rng.hpp"

namespace pgrnn {

namespace {

constexpr int kSchemaVersion = 1;

std::string pair_id(ExcitationSignal::Kind kind, std::size_t exc_index, std::size_t x0_index,
                    bool zipped) {
  char buf[64];
  if (zipped) {
    std::snprintf(buf, sizeof buf, "%s-%03zu", to_string(kind).c_str(), exc_index);
  } else {
    std::snprintf(buf, sizeof buf, "%s-e%03zu-x%03zu", to_string(kind).c_str(), exc_index,
                  x0_index);
  }
  return buf;
}

Eigen::MatrixXd matrix_from_columns(const nlohmann::json& j, const char* field,
                                    Eigen::Index expected_cols, Eigen::Index expected_rows) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != expected_cols) {
    throw SchemaError(std::string("dataset: field '") + field + "' must hold " +
                      std::to_string(expected_cols) + " columns");
  }
  Eigen::MatrixXd m(expected_rows, expected_cols);
  for (Eigen::Index c = 0; c < expected_cols; ++c) {
    const auto& col = j.at(static_cast<std::size_t>(c));
    if (!col.is_array() || static_cast<Eigen::Index>(col.size()) != expected_rows) {
      throw SchemaError(std::string("dataset: column length mismatch in '") + field + "'");
    }
    for (Eigen::Index r = 0; r < expected_rows; ++r) {
      m(r, c) = col.at(static_cast<std::size_t>(r)).get<double>();
    }
  }
  return m;
}

nlohmann::json columns_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json cols = nlohmann::json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    nlohmann::json col = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) col.push_back(m(r, c));
    cols.push_back(std::move(col));
  }
  return cols;
}

}  // namespace

std::string to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw SchemaError("unknown split '" + name + "'");
}

Dataset generate_dataset(const OdeSystemSpec& spec,
                         const std::vector<ExcitationSignal>& excitations,
                         const std::vector<StateVec>& x0s, const TimeGrid& grid,
                         const GenerateOptions& options) {
  if (excitations.empty() || x0s.empty()) {
    throw InvalidInputError("generate_dataset: need at least one excitation and one x0");
  }
  if (options.zipped && excitations.size() != x0s.size()) {
    throw InvalidInputError("generate_dataset: zipped pairing needs equal-length lists");
  }

  Dataset ds;
  ds.system = to_string(spec.kind());

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (options.zipped) {
    for (std::size_t i = 0; i < excitations.size(); ++i) pairs.emplace_back(i, i);
  } else {
    for (std::size_t e = 0; e < excitations.size(); ++e) {
      for (std::size_t x = 0; x < x0s.size(); ++x) pairs.emplace_back(e, x);
    }
  }

  std::size_t sample_index = 0;
  for (const auto& [e, x] : pairs) {
    Sample s;
    s.id = pair_id(excitations[e].kind, e, x, options.zipped);
    try {
      s.traj = simulate(spec, x0s[x], excitations[e], grid);
    } catch (const DivergenceError& err) {
      throw DivergenceError("generate_dataset: simulation diverged for sample '" + s.id + "'",
                            err.time(), err.step());
    }
    if (options.noise_sigma > 0.0) {
      Rng noise(derive_seed(options.seed, sample_index));
      for (Eigen::Index r = 0; r < s.traj.states.rows(); ++r) {
        for (Eigen::Index c = 0; c < s.traj.states.cols(); ++c) {
          s.traj.states(r, c) += options.noise_sigma * noise.normal();
        }
      }
    }
    ds.samples.push_back(std::move(s));
    ++sample_index;
  }
  return ds;
}

Dataset attach_physics_channel(Dataset ds, const OdeSystemSpec& phy) {
  if (!ds.samples.empty() && ds.state_dim() != phy.state_dim()) {
    throw InvalidInputError("attach_physics_channel: state dimension mismatch");
  }
  for (auto& s : ds.samples) {
    const auto n = static_cast<Eigen::Index>(s.traj.grid.n);
    Eigen::MatrixXd channel(n, phy.state_dim());
    for (Eigen::Index k = 0; k < n; ++k) {
      channel.row(k) = phy.deriv(s.traj.states.row(k).transpose(), s.traj.inputs[k],
                                 s.traj.grid.time_at(static_cast<std::size_t>(k)));
    }
    s.phys_derivs = std::move(channel);
  }
  return ds;
}

Dataset reconstruct_measured(Dataset ds) {
  for (auto& s : ds.samples) {
    const Eigen::VectorXd phi = s.traj.states.col(0);
    const Eigen::VectorXd phidot = numerical_differentiate(phi, s.traj.grid.dt);
    const Eigen::VectorXd acc = numerical_differentiate(phidot, s.traj.grid.dt);
    s.traj.states.col(1) = phidot;
    s.traj.derivs.col(0) = phidot;
    s.traj.derivs.col(1) = acc;
    s.phys_derivs.reset();
  }
  return ds;
}

std::array<Dataset, 3> split_dataset(const Dataset& ds, const std::array<std::size_t, 3>& counts,
                                     std::uint64_t seed) {
  const std::size_t total = counts[0] + counts[1] + counts[2];
  if (total > ds.samples.size()) {
    throw InvalidInputError("split_dataset: requested more samples than available");
  }

  std::vector<std::size_t> order(ds.samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  std::array<Dataset, 3> out;
  const std::array<Split, 3> tags{Split::Train, Split::Val, Split::Test};
  std::size_t cursor = 0;
  for (std::size_t part = 0; part < 3; ++part) {
    out[part].split = tags[part];
    out[part].system = ds.system;
    for (std::size_t i = 0; i < counts[part]; ++i) {
      out[part].samples.push_back(ds.samples[order[cursor++]]);
    }
  }
  return out;
}

nlohmann::json dataset_to_json(const Dataset& ds) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["system"] = ds.system;
  j["split"] = to_string(ds.split);
  j["state_dim"] = ds.samples.empty() ? 0 : static_cast<int>(ds.state_dim());
  double t0 = 0.0, dt = 0.0;
  if (!ds.samples.empty()) {
    t0 = ds.samples.front().traj.grid.t0;
    dt = ds.samples.front().traj.grid.dt;
    for (const auto& s : ds.samples) {
      if (s.traj.grid.t0 != t0 || s.traj.grid.dt != dt) {
        throw InvalidInputError("dataset_to_json: samples must share t0 and dt");
      }
    }
  }
  j["t0"] = t0;
  j["dt"] = dt;

  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : ds.samples) {
    nlohmann::json js;
    js["id"] = s.id;
    js["states"] = columns_to_json(s.traj.states);
    js["derivs"] = columns_to_json(s.traj.derivs);
    nlohmann::json inputs = nlohmann::json::array();
    for (Eigen::Index k = 0; k < s.traj.inputs.size(); ++k) inputs.push_back(s.traj.inputs[k]);
    js["inputs"] = std::move(inputs);
    if (s.phys_derivs) js["phys_derivs"] = columns_to_json(*s.phys_derivs);
    samples.push_back(std::move(js));
  }
  j["samples"] = std::move(samples);
  return j;
}

Dataset dataset_from_json(const nlohmann::json& j) {
  if (j.value("schema_version", -1) != kSchemaVersion) {
    throw SchemaError("dataset: unsupported schema_version");
  }
  Dataset ds;
  ds.system = j.value("system", "");
  ds.split = split_from_string(j.value("split", "train"));
  const auto state_dim = static_cast<Eigen::Index>(j.value("state_dim", 0));
  const double t0 = j.value("t0", 0.0);
  const double dt = j.value("dt", 0.0);

  if (!j.contains("samples") || !j.at("samples").is_array()) {
    throw SchemaError("dataset: missing 'samples' array");
  }
  for (const auto& js : j.at("samples")) {
    Sample s;
    s.id = js.value("id", "");
    if (!js.contains("states") || !js.at("states").is_array() || js.at("states").empty()) {
      throw SchemaError("dataset: sample '" + s.id + "' has no states");
    }
    if (static_cast<Eigen::Index>(js.at("states").size()) != state_dim) {
      throw SchemaError("dataset: sample '" + s.id + "' does not match the state_dim header");
    }
    const auto n = static_cast<Eigen::Index>(js.at("states").at(0).size());
    s.traj.grid = TimeGrid{t0, dt, static_cast<std::size_t>(n)};
    s.traj.states = matrix_from_columns(js.at("states"), "states", state_dim, n);
    s.traj.derivs = matrix_from_columns(js.at("derivs"), "derivs", state_dim, n);
    const auto& inputs = js.at("inputs");
    if (!inputs.is_array() || static_cast<Eigen::Index>(inputs.size()) != n) {
      throw SchemaError("dataset: sample '" + s.id + "' input length mismatch");
    }
    s.traj.inputs.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      s.traj.inputs[k] = inputs.at(static_cast<std::size_t>(k)).get<double>();
    }
    if (js.contains("phys_derivs")) {
      s.phys_derivs = matrix_from_columns(js.at("phys_derivs"), "phys_derivs", state_dim, n);
    }
    s.traj.validate();
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("save_dataset: cannot open '" + path + "' for writing");
  out << dataset_to_json(ds).dump() << '\n';
  if (!out) throw SchemaError("save_dataset: write failed for '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("load_dataset: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("load_dataset: parse error in '" + path + "': " + e.what());
  }
  return dataset_from_json(j);
}

bool datasets_equal(const Dataset& a, const Dataset& b) {
  if (a.system != b.system || a.split != b.split || a.samples.size() != b.samples.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const auto& sa = a.samples[i];
    const auto& sb = b.samples[i];
    if (sa.id != sb.id) return false;
    if (sa.traj.grid.t0 != sb.traj.grid.t0 || sa.traj.grid.dt != sb.traj.grid.dt ||
        sa.traj.grid.n != sb.traj.grid.n) {
      return false;
    }
    if (sa.traj.states != sb.traj.states || sa.traj.derivs != sb.traj.derivs ||
        sa.traj.inputs != sb.traj.inputs) {
      return false;
    }
    if (sa.phys_derivs.has_value() != sb.phys_derivs.has_value()) return false;
    if (sa.phys_derivs && *sa.phys_derivs != *sb.phys_derivs) return false;
  }
  return true;
}

DrawnSequences draw_sequences(const SequenceDrawSpec& spec, const TimeGrid& grid,
                              std::uint64_t seed) {
  if (spec.count == 0) throw InvalidInputError("draw_sequences: count must be positive");
  if (spec.kinds.empty()) throw InvalidInputError("draw_sequences: no excitation kinds");

  DrawnSequences out;
  for (std::size_t i = 0; i < spec.count; ++i) {
    Rng rng(derive_seed(seed, i));
    const auto kind = spec.kinds[i % spec.kinds.size()];
    const double amplitude = rng.uniform(spec.amplitude_range[0], spec.amplitude_range[1]);
    ExcitationSignal signal;
    switch (kind) {
      case ExcitationSignal::Kind::Zero:
        signal = ExcitationSignal::zero();
        break;
      case ExcitationSignal::Kind::Sine: {
        const double f = rng.uniform(spec.frequency_range[0], spec.frequency_range[1]);
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        signal = ExcitationSignal::sine(amplitude, f, phase);
        break;
      }
      case ExcitationSignal::Kind::Step: {
        const double when = rng.uniform(spec.step_time_range[0], spec.step_time_range[1]);
        signal = ExcitationSignal::step(amplitude, when);
        break;
      }
      case ExcitationSignal::Kind::Chirp: {
        const double f0 = rng.uniform(spec.frequency_range[0], spec.frequency_range[1]);
        const double f1 =
            rng.uniform(spec.chirp_end_frequency_range[0], spec.chirp_end_frequency_range[1]);
        const double sweep =
            spec.chirp_sweep_duration > 0.0 ? spec.chirp_sweep_duration : grid.duration();
        signal = ExcitationSignal::chirp(amplitude, std::min(f0, f1), std::max(f0, f1), sweep);
        break;
      }
    }
    StateVec x0(2);
    x0[0] = rng.uniform(spec.initial_angle_range[0], spec.initial_angle_range[1]);
    x0[1] = rng.uniform(spec.initial_velocity_range[0], spec.initial_velocity_range[1]);
    out.excitations.push_back(signal);
    out.x0s.push_back(x0);
  }
  return out;
}

}  // namespace pgrnn
