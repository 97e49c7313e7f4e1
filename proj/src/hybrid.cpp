#include "pgrnn/hybrid.hpp"

#include <cmath>
#include <fstream>

namespace pgrnn {

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Phy: return "phy";
    case ModelKind::Rnn: return "rnn";
    case ModelKind::Pgrnn: return "pgrnn";
    case ModelKind::Mopgrnn: return "mopgrnn";
  }
  return "phy";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "phy") return ModelKind::Phy;
  if (name == "rnn") return ModelKind::Rnn;
  if (name == "pgrnn") return ModelKind::Pgrnn;
  if (name == "mopgrnn") return ModelKind::Mopgrnn;
  throw ConfigError("unknown model kind '" + name + "'");
}

Normalization Normalization::identity(Eigen::Index input_dim, Eigen::Index output_dim) {
  Normalization n;
  n.input_mean = Eigen::VectorXd::Zero(input_dim);
  n.input_scale = Eigen::VectorXd::Ones(input_dim);
  n.output_mean = Eigen::VectorXd::Zero(output_dim);
  n.output_scale = Eigen::VectorXd::Ones(output_dim);
  return n;
}

Model make_model(ModelKind kind, int hidden_dim, int state_dim,
                 std::optional<OdeSystemSpec> phy, std::uint64_t seed) {
  if (needs_physics_model(kind) && !phy.has_value()) {
    throw ConfigError("make_model: kind '" + to_string(kind) + "' requires a physics model");
  }
  Model m;
  m.kind = kind;
  m.layout.state_dim = state_dim;
  m.layout.physics_channel = uses_physics_channel(kind);
  m.phy = std::move(phy);
  if (is_recurrent(kind)) {
    if (hidden_dim < 1) throw ConfigError("make_model: hidden_dim must be positive");
    m.params = init_params(seed, m.layout.input_dim(), hidden_dim, state_dim);
  }
  m.norm = Normalization::identity(m.layout.input_dim(), state_dim);
  return m;
}

Eigen::MatrixXd assemble_features(const InputLayout& layout, const Trajectory& traj,
                                  const std::optional<Eigen::MatrixXd>& phys_derivs) {
  const auto n = static_cast<Eigen::Index>(traj.grid.n);
  if (traj.state_dim() != layout.state_dim) {
    throw InvalidInputError("assemble_features: state dimension mismatch");
  }
  if (layout.physics_channel && !phys_derivs.has_value()) {
    throw ConfigError("assemble_features: this model requires the physics derivative channel");
  }

  Eigen::MatrixXd features(n, layout.input_dim());
  const double duration = traj.grid.duration();
  const double time_scale = duration > 0.0 ? 1.0 / duration : 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index col = 0;
    for (int d = 0; d < layout.state_dim; ++d) features(k, col++) = traj.states(k, d);
    features(k, col++) = traj.inputs[k];
    features(k, col++) = static_cast<double>(k) * traj.grid.dt * time_scale;
    if (layout.physics_channel) {
      for (int d = 0; d < layout.state_dim; ++d) features(k, col++) = (*phys_derivs)(k, d);
    }
  }
  return features;
}

Eigen::MatrixXd normalize_features(const Normalization& norm, Eigen::MatrixXd features) {
  if (features.cols() != norm.input_mean.size()) {
    throw InvalidInputError("normalize_features: feature width mismatch");
  }
  features.rowwise() -= norm.input_mean.transpose();
  features.array().rowwise() /= norm.input_scale.transpose().array();
  return features;
}

Eigen::MatrixXd predict_derivs_teacher_forced(const Model& m, const Sample& sample) {
  const auto n = static_cast<Eigen::Index>(sample.traj.grid.n);
  if (m.kind == ModelKind::Phy) {
    Eigen::MatrixXd preds(n, m.layout.state_dim);
    for (Eigen::Index k = 0; k < n; ++k) {
      preds.row(k) = m.phy->deriv(sample.traj.states.row(k).transpose(), sample.traj.inputs[k],
                                  sample.traj.grid.time_at(static_cast<std::size_t>(k)));
    }
    return preds;
  }

  const Eigen::MatrixXd features = normalize_features(
      m.norm, assemble_features(m.layout, sample.traj, sample.phys_derivs));
  const Eigen::VectorXd h0 = Eigen::VectorXd::Zero(m.params.hidden_dim());
  RnnForwardResult fwd = rnn_forward(m.params, features, h0, /*keep_caches=*/false);
  Eigen::MatrixXd preds = std::move(fwd.outputs);
  preds.array().rowwise() *= m.norm.output_scale.transpose().array();
  preds.rowwise() += m.norm.output_mean.transpose();
  return preds;
}

Trajectory rollout(const Model& m, const StateVec& x0, const Eigen::VectorXd& inputs,
                   const TimeGrid& grid) {
  grid.validate();
  if (x0.size() != m.layout.state_dim) {
    throw InvalidInputError("rollout: initial state dimension mismatch");
  }
  if (inputs.size() != static_cast<Eigen::Index>(grid.n)) {
    throw InvalidInputError("rollout: input series length does not match the grid");
  }

  const auto n = static_cast<Eigen::Index>(grid.n);
  Trajectory traj;
  traj.grid = grid;
  traj.states.resize(n, m.layout.state_dim);
  traj.derivs.resize(n, m.layout.state_dim);
  traj.inputs = inputs;

  const double duration = grid.duration();
  const double time_scale = duration > 0.0 ? 1.0 / duration : 0.0;

  Eigen::VectorXd h;
  if (is_recurrent(m.kind)) h = Eigen::VectorXd::Zero(m.params.hidden_dim());

  StateVec x = x0;
  Eigen::VectorXd feature(m.layout.input_dim());
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = grid.time_at(static_cast<std::size_t>(k));
    const double u = inputs[k];
    if (!x.allFinite()) {
      throw DivergenceError("rollout: non-finite state", t, static_cast<std::size_t>(k));
    }
    traj.states.row(k) = x;

    StateVec deriv;
    if (m.kind == ModelKind::Phy) {
      deriv = m.phy->deriv(x, u, t);
    } else {
      Eigen::Index col = 0;
      for (int d = 0; d < m.layout.state_dim; ++d) feature[col++] = x[d];
      feature[col++] = u;
      feature[col++] = static_cast<double>(k) * grid.dt * time_scale;
      if (m.layout.physics_channel) {
        const StateVec phys = m.phy->deriv(x, u, t);
        for (int d = 0; d < m.layout.state_dim; ++d) feature[col++] = phys[d];
      }
      const Eigen::VectorXd scaled =
          (feature - m.norm.input_mean).cwiseQuotient(m.norm.input_scale);
      h = gru_cell_forward(m.params, scaled, h);
      deriv = m.norm.output_mean +
              m.norm.output_scale.cwiseProduct(m.params.Wout * h + m.params.bout);
    }
    if (!deriv.allFinite()) {
      throw DivergenceError("rollout: non-finite derivative", t, static_cast<std::size_t>(k));
    }
    traj.derivs.row(k) = deriv;
    if (k + 1 < n) x += grid.dt * deriv;
  }
  return traj;
}

Trajectory rollout(const Model& m, const StateVec& x0, const ExcitationSignal& excitation,
                   const TimeGrid& grid) {
  Eigen::VectorXd inputs(static_cast<Eigen::Index>(grid.n));
  for (Eigen::Index k = 0; k < inputs.size(); ++k) {
    inputs[k] = excitation.eval(grid.time_at(static_cast<std::size_t>(k)));
  }
  return rollout(m, x0, inputs, grid);
}

Eigen::VectorXd constraint_violation_trace(const Model& m, const Trajectory& rollout_traj,
                                           const Sample& reference, const OdeSystemSpec& spec) {
  (void)m;
  const auto& ref = reference.traj;
  if (rollout_traj.grid.n != ref.grid.n || rollout_traj.grid.dt != ref.grid.dt ||
      rollout_traj.grid.t0 != ref.grid.t0) {
    throw InvalidInputError("constraint_violation_trace: grids are not aligned");
  }
  const auto n = static_cast<Eigen::Index>(ref.grid.n);
  Eigen::VectorXd trace(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = ref.grid.time_at(static_cast<std::size_t>(k));
    const double de_model =
        spec.energy_residual(rollout_traj.states.row(k).transpose(),
                             rollout_traj.derivs.row(k).transpose(), rollout_traj.inputs[k], t);
    const double de_ref = spec.energy_residual(ref.states.row(k).transpose(),
                                               ref.derivs.row(k).transpose(), ref.inputs[k], t);
    trace[k] = std::abs(de_model - de_ref);
  }
  return trace;
}

nlohmann::json model_to_json(const Model& m) {
  nlohmann::json j;
  j["version"] = 1;
  j["kind"] = to_string(m.kind);
  j["layout"] = {{"state_dim", m.layout.state_dim},
                 {"physics_channel", m.layout.physics_channel}};
  if (m.phy) j["phy"] = m.phy->to_json();
  j["normalization"] = {{"input_mean", vector_to_json(m.norm.input_mean)},
                        {"input_scale", vector_to_json(m.norm.input_scale)},
                        {"output_mean", vector_to_json(m.norm.output_mean)},
                        {"output_scale", vector_to_json(m.norm.output_scale)}};
  if (is_recurrent(m.kind)) j["params"] = params_to_json(m.params);
  return j;
}

Model model_from_json(const nlohmann::json& j) {
  if (j.value("version", -1) != 1) throw SchemaError("model checkpoint: unsupported version");
  Model m;
  m.kind = model_kind_from_string(j.value("kind", ""));
  if (!j.contains("layout")) throw SchemaError("model checkpoint: missing 'layout'");
  m.layout.state_dim = j.at("layout").value("state_dim", 0);
  m.layout.physics_channel = j.at("layout").value("physics_channel", false);
  if (j.contains("phy")) m.phy = OdeSystemSpec::from_json(j.at("phy"));
  if (needs_physics_model(m.kind) && !m.phy) {
    throw SchemaError("model checkpoint: kind '" + to_string(m.kind) + "' requires 'phy'");
  }
  if (!j.contains("normalization")) throw SchemaError("model checkpoint: missing 'normalization'");
  const auto& jn = j.at("normalization");
  m.norm.input_mean = vector_from_json(jn.at("input_mean"));
  m.norm.input_scale = vector_from_json(jn.at("input_scale"));
  m.norm.output_mean = vector_from_json(jn.at("output_mean"));
  m.norm.output_scale = vector_from_json(jn.at("output_scale"));
  if (is_recurrent(m.kind)) {
    if (!j.contains("params")) throw SchemaError("model checkpoint: missing 'params'");
    m.params = params_from_json(j.at("params"));
    if (m.params.input_dim() != m.layout.input_dim()) {
      throw SchemaError("model checkpoint: parameter width does not match the layout");
    }
  }
  return m;
}

void save_model(const Model& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("save_model: cannot open '" + path + "' for writing");
  out << model_to_json(m).dump(2) << '\n';
  if (!out) throw SchemaError("save_model: write failed for '" + path + "'");
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("load_model: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("load_model: parse error in '" + path + "': " + e.what());
  }
  return model_from_json(j);
}

}  // namespace pgrnn
