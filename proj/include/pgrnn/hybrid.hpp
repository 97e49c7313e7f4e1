#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "pgrnn/datagen.hpp"
#include "pgrnn/dynamics.hpp"
#include "pgrnn/rnn.hpp"

namespace pgrnn {

// Phy: the plain physics model. Rnn: purely data driven. Pgrnn: recurrent
// network fed with the physics model's derivative channel. Mopgrnn shares the
// Pgrnn architecture and differs only in the training regime.
enum class ModelKind { Phy, Rnn, Pgrnn, Mopgrnn };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

inline bool is_recurrent(ModelKind kind) { return kind != ModelKind::Phy; }
inline bool uses_physics_channel(ModelKind kind) {
  return kind == ModelKind::Pgrnn || kind == ModelKind::Mopgrnn;
}
inline bool needs_physics_model(ModelKind kind) { return kind != ModelKind::Rnn; }

// Per-step network input is [x, u, t_scaled] plus, for hybrid kinds, the
// physics derivative channel.
struct InputLayout {
  int state_dim = 2;
  bool physics_channel = false;

  int input_dim() const { return state_dim + 2 + (physics_channel ? state_dim : 0); }
};

// Affine per-channel scaling of network inputs and targets, computed on the
// training split and stored with the checkpoint. Identity until trained.
struct Normalization {
  Eigen::VectorXd input_mean, input_scale;    // input_dim
  Eigen::VectorXd output_mean, output_scale;  // state_dim

  static Normalization identity(Eigen::Index input_dim, Eigen::Index output_dim);
};

struct Model {
  ModelKind kind = ModelKind::Phy;
  InputLayout layout;
  GruParams params;  // empty for Phy
  std::optional<OdeSystemSpec> phy;
  Normalization norm;
};

Model make_model(ModelKind kind, int hidden_dim, int state_dim,
                 std::optional<OdeSystemSpec> phy, std::uint64_t seed);

// Raw (unnormalized) per-step feature rows for a recorded trajectory:
// reference states, input, scaled elapsed time, and optionally the physics
// channel taken from the sample.
Eigen::MatrixXd assemble_features(const InputLayout& layout, const Trajectory& traj,
                                  const std::optional<Eigen::MatrixXd>& phys_derivs);

Eigen::MatrixXd normalize_features(const Normalization& norm, Eigen::MatrixXd features);

// Per-step predicted state derivatives with the reference states fed as the
// network's state history (teacher forcing).
Eigen::MatrixXd predict_derivs_teacher_forced(const Model& m, const Sample& sample);

// Closed-loop simulation: the model's own integrated state feeds back into
// its inputs; hybrid kinds evaluate the physics channel at the current
// predicted state. Explicit Euler at the grid resolution for every kind.
Trajectory rollout(const Model& m, const StateVec& x0, const Eigen::VectorXd& inputs,
                   const TimeGrid& grid);
Trajectory rollout(const Model& m, const StateVec& x0, const ExcitationSignal& excitation,
                   const TimeGrid& grid);

// Per-step |dE_model - dE_reference| with both residuals evaluated under the
// given parameter set.
Eigen::VectorXd constraint_violation_trace(const Model& m, const Trajectory& rollout_traj,
                                           const Sample& reference, const OdeSystemSpec& spec);

nlohmann::json model_to_json(const Model& m);
Model model_from_json(const nlohmann::json& j);
void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);

}  // namespace pgrnn
