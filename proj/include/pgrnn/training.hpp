#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pgrnn/datagen.hpp"
#include "pgrnn/hybrid.hpp"

namespace pgrnn {

// Per-objective loss values; index 0 is the data-fit (MAE) term, index 1,
// when present, the energy-balance term.
struct LossVector {
  std::vector<double> values;
};

// Normalization boundaries c_j for the multi-objective combination. The
// boundaries only contract over training (never rise, never drop below the
// floor).
struct DefaultValues {
  std::vector<double> c;
  double contraction = 0.95;  // rho
  double floor = 1e-8;        // epsilon

  bool initialized() const { return !c.empty(); }
};

struct CombineResult {
  double objective;    // J, the maximum normalized loss
  std::size_t active;  // argmax; smallest index wins ties
};

CombineResult multi_objective_combine(const LossVector& losses, const DefaultValues& defaults);

// c_j' = max(floor, min(c_j, max(losses_j, rho * c_j))): contract toward the
// achieved loss without ever increasing or crossing the floor.
DefaultValues update_defaults(DefaultValues defaults, const LossVector& losses);

// Mean absolute error over steps and dimensions plus its subgradient with
// respect to the predictions (zero at exact ties).
std::pair<double, Eigen::MatrixXd> mae_loss(const Eigen::MatrixXd& preds,
                                            const Eigen::MatrixXd& targets);

// Energy-balance loss of one sample: the left-Riemann discretization of
// (1/n) * integral |dE_model - dE_reference| dt, with dE_model computed from
// the predicted derivatives along the reference states. The gradient flows
// through the residual's linear dependence on the predicted acceleration.
//
// The reference discrepancy dE_reference defaults to the recorded data's
// residual under the same parameter set; pass an explicit trace to override
// it (training uses a zero trace: simulated ground truth has no discrepancy
// of its own, so the objective presses the model's own energy flux down).
struct SampleEnergyLoss {
  double value = 0.0;
  Eigen::MatrixXd pred_grads;  // n x state_dim
};
SampleEnergyLoss energy_loss_terms(const Eigen::MatrixXd& pred_derivs, const Sample& sample,
                                   const OdeSystemSpec& spec,
                                   const Eigen::VectorXd* reference_residuals = nullptr);

// The recorded trajectory's own per-step energy residual under `spec`.
Eigen::VectorXd reference_energy_residuals(const Sample& sample, const OdeSystemSpec& spec);

// Dataset-mean energy loss of a model's teacher-forced predictions.
struct EnergyLossResult {
  double value = 0.0;
  std::vector<Eigen::MatrixXd> per_sample_grads;
};
EnergyLossResult energy_loss(const Model& m, const Dataset& ds, const OdeSystemSpec& spec);

struct AdamConfig {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Gradients first_moment;
  Gradients second_moment;
  long step = 0;
  AdamConfig cfg;

  static AdamState init(const GruParams& like, const AdamConfig& cfg);
};

// One bias-corrected ADAM update; throws DivergenceError on non-finite
// gradients.
void adam_step(AdamState& state, GruParams& params, const Gradients& grads);

struct TrainConfig {
  ModelKind kind = ModelKind::Pgrnn;
  int hidden_dim = 16;
  int epochs = 300;
  int tbptt_window = 250;
  double learning_rate = 1e-3;
  double sim_error_discount = 0.5;  // lambda of the simulation error
  double contraction = 0.95;        // rho of the default values
  double default_floor = 1e-8;      // epsilon of the default values
  std::uint64_t seed = 1;
  AdamConfig adam;
  // Parameter set for the energy balance of the multi-objective regime.
  // Defaults to the model's own physics parameters; a simulation study with
  // known plant parameters passes those instead.
  std::optional<OdeSystemSpec> energy_system;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochRecord {
  int epoch = 0;
  double loss_mae = 0.0;
  double loss_energy = 0.0;  // 0 for kinds that do not use the energy objective
  double c_mae = 0.0;
  double c_energy = 0.0;  // 0 when the objective is absent
  double objective = 0.0;  // J
  int active = 0;
  double val_sim_error = 0.0;  // NaN when no validation data
};
using TrainHistory = std::vector<EpochRecord>;

void write_history_csv(const std::string& path, const TrainHistory& history,
                       const nlohmann::json& metadata);
TrainHistory read_history_csv(const std::string& path);

// Per-channel affine scaling fitted on the training split (constant channels
// keep unit scale).
Normalization compute_normalization(const InputLayout& layout, const Dataset& train_ds);

struct TrainResult {
  Model model;  // parameters with the best validation simulation error
  TrainHistory history;
};

// Teacher-forced training with truncated BPTT windows, one ADAM update per
// sample, epoch-level default-value contraction for the multi-objective
// regime, and per-epoch validation by free-run simulation error.
TrainResult train(Model model, const Dataset& train_ds, const Dataset& val_ds,
                  const TrainConfig& cfg);

// Time-discounted L1 error area between reference and predicted derivative
// trajectories for one sample (left-Riemann discretization).
double sim_error_terms(const Eigen::MatrixXd& pred_derivs, const Sample& sample, double lambda);

struct SimErrorReport {
  double mean = 0.0;
  std::vector<double> per_sample;
  std::vector<std::string> warnings;  // diverged samples, reported as infinite error
};
SimErrorReport evaluate_sim_error_report(const Model& m, const Dataset& ds, double lambda);
double evaluate_sim_error(const Model& m, const Dataset& ds, double lambda);

struct EnsembleStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single member
  double min = 0.0;
  double max = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> per_seed;  // test simulation error per member, NaN on failure
  std::vector<std::string> failures;
};

// Trains one model per seed (identical apart from initialization and sample
// ordering) and aggregates the test simulation error. Members run
// independently on up to `workers` threads; results merge in seed order.
EnsembleStats ensemble_run(const TrainConfig& cfg, const Dataset& train_ds, const Dataset& val_ds,
                           const Dataset& test_ds, const std::optional<OdeSystemSpec>& phy,
                           const std::vector<std::uint64_t>& seeds, int workers = 1);

struct HyperRow {
  int hidden_dim = 0;
  double val_sim_error = 0.0;
};
struct HyperSearchResult {
  int best_hidden_dim = 0;
  std::vector<HyperRow> rows;
};

// Trains one model per candidate hidden size with a fixed seed and picks the
// smallest validation simulation error (first occurrence wins ties).
HyperSearchResult hyperparameter_search(const TrainConfig& base, const std::vector<int>& candidates,
                                        int epoch_budget, const Dataset& train_ds,
                                        const Dataset& val_ds,
                                        const std::optional<OdeSystemSpec>& phy);

// Round-trip safe decimal formatting used by every CSV writer.
std::string format_double(double v);

}  // namespace pgrnn
