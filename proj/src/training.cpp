#include "pgrnn/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "pgrnn/rng.hpp"

namespace pgrnn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_loss_vector(const LossVector& losses) {
  if (losses.values.empty()) throw InvalidInputError("LossVector: must hold at least one value");
  for (double v : losses.values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidInputError("LossVector: values must be finite and nonnegative");
    }
  }
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CombineResult multi_objective_combine(const LossVector& losses, const DefaultValues& defaults) {
  check_loss_vector(losses);
  if (defaults.c.size() != losses.values.size()) {
    throw InvalidInputError("multi_objective_combine: loss and default dimensions differ");
  }
  CombineResult res{-kInf, 0};
  for (std::size_t j = 0; j < losses.values.size(); ++j) {
    if (!(defaults.c[j] > 0.0)) {
      throw InvalidInputError("multi_objective_combine: default values must be positive");
    }
    const double normalized = losses.values[j] / defaults.c[j];
    if (normalized > res.objective) {
      res.objective = normalized;
      res.active = j;
    }
  }
  return res;
}

DefaultValues update_defaults(DefaultValues defaults, const LossVector& losses) {
  check_loss_vector(losses);
  if (defaults.c.size() != losses.values.size()) {
    throw InvalidInputError("update_defaults: loss and default dimensions differ");
  }
  if (!(defaults.contraction > 0.0 && defaults.contraction < 1.0)) {
    throw InvalidInputError("update_defaults: contraction factor must lie in (0, 1)");
  }
  if (!(defaults.floor > 0.0)) throw InvalidInputError("update_defaults: floor must be positive");
  for (std::size_t j = 0; j < defaults.c.size(); ++j) {
    const double target = std::max(losses.values[j], defaults.contraction * defaults.c[j]);
    defaults.c[j] = std::max(defaults.floor, std::min(defaults.c[j], target));
  }
  return defaults;
}

std::pair<double, Eigen::MatrixXd> mae_loss(const Eigen::MatrixXd& preds,
                                            const Eigen::MatrixXd& targets) {
  if (preds.rows() != targets.rows() || preds.cols() != targets.cols()) {
    throw InvalidInputError("mae_loss: prediction and target shapes differ");
  }
  const double count = static_cast<double>(preds.rows() * preds.cols());
  Eigen::MatrixXd grads(preds.rows(), preds.cols());
  double sum = 0.0;
  for (Eigen::Index r = 0; r < preds.rows(); ++r) {
    for (Eigen::Index c = 0; c < preds.cols(); ++c) {
      const double diff = preds(r, c) - targets(r, c);
      sum += std::abs(diff);
      grads(r, c) = sign_of(diff) / count;
    }
  }
  return {sum / count, std::move(grads)};
}

Eigen::VectorXd reference_energy_residuals(const Sample& sample, const OdeSystemSpec& spec) {
  const auto& traj = sample.traj;
  const auto n = static_cast<Eigen::Index>(traj.grid.n);
  Eigen::VectorXd out(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out[k] = spec.energy_residual(traj.states.row(k).transpose(), traj.derivs.row(k).transpose(),
                                  traj.inputs[k], traj.grid.time_at(static_cast<std::size_t>(k)));
  }
  return out;
}

SampleEnergyLoss energy_loss_terms(const Eigen::MatrixXd& pred_derivs, const Sample& sample,
                                   const OdeSystemSpec& spec,
                                   const Eigen::VectorXd* reference_residuals) {
  const auto& traj = sample.traj;
  const auto n = static_cast<Eigen::Index>(traj.grid.n);
  if (pred_derivs.rows() != n || pred_derivs.cols() != traj.state_dim()) {
    throw InvalidInputError("energy_loss_terms: prediction shape mismatch");
  }
  if (reference_residuals != nullptr && reference_residuals->size() != n) {
    throw InvalidInputError("energy_loss_terms: reference residual length mismatch");
  }

  SampleEnergyLoss out;
  out.pred_grads = Eigen::MatrixXd::Zero(n, traj.state_dim());
  const double dt = traj.grid.dt;
  const double inertia = spec.inertia();
  double sum = 0.0;
  // Left-Riemann sum over the n-1 intervals.
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const double t = traj.grid.time_at(static_cast<std::size_t>(k));
    const StateVec x = traj.states.row(k).transpose();
    const double u = traj.inputs[k];
    const double de_model = spec.energy_residual(x, pred_derivs.row(k).transpose(), u, t);
    const double de_ref =
        reference_residuals != nullptr
            ? (*reference_residuals)[k]
            : spec.energy_residual(x, traj.derivs.row(k).transpose(), u, t);
    const double diff = de_model - de_ref;
    sum += std::abs(diff) * dt;
    // d|diff|/d acc_pred = sign(diff) * inertia * phidot_ref.
    out.pred_grads(k, 1) = sign_of(diff) * inertia * x[1] * dt;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  out.value = sum * inv_n;
  out.pred_grads *= inv_n;
  return out;
}

EnergyLossResult energy_loss(const Model& m, const Dataset& ds, const OdeSystemSpec& spec) {
  if (ds.samples.empty()) throw InvalidInputError("energy_loss: empty dataset");
  EnergyLossResult out;
  for (const auto& sample : ds.samples) {
    const Eigen::MatrixXd preds = predict_derivs_teacher_forced(m, sample);
    SampleEnergyLoss term = energy_loss_terms(preds, sample, spec);
    out.value += term.value;
    term.pred_grads /= static_cast<double>(ds.samples.size());
    out.per_sample_grads.push_back(std::move(term.pred_grads));
  }
  out.value /= static_cast<double>(ds.samples.size());
  return out;
}

AdamState AdamState::init(const GruParams& like, const AdamConfig& cfg) {
  AdamState s;
  s.first_moment = GruParams::zeros(like.input_dim(), like.hidden_dim(), like.output_dim());
  s.second_moment = GruParams::zeros(like.input_dim(), like.hidden_dim(), like.output_dim());
  s.cfg = cfg;
  return s;
}

void adam_step(AdamState& state, GruParams& params, const Gradients& grads) {
  auto gb = grads.blocks();
  for (const auto& block : gb) {
    if (!Eigen::Map<const Eigen::VectorXd>(block.data, block.size).allFinite()) {
      throw DivergenceError(std::string("adam_step: non-finite gradient in ") + block.name, 0.0, 0);
    }
  }

  state.step += 1;
  const double b1 = state.cfg.beta1;
  const double b2 = state.cfg.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double alpha = state.cfg.alpha;
  const double eps = state.cfg.epsilon;

  auto pb = params.blocks();
  auto mb = state.first_moment.blocks();
  auto vb = state.second_moment.blocks();
  for (std::size_t i = 0; i < pb.size(); ++i) {
    if (pb[i].size != gb[i].size) throw InvalidInputError("adam_step: gradient shape mismatch");
    double* p = pb[i].data;
    double* mo = mb[i].data;
    double* vo = vb[i].data;
    const double* g = gb[i].data;
    for (Eigen::Index k = 0; k < pb[i].size; ++k) {
      mo[k] = b1 * mo[k] + (1.0 - b1) * g[k];
      vo[k] = b2 * vo[k] + (1.0 - b2) * g[k] * g[k];
      const double m_hat = mo[k] / bias1;
      const double v_hat = vo[k] / bias2;
      p[k] -= alpha * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

nlohmann::json TrainConfig::to_json() const {
  return {{"kind", to_string(kind)},
          {"hidden_dim", hidden_dim},
          {"epochs", epochs},
          {"tbptt_window", tbptt_window},
          {"learning_rate", learning_rate},
          {"lambda", sim_error_discount},
          {"rho", contraction},
          {"epsilon", default_floor},
          {"seed", seed},
          {"adam", {{"beta1", adam.beta1}, {"beta2", adam.beta2}, {"epsilon", adam.epsilon}}},
          {"energy_system", energy_system ? energy_system->to_json() : nlohmann::json()}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  if (j.contains("kind")) cfg.kind = model_kind_from_string(j.at("kind").get<std::string>());
  cfg.hidden_dim = j.value("hidden_dim", cfg.hidden_dim);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.tbptt_window = j.value("tbptt_window", cfg.tbptt_window);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.sim_error_discount = j.value("lambda", cfg.sim_error_discount);
  cfg.contraction = j.value("rho", cfg.contraction);
  cfg.default_floor = j.value("epsilon", cfg.default_floor);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("adam")) {
    const auto& ja = j.at("adam");
    cfg.adam.beta1 = ja.value("beta1", cfg.adam.beta1);
    cfg.adam.beta2 = ja.value("beta2", cfg.adam.beta2);
    cfg.adam.epsilon = ja.value("epsilon", cfg.adam.epsilon);
  }
  if (j.contains("energy_system") && !j.at("energy_system").is_null()) {
    cfg.energy_system = OdeSystemSpec::from_json(j.at("energy_system"));
  }
  if (cfg.hidden_dim < 1 || cfg.epochs < 0 || cfg.tbptt_window < 1 ||
      !(cfg.learning_rate > 0.0) || cfg.sim_error_discount < 0.0 ||
      !(cfg.contraction > 0.0 && cfg.contraction < 1.0) || !(cfg.default_floor > 0.0)) {
    throw ConfigError("train config: invalid value");
  }
  return cfg;
}

void write_history_csv(const std::string& path, const TrainHistory& history,
                       const nlohmann::json& metadata) {
  std::ofstream out(path);
  if (!out) throw SchemaError("write_history_csv: cannot open '" + path + "'");
  out << "# " << metadata.dump() << '\n';
  out << "epoch,loss_mae,loss_energy,c_mae,c_energy,J,active,val_E_sim\n";
  for (const auto& rec : history) {
    out << rec.epoch << ',' << format_double(rec.loss_mae) << ',' << format_double(rec.loss_energy)
        << ',' << format_double(rec.c_mae) << ',' << format_double(rec.c_energy) << ','
        << format_double(rec.objective) << ',' << rec.active << ','
        << format_double(rec.val_sim_error) << '\n';
  }
  if (!out) throw SchemaError("write_history_csv: write failed for '" + path + "'");
}

TrainHistory read_history_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("read_history_csv: cannot open '" + path + "'");
  TrainHistory history;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("epoch,", 0) == 0) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 8) throw SchemaError("read_history_csv: malformed row in '" + path + "'");
    EpochRecord rec;
    rec.epoch = std::stoi(fields[0]);
    rec.loss_mae = std::strtod(fields[1].c_str(), nullptr);
    rec.loss_energy = std::strtod(fields[2].c_str(), nullptr);
    rec.c_mae = std::strtod(fields[3].c_str(), nullptr);
    rec.c_energy = std::strtod(fields[4].c_str(), nullptr);
    rec.objective = std::strtod(fields[5].c_str(), nullptr);
    rec.active = std::stoi(fields[6]);
    rec.val_sim_error = std::strtod(fields[7].c_str(), nullptr);
    history.push_back(rec);
  }
  return history;
}

Normalization compute_normalization(const InputLayout& layout, const Dataset& train_ds) {
  if (train_ds.samples.empty()) {
    throw InvalidInputError("compute_normalization: empty training set");
  }
  const Eigen::Index in_dim = layout.input_dim();
  const Eigen::Index out_dim = layout.state_dim;
  Eigen::VectorXd in_sum = Eigen::VectorXd::Zero(in_dim);
  Eigen::VectorXd in_sq = Eigen::VectorXd::Zero(in_dim);
  Eigen::VectorXd out_sum = Eigen::VectorXd::Zero(out_dim);
  Eigen::VectorXd out_sq = Eigen::VectorXd::Zero(out_dim);
  double count = 0.0;
  for (const auto& s : train_ds.samples) {
    const Eigen::MatrixXd features = assemble_features(layout, s.traj, s.phys_derivs);
    in_sum += features.colwise().sum().transpose();
    in_sq += features.array().square().colwise().sum().matrix().transpose();
    out_sum += s.traj.derivs.colwise().sum().transpose();
    out_sq += s.traj.derivs.array().square().colwise().sum().matrix().transpose();
    count += static_cast<double>(features.rows());
  }
  auto finish = [count](const Eigen::VectorXd& sum, const Eigen::VectorXd& sq,
                        Eigen::VectorXd& mean, Eigen::VectorXd& scale) {
    mean = sum / count;
    scale.resize(mean.size());
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
      const double var = std::max(0.0, sq[i] / count - mean[i] * mean[i]);
      const double sd = std::sqrt(var);
      scale[i] = sd < 1e-12 ? 1.0 : sd;
    }
  };
  Normalization norm;
  finish(in_sum, in_sq, norm.input_mean, norm.input_scale);
  finish(out_sum, out_sq, norm.output_mean, norm.output_scale);
  return norm;
}

double sim_error_terms(const Eigen::MatrixXd& pred_derivs, const Sample& sample, double lambda) {
  if (lambda < 0.0) throw InvalidInputError("sim_error_terms: lambda must be nonnegative");
  const auto& traj = sample.traj;
  const auto n = static_cast<Eigen::Index>(traj.grid.n);
  if (pred_derivs.rows() != n || pred_derivs.cols() != traj.state_dim()) {
    throw InvalidInputError("sim_error_terms: prediction shape mismatch");
  }
  const double dt = traj.grid.dt;
  double sum = 0.0;
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const double elapsed = static_cast<double>(k) * dt;
    const double err = (traj.derivs.row(k) - pred_derivs.row(k)).cwiseAbs().sum();
    sum += err / (1.0 + lambda * elapsed) * dt;
  }
  return sum / static_cast<double>(n);
}

SimErrorReport evaluate_sim_error_report(const Model& m, const Dataset& ds, double lambda) {
  if (ds.samples.empty()) throw InvalidInputError("evaluate_sim_error: empty dataset");
  SimErrorReport report;
  double sum = 0.0;
  for (const auto& sample : ds.samples) {
    double value;
    try {
      const Trajectory sim = rollout(m, sample.traj.states.row(0).transpose(),
                                     sample.traj.inputs, sample.traj.grid);
      value = sim_error_terms(sim.derivs, sample, lambda);
    } catch (const DivergenceError& e) {
      value = kInf;
      report.warnings.push_back("sample '" + sample.id + "' diverged at step " +
                                std::to_string(e.step()));
    }
    report.per_sample.push_back(value);
    sum += value;
  }
  report.mean = sum / static_cast<double>(ds.samples.size());
  return report;
}

double evaluate_sim_error(const Model& m, const Dataset& ds, double lambda) {
  return evaluate_sim_error_report(m, ds, lambda).mean;
}

TrainResult train(Model model, const Dataset& train_ds, const Dataset& val_ds,
                  const TrainConfig& cfg) {
  if (!is_recurrent(model.kind)) {
    throw ConfigError("train: the physics baseline has no trainable parameters");
  }
  if (cfg.epochs < 0) throw ConfigError("train: epochs must be nonnegative");
  if (cfg.tbptt_window < 1) throw ConfigError("train: tbptt_window must be positive");
  if (train_ds.samples.empty()) throw InvalidInputError("train: empty training set");
  if (uses_physics_channel(model.kind)) {
    for (const auto& s : train_ds.samples) {
      if (!s.phys_derivs) {
        throw ConfigError("train: sample '" + s.id + "' lacks the physics channel");
      }
    }
  }

  TrainResult out{std::move(model), {}};
  if (cfg.epochs == 0) return out;
  Model& m = out.model;

  m.norm = compute_normalization(m.layout, train_ds);

  const std::size_t num_samples = train_ds.samples.size();
  const bool multi_objective = m.kind == ModelKind::Mopgrnn;
  const std::size_t num_objectives = multi_objective ? 2 : 1;
  const OdeSystemSpec* energy_spec = nullptr;
  if (multi_objective) {
    energy_spec = cfg.energy_system ? &*cfg.energy_system : &*m.phy;
  }

  // Teacher-forced inputs and targets do not change across epochs. The
  // energy objective measures the model's own discrepancy |dE_M|: simulated
  // ground truth carries none of its own.
  std::vector<Eigen::MatrixXd> features(num_samples);
  std::vector<Eigen::MatrixXd> targets(num_samples);
  std::vector<Eigen::VectorXd> zero_residuals(num_samples);
  for (std::size_t i = 0; i < num_samples; ++i) {
    const auto& s = train_ds.samples[i];
    features[i] = normalize_features(m.norm, assemble_features(m.layout, s.traj, s.phys_derivs));
    targets[i] = s.traj.derivs;
    zero_residuals[i] = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.traj.grid.n));
  }

  const Eigen::VectorXd h0 = Eigen::VectorXd::Zero(m.params.hidden_dim());
  auto denormalize = [&m](Eigen::MatrixXd raw) {
    raw.array().rowwise() *= m.norm.output_scale.transpose().array();
    raw.rowwise() += m.norm.output_mean.transpose();
    return raw;
  };

  AdamConfig adam_cfg = cfg.adam;
  adam_cfg.alpha = cfg.learning_rate;
  AdamState adam = AdamState::init(m.params, adam_cfg);

  DefaultValues defaults;
  defaults.contraction = cfg.contraction;
  defaults.floor = cfg.default_floor;

  Rng shuffle_rng(derive_seed(cfg.seed, 0x0dde7));

  double best_val = kInf;
  GruParams best_params;
  bool have_best = false;

  std::vector<std::size_t> order(num_samples);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (!defaults.initialized()) {
      // Seed the default values from the losses observed before any update.
      std::vector<double> measured(num_objectives, 0.0);
      for (std::size_t i = 0; i < num_samples; ++i) {
        const Eigen::MatrixXd preds =
            denormalize(rnn_forward(m.params, features[i], h0, false).outputs);
        measured[0] += mae_loss(preds, targets[i]).first;
        if (multi_objective) {
          measured[1] +=
              energy_loss_terms(preds, train_ds.samples[i], *energy_spec, &zero_residuals[i])
                  .value;
        }
      }
      defaults.c.resize(num_objectives);
      for (std::size_t j = 0; j < num_objectives; ++j) {
        defaults.c[j] = std::max(defaults.floor, measured[j] / static_cast<double>(num_samples));
      }
    }

    shuffle_rng.shuffle(order);
    std::vector<double> loss_sums(num_objectives, 0.0);

    for (std::size_t idx : order) {
      const RnnForwardResult fwd = rnn_forward(m.params, features[idx], h0, true);
      const Eigen::MatrixXd preds = denormalize(fwd.outputs);

      auto [mae_value, mae_grads] = mae_loss(preds, targets[idx]);
      LossVector sample_losses;
      sample_losses.values.assign(num_objectives, mae_value);
      Eigen::MatrixXd energy_grads;
      if (multi_objective) {
        SampleEnergyLoss el =
            energy_loss_terms(preds, train_ds.samples[idx], *energy_spec, &zero_residuals[idx]);
        sample_losses.values[1] = el.value;
        energy_grads = std::move(el.pred_grads);
      }
      for (std::size_t j = 0; j < num_objectives; ++j) loss_sums[j] += sample_losses.values[j];

      // The backpropagated objective: for the multi-objective regime the
      // active normalized loss, otherwise the plain MAE.
      std::size_t active = 0;
      double grad_scale = 1.0;
      if (multi_objective) {
        active = multi_objective_combine(sample_losses, defaults).active;
        grad_scale = 1.0 / defaults.c[active];
      }
      Eigen::MatrixXd out_grads = active == 0 ? std::move(mae_grads) : std::move(energy_grads);
      out_grads.array().rowwise() *= m.norm.output_scale.transpose().array();
      out_grads *= grad_scale;

      Gradients grads =
          GruParams::zeros(m.params.input_dim(), m.params.hidden_dim(), m.params.output_dim());
      const std::size_t n = fwd.caches.size();
      const auto window = static_cast<std::size_t>(cfg.tbptt_window);
      for (std::size_t begin = 0; begin < n; begin += window) {
        rnn_backward_window(m.params, fwd.caches, out_grads, begin, std::min(begin + window, n),
                            grads);
      }
      try {
        adam_step(adam, m.params, grads);
      } catch (const DivergenceError&) {
        throw DivergenceError("train: non-finite gradients (epoch " + std::to_string(epoch) +
                                  ", sample '" + train_ds.samples[idx].id + "')",
                              static_cast<double>(epoch), idx);
      }
    }

    LossVector epoch_losses;
    for (double s : loss_sums) epoch_losses.values.push_back(s / static_cast<double>(num_samples));
    const CombineResult combined = multi_objective_combine(epoch_losses, defaults);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss_mae = epoch_losses.values[0];
    rec.loss_energy = multi_objective ? epoch_losses.values[1] : 0.0;
    rec.c_mae = defaults.c[0];
    rec.c_energy = multi_objective ? defaults.c[1] : 0.0;
    rec.objective = combined.objective;
    rec.active = static_cast<int>(combined.active);
    if (!val_ds.samples.empty()) {
      rec.val_sim_error = evaluate_sim_error(m, val_ds, cfg.sim_error_discount);
      if (rec.val_sim_error < best_val) {
        best_val = rec.val_sim_error;
        best_params = m.params;
        have_best = true;
      }
    } else {
      rec.val_sim_error = kNaN;
    }
    out.history.push_back(rec);

    defaults = update_defaults(std::move(defaults), epoch_losses);
  }

  if (have_best) m.params = std::move(best_params);
  return out;
}

EnsembleStats ensemble_run(const TrainConfig& cfg, const Dataset& train_ds, const Dataset& val_ds,
                           const Dataset& test_ds, const std::optional<OdeSystemSpec>& phy,
                           const std::vector<std::uint64_t>& seeds, int workers) {
  if (seeds.empty()) throw InvalidInputError("ensemble_run: need at least one seed");
  if (!is_recurrent(cfg.kind)) {
    throw InvalidInputError("ensemble_run: the physics baseline needs no ensemble");
  }

  EnsembleStats stats;
  stats.seeds = seeds;
  stats.per_seed.assign(seeds.size(), kNaN);
  std::vector<std::string> errors(seeds.size());

  const auto state_dim = static_cast<int>(train_ds.state_dim());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= seeds.size()) return;
      try {
        TrainConfig member_cfg = cfg;
        member_cfg.seed = seeds[i];
        Model model = make_model(cfg.kind, cfg.hidden_dim, state_dim, phy, seeds[i]);
        TrainResult result = train(std::move(model), train_ds, val_ds, member_cfg);
        stats.per_seed[i] = evaluate_sim_error(result.model, test_ds, cfg.sim_error_discount);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };

  const int thread_count = std::max(1, std::min<int>(workers, static_cast<int>(seeds.size())));
  if (thread_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(thread_count));
    for (int i = 0; i < thread_count; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<double> ok;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (!errors[i].empty()) {
      stats.failures.push_back("seed " + std::to_string(seeds[i]) + ": " + errors[i]);
    } else {
      ok.push_back(stats.per_seed[i]);
    }
  }
  if (!ok.empty()) {
    stats.mean = std::accumulate(ok.begin(), ok.end(), 0.0) / static_cast<double>(ok.size());
    stats.min = *std::min_element(ok.begin(), ok.end());
    stats.max = *std::max_element(ok.begin(), ok.end());
    if (ok.size() > 1) {
      double ss = 0.0;
      for (double v : ok) ss += (v - stats.mean) * (v - stats.mean);
      stats.stddev = std::sqrt(ss / static_cast<double>(ok.size() - 1));
    }
  } else {
    stats.mean = stats.min = stats.max = kNaN;
  }
  return stats;
}

HyperSearchResult hyperparameter_search(const TrainConfig& base, const std::vector<int>& candidates,
                                        int epoch_budget, const Dataset& train_ds,
                                        const Dataset& val_ds,
                                        const std::optional<OdeSystemSpec>& phy) {
  if (candidates.empty()) throw InvalidInputError("hyperparameter_search: no candidates");
  HyperSearchResult result;
  double best = kInf;
  const auto state_dim = static_cast<int>(train_ds.state_dim());
  for (int hidden : candidates) {
    TrainConfig cfg = base;
    cfg.hidden_dim = hidden;
    if (epoch_budget > 0) cfg.epochs = epoch_budget;
    Model model = make_model(cfg.kind, hidden, state_dim, phy, cfg.seed);
    const TrainResult trained = train(std::move(model), train_ds, val_ds, cfg);
    double val = kInf;
    if (!trained.history.empty()) {
      for (const auto& rec : trained.history) val = std::min(val, rec.val_sim_error);
    }
    if (!std::isfinite(val) && val_ds.samples.empty()) {
      val = evaluate_sim_error(trained.model, train_ds, cfg.sim_error_discount);
    }
    result.rows.push_back({hidden, val});
    if (val < best) {
      best = val;
      result.best_hidden_dim = hidden;
    }
  }
  if (!std::isfinite(best)) result.best_hidden_dim = candidates.front();
  return result;
}

}  // namespace pgrnn
