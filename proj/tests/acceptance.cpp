// Acceptance suite: one criterion per entry, each printing a PASS/FAIL line.
// Run without arguments for all criteria or with a single criterion number.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

#include "pgrnn/experiment.hpp"
#include "pgrnn/rng.hpp"

using namespace pgrnn;
namespace fs = std::filesystem;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

StateVec state(double phi, double phidot) {
  StateVec x(2);
  x << phi, phidot;
  return x;
}

int workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(std::min(hw, 4u));
}

// ---------------------------------------------------------------------------
// 1. BPTT gradients vs central finite differences.

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  return m;
}

double linear_probe(const GruParams& p, const Eigen::MatrixXd& inputs,
                    const Eigen::MatrixXd& probe) {
  const RnnForwardResult fwd =
      rnn_forward(p, inputs, Eigen::VectorXd::Zero(p.hidden_dim()), false);
  return (fwd.outputs.cwiseProduct(probe)).sum();
}

bool criterion_1() {
  Timer timer;
  const double eps = 1e-6;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    GruParams p = init_params(seed, 4, 4, 2);
    Rng rng(derive_seed(seed, 13));
    for (Eigen::Index i = 0; i < p.bz.size(); ++i) {
      p.bz[i] = 0.1 * rng.uniform(-1.0, 1.0);
      p.br[i] = 0.1 * rng.uniform(-1.0, 1.0);
      p.bh[i] = 0.1 * rng.uniform(-1.0, 1.0);
    }
    const Eigen::MatrixXd inputs = random_matrix(rng, 10, 4);
    const Eigen::MatrixXd probe = random_matrix(rng, 10, 2);

    const RnnForwardResult fwd = rnn_forward(p, inputs, Eigen::VectorXd::Zero(4), true);
    const Gradients analytic = rnn_backward(p, fwd.caches, probe);

    auto grad_blocks = analytic.blocks();
    auto param_blocks = p.blocks();
    for (std::size_t b = 0; b < param_blocks.size(); ++b) {
      double block_norm = 0.0;
      double block_err = 0.0;
      for (Eigen::Index i = 0; i < param_blocks[b].size; ++i) {
        double& theta = param_blocks[b].data[i];
        const double saved = theta;
        theta = saved + eps;
        const double up = linear_probe(p, inputs, probe);
        theta = saved - eps;
        const double down = linear_probe(p, inputs, probe);
        theta = saved;
        const double fd = (up - down) / (2.0 * eps);
        block_norm = std::max(block_norm, std::abs(fd));
        block_err = std::max(block_err, std::abs(fd - grad_blocks[b].data[i]));
      }
      worst = std::max(worst, block_err / std::max(block_norm, 1e-8));
    }
  }
  const bool ok = worst <= 1e-5;
  std::printf("[%s] criterion 1: BPTT vs finite differences, worst relative error %.3e "
              "(limit 1e-5), 20 seeds, %.2f s\n",
              ok ? "PASS" : "FAIL", worst, timer.seconds());
  return ok;
}

// ---------------------------------------------------------------------------
// 2. Energy identity for exact dynamics on both systems.

bool criterion_2() {
  Timer timer;
  const auto pend = OdeSystemSpec::pendulum(pendulum_reference_params());
  const auto golf = OdeSystemSpec::golf(golf_reference_params());
  Rng rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const StateVec x =
        state(rng.uniform(-std::numbers::pi, std::numbers::pi), rng.uniform(-5.0, 5.0));
    const double u = rng.uniform(-5.0, 5.0);
    for (const auto* spec : {&pend, &golf}) {
      const StateVec xdot = spec->deriv(x, u, 0.0);
      worst = std::max(worst, std::abs(spec->energy_residual(x, xdot, u, 0.0)));
    }
  }
  const bool ok = worst <= 1e-12;
  std::printf("[%s] criterion 2: energy identity, max |residual| %.3e over 1000 random "
              "(x, u) pairs per system (limit 1e-12), %.2f s\n",
              ok ? "PASS" : "FAIL", worst, timer.seconds());
  return ok;
}

// ---------------------------------------------------------------------------
// 3. RK4 order on the driven pendulum.

bool criterion_3() {
  Timer timer;
  const auto spec = OdeSystemSpec::pendulum(pendulum_reference_params());
  const auto exc = ExcitationSignal::sine(15.0, 1.0, 0.4);
  const StateVec x0 = state(0.3, 0.0);
  const double horizon = 1.0;

  auto endpoint = [&](double dt) {
    const auto n = static_cast<std::size_t>(std::llround(horizon / dt)) + 1;
    const Trajectory traj = simulate(spec, x0, exc, TimeGrid{0.0, dt, n});
    return StateVec(traj.states.bottomRows(1).transpose());
  };

  const StateVec reference = endpoint(0.00125 / 32.0);
  std::vector<double> errors;
  for (double dt : {0.01, 0.005, 0.0025, 0.00125}) {
    errors.push_back((endpoint(dt) - reference).norm());
  }
  bool ok = true;
  std::string ratios;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    const double ratio = errors[i] / errors[i + 1];
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%.2f", i == 0 ? "" : ", ", ratio);
    ratios += buf;
    ok = ok && ratio >= 12.0 && ratio <= 20.0;
  }
  std::printf("[%s] criterion 3: RK4 halving ratios on the driven pendulum [%s] "
              "(required within [12, 20]), %.2f s\n",
              ok ? "PASS" : "FAIL", ratios.c_str(), timer.seconds());
  return ok;
}

// ---------------------------------------------------------------------------
// 4. Multi-objective scheduler properties.

Dataset scheduler_data(std::uint64_t seed) {
  const auto truth = OdeSystemSpec::pendulum(pendulum_reference_params());
  const auto phy = OdeSystemSpec::pendulum(pendulum_model_params());
  Rng rng(seed);
  std::vector<ExcitationSignal> excitations;
  std::vector<StateVec> x0s;
  for (int i = 0; i < 2; ++i) {
    excitations.push_back(
        ExcitationSignal::sine(rng.uniform(8.0, 16.0), rng.uniform(0.6, 1.2), rng.uniform(0, 6)));
    x0s.push_back(state(rng.uniform(-0.5, 0.5), 0.0));
  }
  Dataset ds = generate_dataset(truth, excitations, x0s, TimeGrid{0.0, 0.01, 51},
                                GenerateOptions{true, 0.0, seed});
  return attach_physics_channel(std::move(ds), phy);
}

bool criterion_4() {
  Timer timer;
  bool ok = true;

  // A short multi-objective run; the recorded history must satisfy every
  // scheduler invariant.
  const Dataset train_ds = scheduler_data(5);
  TrainConfig cfg;
  cfg.kind = ModelKind::Mopgrnn;
  cfg.hidden_dim = 4;
  cfg.epochs = 25;
  cfg.tbptt_window = 32;
  cfg.learning_rate = 0.005;
  cfg.seed = 3;
  Model model = make_model(ModelKind::Mopgrnn, 4, 2,
                           OdeSystemSpec::pendulum(pendulum_model_params()), cfg.seed);
  const TrainResult res = train(std::move(model), train_ds, Dataset{}, cfg);
  double prev_mae = std::numeric_limits<double>::infinity();
  double prev_energy = std::numeric_limits<double>::infinity();
  for (const auto& rec : res.history) {
    ok = ok && rec.c_mae <= prev_mae && rec.c_energy <= prev_energy;
    ok = ok && rec.c_mae >= cfg.default_floor && rec.c_energy >= cfg.default_floor;
    const double expected_j =
        std::max(rec.loss_mae / rec.c_mae, rec.loss_energy / rec.c_energy);
    ok = ok && rec.objective == expected_j;
    const int expected_active =
        rec.loss_mae / rec.c_mae >= rec.loss_energy / rec.c_energy ? 0 : 1;
    ok = ok && rec.active == expected_active;
    prev_mae = rec.c_mae;
    prev_energy = rec.c_energy;
  }
  ok = ok && res.history.size() == 25;

  // Per-index rescaling invariance on random draws.
  Rng rng(99);
  for (int trial = 0; trial < 100 && ok; ++trial) {
    const std::size_t L = 2 + rng.index(3);
    LossVector losses;
    DefaultValues defaults;
    for (std::size_t j = 0; j < L; ++j) {
      losses.values.push_back(rng.uniform(0.0, 4.0));
      defaults.c.push_back(rng.uniform(0.05, 4.0));
    }
    const CombineResult base = multi_objective_combine(losses, defaults);
    for (std::size_t j = 0; j < L; ++j) {
      const double factor = rng.uniform(0.1, 10.0);
      losses.values[j] *= factor;
      defaults.c[j] *= factor;
    }
    const CombineResult scaled = multi_objective_combine(losses, defaults);
    ok = ok && scaled.active == base.active &&
         std::abs(scaled.objective - base.objective) <= 1e-12 * std::max(1.0, base.objective);
  }

  std::printf("[%s] criterion 4: scheduler invariants over a %zu-epoch history plus 100 "
              "rescaling draws, %.2f s\n",
              ok ? "PASS" : "FAIL", res.history.size(), timer.seconds());
  return ok;
}

// ---------------------------------------------------------------------------
// 5. Desk-scale pendulum ordering.

nlohmann::json pendulum_protocol_config() {
  return {{"system", "pendulum"},
          {"params_true", {{"m", 50.0}, {"l", 0.045}, {"d", 2.1}, {"g", 9.81}}},
          {"params_phy", {{"m", 50.0}, {"l", 0.05}, {"d", 2.0}, {"g", 9.81}}},
          {"grid", {{"t0", 0.0}, {"dt", 0.01}, {"n", 501}}},
          {"data",
           {{"seed", 2024},
            {"counts", {{"train", 5}, {"val", 2}, {"test", 3}}},
            {"amplitude_range", {8.0, 20.0}},
            {"frequency_range", {0.4, 1.6}}}},
          {"train",
           {{"hidden_dim", 16},
            {"epochs", 300},
            {"tbptt_window", 250},
            {"learning_rate", 0.003},
            {"lambda", 0.5},
            {"rho", 0.95},
            {"epsilon", 1e-8},
            {"energy_params", "true"},
            {"seed", 1}}},
          {"sweep",
           {{"kinds", {"phy", "rnn", "pgrnn", "mopgrnn"}},
            {"train_counts", {5}},
            {"seeds", {1, 2, 3, 4}},
            {"workers", 2}}},
          {"output_dir", "out"}};
}

bool criterion_5() {
  Timer timer;
  const ExperimentConfig cfg = ExperimentConfig::from_json(pendulum_protocol_config());
  const GeneratedData data = build_datasets(cfg);
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4};

  const Model baseline = make_model(ModelKind::Phy, 0, 2, cfg.phy, 0);
  const double phy_err = evaluate_sim_error(baseline, data.test, cfg.train.sim_error_discount);

  auto run_ensemble = [&](ModelKind kind) {
    TrainConfig tc = cfg.train;
    tc.kind = kind;
    return ensemble_run(tc, data.train, data.val, data.test,
                        needs_physics_model(kind) ? std::optional<OdeSystemSpec>(cfg.phy)
                                                  : std::nullopt,
                        seeds, workers());
  };
  const EnsembleStats rnn = run_ensemble(ModelKind::Rnn);
  const EnsembleStats pgrnn = run_ensemble(ModelKind::Pgrnn);
  const EnsembleStats mopgrnn = run_ensemble(ModelKind::Mopgrnn);

  const bool ok = rnn.failures.empty() && pgrnn.failures.empty() && mopgrnn.failures.empty() &&
                  pgrnn.mean < phy_err && mopgrnn.mean < phy_err && pgrnn.mean < rnn.mean;
  std::printf("[%s] criterion 5: pendulum mean E_sim over 4 seeds: phy %.4g, rnn %.4g, "
              "pgrnn %.4g, mopgrnn %.4g (need pgrnn < phy, mopgrnn < phy, pgrnn < rnn), "
              "%.1f s\n",
              ok ? "PASS" : "FAIL", phy_err, rnn.mean, pgrnn.mean, mopgrnn.mean,
              timer.seconds());
  return ok;
}

// ---------------------------------------------------------------------------
// 6. Golf surrogate plausibility: the energy objective lowers the rollout
// constraint violation on a held-out step excitation.

struct GolfData {
  Dataset train, val;
  Sample step_test;
};

GolfData golf_measured_data() {
  const auto truth = OdeSystemSpec::golf(golf_reference_params());
  const auto phy = OdeSystemSpec::golf(golf_model_params());
  const TimeGrid grid{0.0, 0.01, 501};

  Rng rng(77);
  std::vector<ExcitationSignal> excitations;
  std::vector<StateVec> x0s;
  // Training and validation use sine and chirp excitations only; the step
  // kind stays held out.
  for (int i = 0; i < 7; ++i) {
    if (i % 2 == 0) {
      excitations.push_back(ExcitationSignal::sine(
          rng.uniform(0.3, 0.9), rng.uniform(0.15, 0.45), rng.uniform(0.0, 6.28)));
    } else {
      excitations.push_back(ExcitationSignal::chirp(rng.uniform(0.3, 0.7), 0.15,
                                                    rng.uniform(0.3, 0.5), grid.duration()));
    }
    x0s.push_back(state(rng.uniform(-0.6, 0.6), 0.0));
  }
  Dataset all = generate_dataset(truth, excitations, x0s, grid, GenerateOptions{true, 0.0, 77});
  all = reconstruct_measured(std::move(all));
  auto parts = split_dataset(all, {5, 2, 0}, 7);

  Dataset step_ds = generate_dataset(truth, {ExcitationSignal::step(0.45, 0.5)},
                                     {state(0.2, 0.0)}, grid);
  step_ds = reconstruct_measured(std::move(step_ds));
  step_ds = attach_physics_channel(std::move(step_ds), phy);

  GolfData out;
  out.train = attach_physics_channel(std::move(parts[0]), phy);
  out.val = attach_physics_channel(std::move(parts[1]), phy);
  out.step_test = step_ds.samples.front();
  return out;
}

bool criterion_6() {
  Timer timer;
  const auto phy = OdeSystemSpec::golf(golf_model_params());
  const GolfData data = golf_measured_data();
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4};

  TrainConfig base;
  base.hidden_dim = 16;
  base.epochs = 300;
  base.tbptt_window = 250;
  base.learning_rate = 0.003;
  base.sim_error_discount = 0.5;

  auto mean_violation = [&](ModelKind kind, std::uint64_t seed, bool* finite) {
    TrainConfig tc = base;
    tc.kind = kind;
    tc.seed = seed;
    Model model = make_model(kind, tc.hidden_dim, 2, phy, seed);
    const TrainResult res = train(std::move(model), data.train, data.val, tc);
    try {
      const Trajectory sim =
          rollout(res.model, data.step_test.traj.states.row(0).transpose(),
                  data.step_test.traj.inputs, data.step_test.traj.grid);
      const Eigen::VectorXd trace =
          constraint_violation_trace(res.model, sim, data.step_test, phy);
      *finite = trace.allFinite();
      return trace.mean();
    } catch (const DivergenceError&) {
      *finite = false;
      return std::numeric_limits<double>::infinity();
    }
  };

  double mop_sum = 0.0, pg_sum = 0.0;
  bool mop_finite = true;
  for (std::uint64_t seed : seeds) {
    bool finite = true;
    mop_sum += mean_violation(ModelKind::Mopgrnn, seed, &finite);
    mop_finite = mop_finite && finite;
    pg_sum += mean_violation(ModelKind::Pgrnn, seed, &finite);
  }
  const double mop_avg = mop_sum / static_cast<double>(seeds.size());
  const double pg_avg = pg_sum / static_cast<double>(seeds.size());

  const bool ok = mop_finite && mop_avg < pg_avg;
  std::printf("[%s] criterion 6: golf step-excitation mean violation over 4 seeds: "
              "mopgrnn %.4g (finite: %s) vs pgrnn %.4g (need mopgrnn lower), %.1f s\n",
              ok ? "PASS" : "FAIL", mop_avg, mop_finite ? "yes" : "no", pg_avg,
              timer.seconds());
  return ok;
}

// ---------------------------------------------------------------------------
// 7. Byte-identical retraining.

bool criterion_7() {
  Timer timer;
  const fs::path root =
      fs::temp_directory_path() / ("pgrnn_accept7_" + std::to_string(::getpid()));
  fs::create_directories(root);
  setenv("PGRNN_OUTPUT_ROOT", root.c_str(), 1);

  nlohmann::json j = pendulum_protocol_config();
  j["grid"]["n"] = 201;
  j["data"]["counts"] = {{"train", 3}, {"val", 1}, {"test", 1}};
  j["train"]["epochs"] = 20;
  j["train"]["hidden_dim"] = 8;
  j["sweep"]["train_counts"] = {3};
  const fs::path cfg_path = root / "config.json";
  std::ofstream(cfg_path) << j.dump(2);

  auto file_bytes = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };

  bool ok = cmd_generate(cfg_path.string()) == 0;
  const OutputPaths paths{root / "out"};
  ok = ok && cmd_train(cfg_path.string(), "mopgrnn", 3, 11) == 0;
  const std::string checkpoint1 = file_bytes(paths.checkpoint(ModelKind::Mopgrnn, 3, 11));
  const std::string history1 = file_bytes(paths.history(ModelKind::Mopgrnn, 3, 11));
  ok = ok && cmd_train(cfg_path.string(), "mopgrnn", 3, 11) == 0;
  ok = ok && file_bytes(paths.checkpoint(ModelKind::Mopgrnn, 3, 11)) == checkpoint1;
  ok = ok && file_bytes(paths.history(ModelKind::Mopgrnn, 3, 11)) == history1;
  ok = ok && !checkpoint1.empty() && !history1.empty();

  unsetenv("PGRNN_OUTPUT_ROOT");
  std::error_code ec;
  fs::remove_all(root, ec);
  std::printf("[%s] criterion 7: repeated train invocation is byte-identical "
              "(checkpoint %zu bytes, history %zu bytes), %.1f s\n",
              ok ? "PASS" : "FAIL", checkpoint1.size(), history1.size(), timer.seconds());
  return ok;
}

// ---------------------------------------------------------------------------
// 8. Quadrature oracles for the energy loss and the simulation error.

bool criterion_8() {
  Timer timer;
  const auto truth = OdeSystemSpec::pendulum(pendulum_reference_params());
  const double inertia = truth.inertia();

  const Eigen::Index n = 101;
  Sample sample;
  sample.id = "constant";
  sample.traj.grid = TimeGrid{0.0, 0.02, static_cast<std::size_t>(n)};
  sample.traj.states = Eigen::MatrixXd::Zero(n, 2);
  sample.traj.states.col(0).setConstant(0.3);
  sample.traj.states.col(1).setOnes();
  sample.traj.derivs = Eigen::MatrixXd::Zero(n, 2);
  sample.traj.derivs.col(0).setOnes();
  sample.traj.inputs = Eigen::VectorXd::Zero(n);
  const double duration = sample.traj.grid.duration();

  const double c = 0.37;
  Eigen::MatrixXd energy_preds = sample.traj.derivs;
  energy_preds.col(1).array() += c / inertia;
  const double energy_value = energy_loss_terms(energy_preds, sample, truth).value;
  const double energy_expected = c * duration / static_cast<double>(n);
  const double energy_rel = std::abs(energy_value - energy_expected) / energy_expected;

  const double delta = 0.2;
  Eigen::MatrixXd sim_preds = sample.traj.derivs;
  sim_preds.array() += delta;
  const double sim_value = sim_error_terms(sim_preds, sample, 0.0);
  const double sim_expected = 2.0 * delta * duration / static_cast<double>(n);
  const double sim_rel = std::abs(sim_value - sim_expected) / sim_expected;

  const bool ok = energy_rel <= 1e-10 && sim_rel <= 1e-10;
  std::printf("[%s] criterion 8: quadrature oracles, energy rel err %.2e, sim rel err %.2e "
              "(limit 1e-10), %.2f s\n",
              ok ? "PASS" : "FAIL", energy_rel, sim_rel, timer.seconds());
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  using Criterion = bool (*)();
  const Criterion criteria[] = {criterion_1, criterion_2, criterion_3, criterion_4,
                                criterion_5, criterion_6, criterion_7, criterion_8};

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k < 1 || k > 8) {
      std::fprintf(stderr, "usage: %s [criterion 1..8]...\n", argv[0]);
      return 2;
    }
    selected.push_back(k);
  }
  if (selected.empty()) {
    for (int k = 1; k <= 8; ++k) selected.push_back(k);
  }

  int failures = 0;
  for (int k : selected) {
    if (!criteria[k - 1]()) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
