#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pgrnn/dynamics.hpp"

namespace pgrnn {

// One excitation-response sequence. phys_derivs, when present, holds the
// physics model's derivative evaluated along the recorded states and is fed
// to hybrid models as an extra input channel.
struct Sample {
  Trajectory traj;
  std::optional<Eigen::MatrixXd> phys_derivs;  // n x state_dim
  std::string id;
};

enum class Split { Train, Val, Test };

std::string to_string(Split split);
Split split_from_string(const std::string& name);

struct Dataset {
  std::vector<Sample> samples;
  Split split = Split::Train;
  std::string system;

  Eigen::Index state_dim() const {
    return samples.empty() ? 0 : samples.front().traj.state_dim();
  }
};

struct GenerateOptions {
  bool zipped = false;        // pair excitations and x0s index-wise instead of Cartesian
  double noise_sigma = 0.0;   // additive Gaussian noise on recorded states
  std::uint64_t seed = 0;     // drives per-sample noise streams
};

Dataset generate_dataset(const OdeSystemSpec& spec,
                         const std::vector<ExcitationSignal>& excitations,
                         const std::vector<StateVec>& x0s, const TimeGrid& grid,
                         const GenerateOptions& options = {});

// Evaluates phy along each sample's recorded states and stores the result as
// the physics channel. Idempotent for a fixed phy.
Dataset attach_physics_channel(Dataset ds, const OdeSystemSpec& phy);

// Keeps only the measured angle and rebuilds angular velocity and the full
// derivative columns by numerical differentiation. Drops any stale physics
// channel; re-attach afterwards.
Dataset reconstruct_measured(Dataset ds);

// Deterministic disjoint splits; counts are (train, val, test).
std::array<Dataset, 3> split_dataset(const Dataset& ds, const std::array<std::size_t, 3>& counts,
                                     std::uint64_t seed);

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

nlohmann::json dataset_to_json(const Dataset& ds);
Dataset dataset_from_json(const nlohmann::json& j);

bool datasets_equal(const Dataset& a, const Dataset& b);

// Random sequence draws used by config-driven generation: excitation
// parameters and initial states are sampled per sequence from the given
// ranges, deterministically in the seed.
struct SequenceDrawSpec {
  std::size_t count = 0;
  std::vector<ExcitationSignal::Kind> kinds = {ExcitationSignal::Kind::Sine};
  std::array<double, 2> amplitude_range{8.0, 20.0};
  std::array<double, 2> frequency_range{0.4, 1.6};
  std::array<double, 2> chirp_end_frequency_range{1.0, 3.0};
  std::array<double, 2> step_time_range{0.2, 1.0};
  std::array<double, 2> initial_angle_range{-1.5707963267948966, 1.5707963267948966};
  std::array<double, 2> initial_velocity_range{0.0, 0.0};
  double chirp_sweep_duration = 0.0;  // 0 means the full grid duration
};

struct DrawnSequences {
  std::vector<ExcitationSignal> excitations;
  std::vector<StateVec> x0s;
};

DrawnSequences draw_sequences(const SequenceDrawSpec& spec, const TimeGrid& grid,
                              std::uint64_t seed);

}  // namespace pgrnn
