#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>

#include <json.hpp>

#include "pgrnn/errors.hpp"

namespace pgrnn {

using StateVec = Eigen::VectorXd;

// Torque-driven damped pendulum. Ground truth and physics model share the
// structure and differ only in parameter values.
struct PendulumParams {
  double m = 50.0;    // mass, kg
  double l = 0.045;   // arm length, m
  double d = 2.1;     // damping constant, kg m^2/s
  double g = 9.81;    // gravitational constant, m/s^2

  void validate() const;
  nlohmann::json to_json() const;
  static PendulumParams from_json(const nlohmann::json& j);
};

// Benchmark parameter sets for the pendulum.
PendulumParams pendulum_reference_params();  // the simulated plant
PendulumParams pendulum_model_params();      // the imperfect physics model

// Golf robot club-head dynamics with a smooth static/sliding friction term.
struct GolfParams {
  double m = 0.5241;     // club-head mass, kg
  double a = 0.4702;     // CoG to rotation axis, m
  double J = 0.1445;     // moment of inertia, kg m^2
  double d = 0.0132;     // damping constant, kg m^2/s
  double r = 0.0245;     // friction point distance, m
  double mu = 1.5136;    // friction coefficient
  double g = 9.81;       // gravitational constant, m/s^2
  double gamma = 100.0;  // tanh slope of the friction model, s/rad

  void validate() const;
  nlohmann::json to_json() const;
  static GolfParams from_json(const nlohmann::json& j);
};

GolfParams golf_reference_params();  // nominal test-bench values
GolfParams golf_model_params();      // perturbed copy used as physics model

// Equally spaced sampling grid t_k = t0 + k*dt.
struct TimeGrid {
  double t0 = 0.0;
  double dt = 0.01;
  std::size_t n = 2;

  double time_at(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
  double duration() const { return static_cast<double>(n - 1) * dt; }
  void validate() const;
  nlohmann::json to_json() const;
  static TimeGrid from_json(const nlohmann::json& j);
};

// Scalar torque excitation u(t).
struct ExcitationSignal {
  enum class Kind { Zero, Sine, Step, Chirp };

  Kind kind = Kind::Zero;
  double amplitude = 0.0;
  double frequency_hz = 0.0;      // sine frequency; chirp start frequency
  double end_frequency_hz = 0.0;  // chirp end frequency
  double phase = 0.0;             // rad
  double step_time = 0.0;         // s, onset of the step
  double sweep_duration = 0.0;    // s, chirp time from start to end frequency

  static ExcitationSignal zero();
  static ExcitationSignal sine(double amplitude, double frequency_hz, double phase = 0.0);
  static ExcitationSignal step(double amplitude, double step_time);
  static ExcitationSignal chirp(double amplitude, double start_hz, double end_hz,
                                double sweep_duration, double phase = 0.0);

  double eval(double t) const;
  void validate() const;
  nlohmann::json to_json() const;
  static ExcitationSignal from_json(const nlohmann::json& j);
};

std::string to_string(ExcitationSignal::Kind kind);
ExcitationSignal::Kind excitation_kind_from_string(const std::string& name);

inline double excitation_eval(const ExcitationSignal& signal, double t) { return signal.eval(t); }

// One recorded sequence: states x_k (rows), state derivatives, control inputs.
struct Trajectory {
  TimeGrid grid;
  Eigen::MatrixXd states;  // n x state_dim
  Eigen::MatrixXd derivs;  // n x state_dim
  Eigen::VectorXd inputs;  // n

  Eigen::Index state_dim() const { return states.cols(); }
  void validate() const;
};

StateVec pendulum_dynamics(const StateVec& x, double u, double t, const PendulumParams& p);
StateVec golf_dynamics(const StateVec& x, double u, double t, const GolfParams& p);

double pendulum_energy_residual(const StateVec& x, const StateVec& xdot, double u,
                                const PendulumParams& p);
double golf_energy_residual(const StateVec& x, const StateVec& xdot, double u,
                            const GolfParams& p);

enum class SystemKind { Pendulum, Golf };

std::string to_string(SystemKind kind);
SystemKind system_kind_from_string(const std::string& name);

// A benchmark ODE system together with one concrete parameter vector.
// Provides the dynamics f(x, u, t) and the instantaneous power-balance
// residual of a (state, derivative) pair under these parameters.
class OdeSystemSpec {
 public:
  static OdeSystemSpec pendulum(const PendulumParams& p);
  static OdeSystemSpec golf(const GolfParams& p);

  SystemKind kind() const;
  int state_dim() const { return 2; }

  StateVec deriv(const StateVec& x, double u, double t) const;
  double energy_residual(const StateVec& x, const StateVec& xdot, double u, double t) const;
  // Rotational inertia (m l^2 or J); the residual is linear in the angular
  // acceleration with slope inertia * phidot.
  double inertia() const;

  const PendulumParams& pendulum_params() const;
  const GolfParams& golf_params() const;

  nlohmann::json to_json() const;
  static OdeSystemSpec from_json(const nlohmann::json& j);

 private:
  explicit OdeSystemSpec(std::variant<PendulumParams, GolfParams> params)
      : params_(std::move(params)) {}
  std::variant<PendulumParams, GolfParams> params_;
};

// Classical 4th-order Runge-Kutta step; the control is evaluated at the
// substage times t, t + dt/2 and t + dt.
template <typename Dynamics, typename Input>
StateVec rk4_step(Dynamics&& f, const StateVec& x, Input&& u_of_t, double t, double dt) {
  if (!(dt > 0.0)) throw InvalidInputError("rk4_step: dt must be positive");
  const double u0 = u_of_t(t);
  const double um = u_of_t(t + 0.5 * dt);
  const double u1 = u_of_t(t + dt);
  const StateVec k1 = f(x, u0, t);
  const StateVec k2 = f(x + 0.5 * dt * k1, um, t + 0.5 * dt);
  const StateVec k3 = f(x + 0.5 * dt * k2, um, t + 0.5 * dt);
  const StateVec k4 = f(x + dt * k3, u1, t + dt);
  StateVec next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) {
    throw DivergenceError("rk4_step: non-finite state", t, 0);
  }
  return next;
}

Trajectory simulate(const OdeSystemSpec& spec, const StateVec& x0,
                    const ExcitationSignal& excitation, const TimeGrid& grid);

// Second-order finite differences: central stencil in the interior, one-sided
// three-point stencils at both ends. Output length equals input length.
Eigen::VectorXd numerical_differentiate(const Eigen::VectorXd& series, double dt);

}  // namespace pgrnn
