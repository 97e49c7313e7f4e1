#include "pgrnn/dynamics.hpp"

#include <cmath>
#include <numbers>

namespace pgrnn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_state2(const StateVec& x, const char* who) {
  if (x.size() != 2) throw InvalidInputError(std::string(who) + ": state must have dimension 2");
  if (!x.allFinite()) throw InvalidInputError(std::string(who) + ": non-finite state");
}

void check_scalar(double v, const char* who) {
  if (!std::isfinite(v)) throw InvalidInputError(std::string(who) + ": non-finite input");
}

// The residual must cancel exactly against the dynamics, so both are built
// from the same torque subexpressions.
double pendulum_gravity_torque(const PendulumParams& p, double phi) {
  return p.m * p.g * p.l * std::sin(phi);
}

double golf_gravity_torque(const GolfParams& p, double phi) {
  return p.m * p.g * p.a * std::sin(phi);
}

double golf_friction_torque(const GolfParams& p, double phi, double phidot) {
  const double normal_load = std::abs(p.m * phidot * phidot * p.a + p.m * p.g * std::cos(phi));
  return p.r * p.mu * std::tanh(p.gamma * phidot) * normal_load;
}

double require_number(const nlohmann::json& j, const char* field) {
  if (!j.contains(field) || !j.at(field).is_number()) {
    throw SchemaError(std::string("missing numeric field '") + field + "'");
  }
  return j.at(field).get<double>();
}

}  // namespace

void PendulumParams::validate() const {
  if (!(m > 0.0 && l > 0.0 && g > 0.0) || !(d >= 0.0)) {
    throw InvalidInputError("PendulumParams: require m,l,g > 0 and d >= 0");
  }
}

nlohmann::json PendulumParams::to_json() const {
  return {{"m", m}, {"l", l}, {"d", d}, {"g", g}};
}

PendulumParams PendulumParams::from_json(const nlohmann::json& j) {
  PendulumParams p;
  p.m = require_number(j, "m");
  p.l = require_number(j, "l");
  p.d = require_number(j, "d");
  p.g = require_number(j, "g");
  p.validate();
  return p;
}

PendulumParams pendulum_reference_params() { return PendulumParams{50.0, 0.045, 2.1, 9.81}; }
PendulumParams pendulum_model_params() { return PendulumParams{50.0, 0.05, 2.0, 9.81}; }

void GolfParams::validate() const {
  if (!(m > 0.0 && a > 0.0 && J > 0.0 && r > 0.0 && g > 0.0) ||
      !(d >= 0.0 && mu >= 0.0 && gamma >= 0.0)) {
    throw InvalidInputError("GolfParams: require m,a,J,r,g > 0 and d,mu,gamma >= 0");
  }
}

nlohmann::json GolfParams::to_json() const {
  return {{"m", m}, {"a", a}, {"J", J},     {"d", d},
          {"r", r}, {"mu", mu}, {"g", g},   {"gamma", gamma}};
}

GolfParams GolfParams::from_json(const nlohmann::json& j) {
  GolfParams p;
  p.m = require_number(j, "m");
  p.a = require_number(j, "a");
  p.J = require_number(j, "J");
  p.d = require_number(j, "d");
  p.r = require_number(j, "r");
  p.mu = require_number(j, "mu");
  p.g = require_number(j, "g");
  p.gamma = j.contains("gamma") ? require_number(j, "gamma") : 100.0;
  p.validate();
  return p;
}

GolfParams golf_reference_params() {
  return GolfParams{0.5241, 0.4702, 0.1445, 0.0132, 0.0245, 1.5136, 9.81, 100.0};
}

GolfParams golf_model_params() {
  // Perturbed copy standing in for an imperfectly identified model.
  GolfParams p = golf_reference_params();
  p.a = 0.494;
  p.J = 0.150;
  p.d = 0.012;
  p.mu = 1.44;
  return p;
}

void TimeGrid::validate() const {
  if (!(dt > 0.0)) throw InvalidInputError("TimeGrid: dt must be positive");
  if (n < 2) throw InvalidInputError("TimeGrid: need at least 2 samples");
  if (!std::isfinite(t0)) throw InvalidInputError("TimeGrid: non-finite t0");
}

nlohmann::json TimeGrid::to_json() const { return {{"t0", t0}, {"dt", dt}, {"n", n}}; }

TimeGrid TimeGrid::from_json(const nlohmann::json& j) {
  TimeGrid g;
  g.t0 = require_number(j, "t0");
  g.dt = require_number(j, "dt");
  if (!j.contains("n") || !j.at("n").is_number_integer() ||
      j.at("n").get<long long>() < 0) {
    throw SchemaError("TimeGrid: missing sample count 'n'");
  }
  g.n = j.at("n").get<std::size_t>();
  g.validate();
  return g;
}

ExcitationSignal ExcitationSignal::zero() { return ExcitationSignal{}; }

ExcitationSignal ExcitationSignal::sine(double amplitude, double frequency_hz, double phase) {
  ExcitationSignal s;
  s.kind = Kind::Sine;
  s.amplitude = amplitude;
  s.frequency_hz = frequency_hz;
  s.phase = phase;
  s.validate();
  return s;
}

ExcitationSignal ExcitationSignal::step(double amplitude, double step_time) {
  ExcitationSignal s;
  s.kind = Kind::Step;
  s.amplitude = amplitude;
  s.step_time = step_time;
  s.validate();
  return s;
}

ExcitationSignal ExcitationSignal::chirp(double amplitude, double start_hz, double end_hz,
                                         double sweep_duration, double phase) {
  ExcitationSignal s;
  s.kind = Kind::Chirp;
  s.amplitude = amplitude;
  s.frequency_hz = start_hz;
  s.end_frequency_hz = end_hz;
  s.sweep_duration = sweep_duration;
  s.phase = phase;
  s.validate();
  return s;
}

void ExcitationSignal::validate() const {
  if (!std::isfinite(amplitude)) throw InvalidInputError("ExcitationSignal: non-finite amplitude");
  if (frequency_hz < 0.0 || end_frequency_hz < 0.0) {
    throw InvalidInputError("ExcitationSignal: negative frequency");
  }
  if (kind == Kind::Chirp) {
    if (end_frequency_hz < frequency_hz) {
      throw InvalidInputError("ExcitationSignal: chirp end frequency below start");
    }
    if (!(sweep_duration > 0.0)) {
      throw InvalidInputError("ExcitationSignal: chirp needs a positive sweep duration");
    }
  }
}

double ExcitationSignal::eval(double t) const {
  check_scalar(t, "excitation_eval");
  switch (kind) {
    case Kind::Zero:
      return 0.0;
    case Kind::Sine:
      return amplitude * std::sin(kTwoPi * frequency_hz * t + phase);
    case Kind::Step:
      return t < step_time ? 0.0 : amplitude;
    case Kind::Chirp: {
      // Linear sweep from the start to the end frequency over sweep_duration,
      // continuing at the end frequency afterwards.
      const double rate = (end_frequency_hz - frequency_hz) / sweep_duration;
      if (t <= sweep_duration) {
        return amplitude * std::sin(kTwoPi * (frequency_hz * t + 0.5 * rate * t * t) + phase);
      }
      const double theta_end =
          kTwoPi * (frequency_hz * sweep_duration + 0.5 * rate * sweep_duration * sweep_duration);
      return amplitude * std::sin(theta_end + kTwoPi * end_frequency_hz * (t - sweep_duration) + phase);
    }
  }
  return 0.0;
}

std::string to_string(ExcitationSignal::Kind kind) {
  switch (kind) {
    case ExcitationSignal::Kind::Zero: return "zero";
    case ExcitationSignal::Kind::Sine: return "sine";
    case ExcitationSignal::Kind::Step: return "step";
    case ExcitationSignal::Kind::Chirp: return "chirp";
  }
  return "zero";
}

ExcitationSignal::Kind excitation_kind_from_string(const std::string& name) {
  if (name == "zero") return ExcitationSignal::Kind::Zero;
  if (name == "sine") return ExcitationSignal::Kind::Sine;
  if (name == "step") return ExcitationSignal::Kind::Step;
  if (name == "chirp") return ExcitationSignal::Kind::Chirp;
  throw ConfigError("unknown excitation kind '" + name + "'");
}

nlohmann::json ExcitationSignal::to_json() const {
  return {{"kind", to_string(kind)},
          {"amplitude", amplitude},
          {"frequency_hz", frequency_hz},
          {"end_frequency_hz", end_frequency_hz},
          {"phase", phase},
          {"step_time", step_time},
          {"sweep_duration", sweep_duration}};
}

ExcitationSignal ExcitationSignal::from_json(const nlohmann::json& j) {
  ExcitationSignal s;
  s.kind = excitation_kind_from_string(j.value("kind", "zero"));
  s.amplitude = j.value("amplitude", 0.0);
  s.frequency_hz = j.value("frequency_hz", 0.0);
  s.end_frequency_hz = j.value("end_frequency_hz", 0.0);
  s.phase = j.value("phase", 0.0);
  s.step_time = j.value("step_time", 0.0);
  s.sweep_duration = j.value("sweep_duration", 0.0);
  s.validate();
  return s;
}

void Trajectory::validate() const {
  grid.validate();
  const auto n = static_cast<Eigen::Index>(grid.n);
  if (states.rows() != n || derivs.rows() != n || inputs.size() != n) {
    throw InvalidInputError("Trajectory: states, derivs and inputs must match the grid length");
  }
  if (states.cols() != derivs.cols()) {
    throw InvalidInputError("Trajectory: state and derivative dimensions differ");
  }
}

StateVec pendulum_dynamics(const StateVec& x, double u, double t, const PendulumParams& p) {
  check_state2(x, "pendulum_dynamics");
  check_scalar(u, "pendulum_dynamics");
  check_scalar(t, "pendulum_dynamics");
  const double phidot = x[1];
  const double inertia = p.m * p.l * p.l;
  StateVec out(2);
  out[0] = phidot;
  out[1] = (-pendulum_gravity_torque(p, x[0]) - p.d * phidot + u) / inertia;
  return out;
}

StateVec golf_dynamics(const StateVec& x, double u, double t, const GolfParams& p) {
  check_state2(x, "golf_dynamics");
  check_scalar(u, "golf_dynamics");
  check_scalar(t, "golf_dynamics");
  const double phidot = x[1];
  StateVec out(2);
  out[0] = phidot;
  // The commanded motor torque acts through a gear ratio of four.
  out[1] = (-golf_gravity_torque(p, x[0]) - p.d * phidot - golf_friction_torque(p, x[0], phidot) +
            4.0 * u) /
           p.J;
  return out;
}

double pendulum_energy_residual(const StateVec& x, const StateVec& xdot, double u,
                                const PendulumParams& p) {
  const double phidot = x[1];
  const double acc = xdot[1];
  const double inertia = p.m * p.l * p.l;
  return inertia * acc * phidot + pendulum_gravity_torque(p, x[0]) * phidot +
         (p.d * phidot) * phidot - u * phidot;
}

double golf_energy_residual(const StateVec& x, const StateVec& xdot, double u,
                            const GolfParams& p) {
  const double phidot = x[1];
  const double acc = xdot[1];
  return p.J * acc * phidot + golf_gravity_torque(p, x[0]) * phidot + (p.d * phidot) * phidot +
         golf_friction_torque(p, x[0], phidot) * phidot - (4.0 * u) * phidot;
}

std::string to_string(SystemKind kind) {
  return kind == SystemKind::Pendulum ? "pendulum" : "golf";
}

SystemKind system_kind_from_string(const std::string& name) {
  if (name == "pendulum") return SystemKind::Pendulum;
  if (name == "golf") return SystemKind::Golf;
  throw ConfigError("unknown system '" + name + "'");
}

OdeSystemSpec OdeSystemSpec::pendulum(const PendulumParams& p) {
  p.validate();
  return OdeSystemSpec(p);
}

OdeSystemSpec OdeSystemSpec::golf(const GolfParams& p) {
  p.validate();
  return OdeSystemSpec(p);
}

SystemKind OdeSystemSpec::kind() const {
  return std::holds_alternative<PendulumParams>(params_) ? SystemKind::Pendulum : SystemKind::Golf;
}

StateVec OdeSystemSpec::deriv(const StateVec& x, double u, double t) const {
  if (const auto* p = std::get_if<PendulumParams>(&params_)) return pendulum_dynamics(x, u, t, *p);
  return golf_dynamics(x, u, t, std::get<GolfParams>(params_));
}

double OdeSystemSpec::energy_residual(const StateVec& x, const StateVec& xdot, double u,
                                      double t) const {
  (void)t;
  check_state2(x, "energy_residual");
  if (xdot.size() != 2) throw InvalidInputError("energy_residual: derivative must have dimension 2");
  if (const auto* p = std::get_if<PendulumParams>(&params_)) {
    return pendulum_energy_residual(x, xdot, u, *p);
  }
  return golf_energy_residual(x, xdot, u, std::get<GolfParams>(params_));
}

double OdeSystemSpec::inertia() const {
  if (const auto* p = std::get_if<PendulumParams>(&params_)) return p->m * p->l * p->l;
  return std::get<GolfParams>(params_).J;
}

const PendulumParams& OdeSystemSpec::pendulum_params() const {
  if (const auto* p = std::get_if<PendulumParams>(&params_)) return *p;
  throw InvalidInputError("OdeSystemSpec: not a pendulum");
}

const GolfParams& OdeSystemSpec::golf_params() const {
  if (const auto* p = std::get_if<GolfParams>(&params_)) return *p;
  throw InvalidInputError("OdeSystemSpec: not a golf system");
}

nlohmann::json OdeSystemSpec::to_json() const {
  nlohmann::json j;
  j["system"] = to_string(kind());
  j["params"] = kind() == SystemKind::Pendulum ? pendulum_params().to_json()
                                               : golf_params().to_json();
  return j;
}

OdeSystemSpec OdeSystemSpec::from_json(const nlohmann::json& j) {
  const auto kind = system_kind_from_string(j.value("system", ""));
  if (!j.contains("params")) throw SchemaError("OdeSystemSpec: missing 'params'");
  if (kind == SystemKind::Pendulum) return pendulum(PendulumParams::from_json(j.at("params")));
  return golf(GolfParams::from_json(j.at("params")));
}

Trajectory simulate(const OdeSystemSpec& spec, const StateVec& x0,
                    const ExcitationSignal& excitation, const TimeGrid& grid) {
  grid.validate();
  excitation.validate();
  if (x0.size() != spec.state_dim()) {
    throw InvalidInputError("simulate: initial state dimension mismatch");
  }

  const auto n = static_cast<Eigen::Index>(grid.n);
  Trajectory traj;
  traj.grid = grid;
  traj.states.resize(n, spec.state_dim());
  traj.derivs.resize(n, spec.state_dim());
  traj.inputs.resize(n);

  const auto f = [&spec](const StateVec& x, double u, double t) { return spec.deriv(x, u, t); };
  const auto u_of_t = [&excitation](double t) { return excitation.eval(t); };

  StateVec x = x0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = grid.time_at(static_cast<std::size_t>(k));
    const double u = excitation.eval(t);
    traj.states.row(k) = x;
    traj.inputs[k] = u;
    traj.derivs.row(k) = spec.deriv(x, u, t);
    if (k + 1 < n) {
      try {
        x = rk4_step(f, x, u_of_t, t, grid.dt);
      } catch (const DivergenceError&) {
        throw DivergenceError("simulate: diverged", t, static_cast<std::size_t>(k));
      }
    }
  }
  return traj;
}

Eigen::VectorXd numerical_differentiate(const Eigen::VectorXd& series, double dt) {
  if (series.size() < 3) {
    throw InvalidInputError("numerical_differentiate: need at least 3 samples");
  }
  if (!(dt > 0.0)) throw InvalidInputError("numerical_differentiate: dt must be positive");

  const Eigen::Index n = series.size();
  Eigen::VectorXd out(n);
  const double inv2dt = 1.0 / (2.0 * dt);
  out[0] = (-3.0 * series[0] + 4.0 * series[1] - series[2]) * inv2dt;
  for (Eigen::Index k = 1; k + 1 < n; ++k) {
    out[k] = (series[k + 1] - series[k - 1]) * inv2dt;
  }
  out[n - 1] = (3.0 * series[n - 1] - 4.0 * series[n - 2] + series[n - 3]) * inv2dt;
  return out;
}

}  // namespace pgrnn
