#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pgrnn/datagen.hpp"
#include "pgrnn/dynamics.hpp"
#include "pgrnn/experiment.hpp"
#include "pgrnn/hybrid.hpp"
#include "pgrnn/rnn.hpp"
#include "pgrnn/training.hpp"

namespace py = pybind11;
using namespace pgrnn;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Grey-box system identification with physics-guided recurrent networks";

  py::register_exception<InvalidInputError>(m, "InvalidInputError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);

  py::class_<PendulumParams>(m, "PendulumParams")
      .def(py::init<double, double, double, double>(), py::arg("m"), py::arg("l"), py::arg("d"),
           py::arg("g"))
      .def_readwrite("m", &PendulumParams::m)
      .def_readwrite("l", &PendulumParams::l)
      .def_readwrite("d", &PendulumParams::d)
      .def_readwrite("g", &PendulumParams::g);

  py::class_<GolfParams>(m, "GolfParams")
      .def(py::init<double, double, double, double, double, double, double, double>(),
           py::arg("m"), py::arg("a"), py::arg("J"), py::arg("d"), py::arg("r"), py::arg("mu"),
           py::arg("g"), py::arg("gamma") = 100.0)
      .def_readwrite("m", &GolfParams::m)
      .def_readwrite("a", &GolfParams::a)
      .def_readwrite("J", &GolfParams::J)
      .def_readwrite("d", &GolfParams::d)
      .def_readwrite("r", &GolfParams::r)
      .def_readwrite("mu", &GolfParams::mu)
      .def_readwrite("g", &GolfParams::g)
      .def_readwrite("gamma", &GolfParams::gamma);

  m.def("pendulum_reference_params", &pendulum_reference_params);
  m.def("pendulum_model_params", &pendulum_model_params);
  m.def("golf_reference_params", &golf_reference_params);
  m.def("golf_model_params", &golf_model_params);

  py::class_<TimeGrid>(m, "TimeGrid")
      .def(py::init([](double t0, double dt, std::size_t n) {
             TimeGrid g{t0, dt, n};
             g.validate();
             return g;
           }),
           py::arg("t0"), py::arg("dt"), py::arg("n"))
      .def_readonly("t0", &TimeGrid::t0)
      .def_readonly("dt", &TimeGrid::dt)
      .def_readonly("n", &TimeGrid::n)
      .def("duration", &TimeGrid::duration);

  py::class_<ExcitationSignal>(m, "ExcitationSignal")
      .def_static("zero", &ExcitationSignal::zero)
      .def_static("sine", &ExcitationSignal::sine, py::arg("amplitude"), py::arg("frequency_hz"),
                  py::arg("phase") = 0.0)
      .def_static("step", &ExcitationSignal::step, py::arg("amplitude"), py::arg("step_time"))
      .def_static("chirp", &ExcitationSignal::chirp, py::arg("amplitude"), py::arg("start_hz"),
                  py::arg("end_hz"), py::arg("sweep_duration"), py::arg("phase") = 0.0)
      .def("eval", &ExcitationSignal::eval, py::arg("t"));

  py::class_<OdeSystemSpec>(m, "OdeSystemSpec")
      .def_static("pendulum", &OdeSystemSpec::pendulum, py::arg("params"))
      .def_static("golf", &OdeSystemSpec::golf, py::arg("params"))
      .def("deriv", &OdeSystemSpec::deriv, py::arg("x"), py::arg("u"), py::arg("t"))
      .def("energy_residual", &OdeSystemSpec::energy_residual, py::arg("x"), py::arg("xdot"),
           py::arg("u"), py::arg("t"))
      .def("inertia", &OdeSystemSpec::inertia)
      .def_property_readonly("state_dim", &OdeSystemSpec::state_dim);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("grid", &Trajectory::grid)
      .def_readonly("states", &Trajectory::states)
      .def_readonly("derivs", &Trajectory::derivs)
      .def_readonly("inputs", &Trajectory::inputs);

  m.def("simulate", &simulate, py::arg("spec"), py::arg("x0"), py::arg("excitation"),
        py::arg("grid"));
  m.def("numerical_differentiate", &numerical_differentiate, py::arg("series"), py::arg("dt"));

  py::class_<Sample>(m, "Sample")
      .def_readonly("traj", &Sample::traj)
      .def_readonly("phys_derivs", &Sample::phys_derivs)
      .def_readonly("id", &Sample::id);

  py::enum_<Split>(m, "Split")
      .value("Train", Split::Train)
      .value("Val", Split::Val)
      .value("Test", Split::Test);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("samples", &Dataset::samples)
      .def_readonly("split", &Dataset::split)
      .def_readonly("system", &Dataset::system)
      .def("state_dim", &Dataset::state_dim)
      .def("__len__", [](const Dataset& ds) { return ds.samples.size(); });

  m.def(
      "generate_dataset",
      [](const OdeSystemSpec& spec, const std::vector<ExcitationSignal>& excitations,
         const std::vector<StateVec>& x0s, const TimeGrid& grid, bool zipped, double noise_sigma,
         std::uint64_t seed) {
        return generate_dataset(spec, excitations, x0s, grid,
                                GenerateOptions{zipped, noise_sigma, seed});
      },
      py::arg("spec"), py::arg("excitations"), py::arg("x0s"), py::arg("grid"),
      py::arg("zipped") = false, py::arg("noise_sigma") = 0.0, py::arg("seed") = 0);
  m.def("attach_physics_channel", &attach_physics_channel, py::arg("dataset"), py::arg("phy"));
  m.def("reconstruct_measured", &reconstruct_measured, py::arg("dataset"));
  m.def("split_dataset", &split_dataset, py::arg("dataset"), py::arg("counts"), py::arg("seed"));
  m.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("path"));
  m.def("load_dataset", &load_dataset, py::arg("path"));

  py::enum_<ModelKind>(m, "ModelKind")
      .value("Phy", ModelKind::Phy)
      .value("Rnn", ModelKind::Rnn)
      .value("Pgrnn", ModelKind::Pgrnn)
      .value("Mopgrnn", ModelKind::Mopgrnn);

  py::class_<Model>(m, "Model")
      .def_readonly("kind", &Model::kind)
      .def_property_readonly("input_dim", [](const Model& m_) { return m_.layout.input_dim(); })
      .def_property_readonly("hidden_dim", [](const Model& m_) {
        return m_.params.empty() ? 0 : static_cast<int>(m_.params.hidden_dim());
      });

  m.def("make_model", &make_model, py::arg("kind"), py::arg("hidden_dim"), py::arg("state_dim"),
        py::arg("phy") = std::nullopt, py::arg("seed") = 1);
  m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
  m.def("load_model", &load_model, py::arg("path"));
  m.def("predict_derivs_teacher_forced", &predict_derivs_teacher_forced, py::arg("model"),
        py::arg("sample"));
  m.def(
      "rollout",
      [](const Model& model, const StateVec& x0, const Eigen::VectorXd& inputs,
         const TimeGrid& grid) { return rollout(model, x0, inputs, grid); },
      py::arg("model"), py::arg("x0"), py::arg("inputs"), py::arg("grid"));
  m.def(
      "rollout_excitation",
      [](const Model& model, const StateVec& x0, const ExcitationSignal& excitation,
         const TimeGrid& grid) { return rollout(model, x0, excitation, grid); },
      py::arg("model"), py::arg("x0"), py::arg("excitation"), py::arg("grid"));
  m.def("constraint_violation_trace", &constraint_violation_trace, py::arg("model"),
        py::arg("rollout_traj"), py::arg("reference"), py::arg("spec"));

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("kind", &TrainConfig::kind)
      .def_readwrite("hidden_dim", &TrainConfig::hidden_dim)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("tbptt_window", &TrainConfig::tbptt_window)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("sim_error_discount", &TrainConfig::sim_error_discount)
      .def_readwrite("contraction", &TrainConfig::contraction)
      .def_readwrite("default_floor", &TrainConfig::default_floor)
      .def_readwrite("seed", &TrainConfig::seed);

  py::class_<EpochRecord>(m, "EpochRecord")
      .def_readonly("epoch", &EpochRecord::epoch)
      .def_readonly("loss_mae", &EpochRecord::loss_mae)
      .def_readonly("loss_energy", &EpochRecord::loss_energy)
      .def_readonly("c_mae", &EpochRecord::c_mae)
      .def_readonly("c_energy", &EpochRecord::c_energy)
      .def_readonly("J", &EpochRecord::objective)
      .def_readonly("active", &EpochRecord::active)
      .def_readonly("val_E_sim", &EpochRecord::val_sim_error);

  m.def(
      "train",
      [](const Model& model, const Dataset& train_ds, const Dataset& val_ds,
         const TrainConfig& cfg) {
        TrainResult res = train(model, train_ds, val_ds, cfg);
        return py::make_tuple(res.model, res.history);
      },
      py::arg("model"), py::arg("train_ds"), py::arg("val_ds"), py::arg("cfg"));
  m.def("evaluate_sim_error", &evaluate_sim_error, py::arg("model"), py::arg("dataset"),
        py::arg("lambda_") = 0.5);
  m.def(
      "energy_loss",
      [](const Model& model, const Dataset& ds, const OdeSystemSpec& spec) {
        return energy_loss(model, ds, spec).value;
      },
      py::arg("model"), py::arg("dataset"), py::arg("spec"));

  m.def(
      "multi_objective_combine",
      [](const std::vector<double>& losses, const std::vector<double>& c) {
        DefaultValues d;
        d.c = c;
        const CombineResult res = multi_objective_combine(LossVector{losses}, d);
        return py::make_tuple(res.objective, res.active);
      },
      py::arg("losses"), py::arg("c"));
  m.def(
      "update_defaults",
      [](const std::vector<double>& c, const std::vector<double>& losses, double rho,
         double floor) {
        DefaultValues d;
        d.c = c;
        d.contraction = rho;
        d.floor = floor;
        return update_defaults(std::move(d), LossVector{losses}).c;
      },
      py::arg("c"), py::arg("losses"), py::arg("rho") = 0.95, py::arg("floor") = 1e-8);

  m.def("cmd_generate", &cmd_generate, py::arg("config_path"));
  m.def("cmd_train", &cmd_train, py::arg("config_path"), py::arg("kind"), py::arg("count"),
        py::arg("seed"));
  m.def("cmd_sweep", &cmd_sweep, py::arg("config_path"));
  m.def("cmd_report", &cmd_report, py::arg("results_dir"));

#ifdef PGRNN_VERSION
  m.attr("__version__") = PGRNN_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
