#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "moveint/dataset.hpp"
#include "moveint/evaluation.hpp"
#include "moveint/gmr.hpp"
#include "moveint/inference.hpp"
#include "moveint/losses.hpp"
#include "moveint/model.hpp"
#include "moveint/training.hpp"

namespace py = pybind11;
using namespace moveint;

namespace {

data::DatasetSplit dataset_from_lists(std::vector<data::TrajectoryPair> train,
                                      std::vector<data::TrajectoryPair> test,
                                      const data::FeatureSpec& spec) {
  data::DatasetSplit split;
  split.train = std::move(train);
  split.test = std::move(test);
  split.manifest = {{"format", "moveint-dataset-v1"},
                    {"feature_spec", spec.to_json()},
                    {"generator", {{"type", "in-memory"}}},
                    {"trajectories", nlohmann::json::array()}};
  return split;
}

}  // namespace

PYBIND11_MODULE(_moveint, m) {
  m.doc() = "Reactive human-robot motion generation: recurrent mixture-density latent "
            "policies over a robot-motion VAE, plus the exact GMR reference machinery";

  // ---- gmr ----
  py::class_<gmr::Gaussian>(m, "Gaussian")
      .def(py::init([](VectorXd mean, MatrixXd cov) {
             return gmr::Gaussian{std::move(mean), std::move(cov)};
           }),
           py::arg("mean"), py::arg("cov"))
      .def_readwrite("mean", &gmr::Gaussian::mean)
      .def_readwrite("cov", &gmr::Gaussian::cov)
      .def("log_density", &gmr::Gaussian::log_density);

  py::class_<gmr::JointGaussianComponent>(m, "JointGaussianComponent")
      .def(py::init([](VectorXd mu_h, VectorXd mu_r, MatrixXd s_hh, MatrixXd s_hr, MatrixXd s_rh,
                       MatrixXd s_rr) {
             gmr::JointGaussianComponent c{std::move(mu_h),  std::move(mu_r), std::move(s_hh),
                                           std::move(s_hr), std::move(s_rh), std::move(s_rr)};
             c.validate();
             return c;
           }),
           py::arg("mu_h"), py::arg("mu_r"), py::arg("sigma_hh"), py::arg("sigma_hr"),
           py::arg("sigma_rh"), py::arg("sigma_rr"))
      .def_readonly("mu_h", &gmr::JointGaussianComponent::mu_h)
      .def_readonly("mu_r", &gmr::JointGaussianComponent::mu_r)
      .def_readonly("sigma_hh", &gmr::JointGaussianComponent::sigma_hh)
      .def_readonly("sigma_rr", &gmr::JointGaussianComponent::sigma_rr);

  py::class_<gmr::JointGMM>(m, "JointGMM")
      .def(py::init([](std::vector<gmr::JointGaussianComponent> comps, VectorXd priors) {
             gmr::JointGMM gmm{std::move(comps), std::move(priors)};
             gmm.validate();
             return gmm;
           }),
           py::arg("components"), py::arg("priors"))
      .def_readonly("priors", &gmr::JointGMM::priors)
      .def("__len__", &gmr::JointGMM::size);

  py::class_<gmr::HMMSpec>(m, "HMMSpec")
      .def(py::init([](std::vector<gmr::Gaussian> states, MatrixXd transition, VectorXd initial) {
             gmr::HMMSpec h{std::move(states), std::move(transition), std::move(initial)};
             h.validate();
             return h;
           }),
           py::arg("states"), py::arg("transition"), py::arg("initial"));

  m.def(
      "condition_gmm",
      [](const gmr::JointGMM& gmm, const VectorXd& z_h, const VectorXd& alphas) {
        const gmr::Conditional c = gmr::condition_gmm(gmm, z_h, alphas);
        return py::make_tuple(c.mean, c.cov);
      },
      py::arg("gmm"), py::arg("z_h"), py::arg("alphas"),
      "GMR conditioning with externally supplied weights; returns (mean, cov)");
  m.def("simplified_covariance", &gmr::simplified_covariance, py::arg("gmm"), py::arg("z_h"),
        py::arg("alphas"));
  m.def("hmm_forward_coefficients", &gmr::hmm_forward_coefficients, py::arg("observations"),
        py::arg("hmm"));

  // ---- datasets ----
  py::enum_<data::Units>(m, "Units")
      .value("meters", data::Units::meters)
      .value("radians", data::Units::radians);

  py::class_<data::TrajectoryPair>(m, "TrajectoryPair")
      .def(py::init([](MatrixXd human, MatrixXd robot, double rate, data::Units units) {
             data::TrajectoryPair t;
             t.human_frames = std::move(human);
             t.robot_frames = std::move(robot);
             t.frame_rate = rate;
             t.units = units;
             t.validate();
             return t;
           }),
           py::arg("human_frames"), py::arg("robot_frames"), py::arg("frame_rate"),
           py::arg("units") = data::Units::meters)
      .def_readonly("human_frames", &data::TrajectoryPair::human_frames)
      .def_readonly("robot_frames", &data::TrajectoryPair::robot_frames)
      .def_readonly("frame_rate", &data::TrajectoryPair::frame_rate)
      .def_readonly("mode", &data::TrajectoryPair::mode)
      .def_property_readonly("action_label", [](const data::TrajectoryPair& t) {
        return t.action_label ? py::cast(*t.action_label) : py::none();
      });

  py::class_<data::FeatureSpec>(m, "FeatureSpec")
      .def(py::init<>())
      .def_readwrite("window", &data::FeatureSpec::window)
      .def_readwrite("human_velocities", &data::FeatureSpec::human_velocities)
      .def_readwrite("robot_velocities", &data::FeatureSpec::robot_velocities);

  py::class_<data::SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("modes", &data::SynthConfig::modes)
      .def_readwrite("train_count", &data::SynthConfig::train_count)
      .def_readwrite("test_count", &data::SynthConfig::test_count)
      .def_readwrite("length", &data::SynthConfig::length)
      .def_readwrite("noise", &data::SynthConfig::noise);

  py::class_<data::DatasetSplit>(m, "DatasetSplit")
      .def(py::init(&dataset_from_lists), py::arg("train"), py::arg("test"),
           py::arg("feature_spec") = data::FeatureSpec{})
      .def_readonly("train", &data::DatasetSplit::train)
      .def_readonly("test", &data::DatasetSplit::test)
      .def_property_readonly(
          "manifest", [](const data::DatasetSplit& d) { return d.manifest.dump(); });

  m.def("downsample", &data::downsample, py::arg("trajectory"), py::arg("target_hz"));
  m.def("compute_velocities", &data::compute_velocities, py::arg("positions"));
  m.def("window_matrix", &data::window_matrix, py::arg("features"), py::arg("window"));
  m.def("synth_interaction_dataset", &data::synth_interaction_dataset, py::arg("config"),
        py::arg("seed"));
  m.def("synth_mode_map", &data::synth_mode_map, py::arg("mode"), py::arg("human_frame"));
  m.def("save_dataset", &data::save_dataset, py::arg("dataset"), py::arg("directory"));
  m.def("load_dataset", &data::load_dataset, py::arg("manifest_path"));

  // ---- model / losses ----
  py::class_<DiagonalGaussian>(m, "DiagonalGaussian")
      .def(py::init(&DiagonalGaussian::from_raw), py::arg("mean"), py::arg("log_std"))
      .def_readonly("mean", &DiagonalGaussian::mean)
      .def_readonly("log_std", &DiagonalGaussian::log_std)
      .def("stddev", &DiagonalGaussian::stddev)
      .def("variance", &DiagonalGaussian::variance);

  py::class_<MixtureDensity>(m, "MixtureDensity")
      .def(py::init([](std::vector<DiagonalGaussian> comps, VectorXd alphas) {
             MixtureDensity mix{std::move(comps), std::move(alphas)};
             mix.validate();
             return mix;
           }),
           py::arg("components"), py::arg("alphas"))
      .def_readonly("components", &MixtureDensity::components)
      .def_readonly("alphas", &MixtureDensity::alphas);

  m.def("combine_mixture", &combine_mixture, py::arg("mixture"));
  m.def("kl_diag_gaussians", &losses::kl_diag_gaussians, py::arg("q"), py::arg("p"));
  m.def(
      "separation_loss",
      [](const MixtureDensity& mix, const std::optional<MixtureDensity>& prev) {
        const losses::SepTerms s = losses::separation_loss(mix, prev ? &*prev : nullptr);
        return py::make_tuple(s.means, s.temporal, s.entropy);
      },
      py::arg("mixture"), py::arg("previous") = std::nullopt,
      "Returns (separation_of_means, temporal_closeness, entropy_cost)");

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("human_dim", &ModelConfig::human_dim)
      .def_readwrite("robot_dim", &ModelConfig::robot_dim)
      .def_readwrite("latent_dim", &ModelConfig::latent_dim)
      .def_readwrite("n_components", &ModelConfig::n_components)
      .def_readwrite("hidden1", &ModelConfig::hidden1)
      .def_readwrite("hidden2", &ModelConfig::hidden2)
      .def_readwrite("recurrent_dim", &ModelConfig::recurrent_dim);

  py::class_<RecurrentState>(m, "RecurrentState")
      .def_readonly("hidden", &RecurrentState::hidden)
      .def_readonly("step", &RecurrentState::step);

  py::class_<MoVEIntModel>(m, "Model")
      .def(py::init<ModelConfig, std::uint64_t>(), py::arg("config"), py::arg("seed") = 0)
      .def_property_readonly("config", &MoVEIntModel::config)
      .def("encode_robot", &MoVEIntModel::encode_robot, py::arg("robot_window"))
      .def("decode_robot", &MoVEIntModel::decode_robot, py::arg("latent"))
      .def("initial_state", &MoVEIntModel::initial_state, py::arg("trajectory_id") = 0)
      .def("mdn_step", &MoVEIntModel::mdn_step, py::arg("human_window"), py::arg("state"));

  // ---- training / inference / evaluation ----
  py::class_<train::TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("beta", &train::TrainConfig::beta)
      .def_readwrite("n_samples", &train::TrainConfig::n_samples)
      .def_readwrite("epochs", &train::TrainConfig::epochs)
      .def_readwrite("step_size", &train::TrainConfig::step_size)
      .def_readwrite("seed", &train::TrainConfig::seed)
      .def_readwrite("separation_enabled", &train::TrainConfig::separation_enabled)
      .def_readwrite("early_stop_patience", &train::TrainConfig::early_stop_patience);

  py::class_<train::TrainResult>(m, "TrainResult")
      .def_readonly("diverged", &train::TrainResult::diverged)
      .def_readonly("diagnostic", &train::TrainResult::diagnostic)
      .def("model", &train::TrainResult::model)
      .def("final_loss", [](const train::TrainResult& r) {
        return r.log.empty() ? std::numeric_limits<double>::quiet_NaN() : r.log.back().loss.total;
      });

  m.def("train", &train::train, py::arg("dataset"), py::arg("model_config"),
        py::arg("train_config"),
        py::call_guard<py::gil_scoped_release>());
  m.def(
      "save_checkpoint",
      [](const std::filesystem::path& path, const MoVEIntModel& model, const std::string& meta) {
        train::save_checkpoint(path, model.config(), model.params(),
                               meta.empty() ? nlohmann::json::object() : nlohmann::json::parse(meta));
      },
      py::arg("path"), py::arg("model"), py::arg("meta") = "");
  m.def("load_checkpoint", [](const std::filesystem::path& path) {
    return train::model_from_checkpoint(train::load_checkpoint(path));
  });

  py::class_<infer::RolloutResult>(m, "RolloutResult")
      .def_readonly("robot_windows", &infer::RolloutResult::robot_windows)
      .def_readonly("alpha_trace", &infer::RolloutResult::alpha_trace)
      .def_readonly("component_windows", &infer::RolloutResult::component_windows)
      .def_readonly("executed_frames", &infer::RolloutResult::executed_frames);

  m.def("rollout_trajectory", &infer::rollout_trajectory, py::arg("model"), py::arg("trajectory"),
        py::arg("feature_spec"), py::arg("stream_id") = 0);

  py::class_<eval::MseRow>(m, "MseRow")
      .def_readonly("action", &eval::MseRow::action)
      .def_readonly("mean", &eval::MseRow::mean)
      .def_readonly("stdev", &eval::MseRow::stdev)
      .def_readonly("trajectories", &eval::MseRow::trajectories);

  m.def("mse_report", &eval::mse_report, py::arg("model"), py::arg("dataset"),
        py::arg("model_units") = data::Units::meters);
  m.def("baseline_mse", &eval::baseline_mse, py::arg("dataset"));
}
