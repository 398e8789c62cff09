#include "moveint/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "moveint/inference.hpp"

namespace moveint::eval {

double trajectory_mse(const MatrixXd& predicted_windows, const MatrixXd& ground_truth_windows,
                      data::Units units) {
  if (predicted_windows.rows() != ground_truth_windows.rows() ||
      predicted_windows.cols() != ground_truth_windows.cols())
    throw std::invalid_argument("trajectory_mse: shape mismatch");
  const double scale = units == data::Units::meters ? 100.0 : 1.0;  // meters -> cm
  return (scale * (predicted_windows - ground_truth_windows)).array().square().mean();
}

namespace {

std::vector<MseRow> aggregate(const std::vector<std::pair<std::string, double>>& per_traj) {
  std::map<std::string, std::vector<double>> groups;
  for (const auto& [action, mse] : per_traj) groups[action].push_back(mse);
  std::vector<MseRow> rows;
  for (const auto& [action, values] : groups) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= values.size();
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= values.size();  // population variance
    rows.push_back({action, mean, std::sqrt(var), static_cast<int>(values.size())});
  }
  return rows;
}

}  // namespace

std::vector<MseRow> mse_report(const MoVEIntModel& model, const data::DatasetSplit& dataset,
                               data::Units model_units) {
  if (dataset.test.empty()) throw std::invalid_argument("mse_report: empty test split");
  const data::FeatureSpec spec = dataset.feature_spec();

  std::vector<std::pair<std::string, double>> per_traj;
  std::uint64_t stream_id = 0;
  for (const auto& traj : dataset.test) {
    if (traj.units != model_units)
      throw std::invalid_argument(
          "mse_report: dataset units do not match the units the model was trained in");
    const data::WindowedPair win = data::build_windows(traj, spec);
    const infer::RolloutResult roll =
        infer::rollout_trajectory(model, traj, spec, stream_id++);
    per_traj.emplace_back(traj.action_label.value_or("all"),
                          trajectory_mse(roll.robot_windows, win.robot, traj.units));
  }
  return aggregate(per_traj);
}

std::vector<MseRow> baseline_mse(const data::DatasetSplit& dataset) {
  if (dataset.test.empty()) throw std::invalid_argument("baseline_mse: empty test split");
  if (dataset.train.empty()) throw std::invalid_argument("baseline_mse: empty training split");
  const data::FeatureSpec spec = dataset.feature_spec();

  // Per-timestep mean robot window over the training split; timesteps past a
  // trajectory's end simply do not contribute, and test timesteps beyond the
  // longest training trajectory repeat the last mean window.
  Eigen::Index max_len = 0;
  const Eigen::Index width = data::build_windows(dataset.train.front(), spec).robot.cols();
  for (const auto& traj : dataset.train) max_len = std::max(max_len, traj.length());
  MatrixXd sums = MatrixXd::Zero(max_len, width);
  VectorXd counts = VectorXd::Zero(max_len);
  for (const auto& traj : dataset.train) {
    const MatrixXd win = data::build_windows(traj, spec).robot;
    sums.topRows(win.rows()) += win;
    counts.head(win.rows()).array() += 1.0;
  }
  MatrixXd mean_windows(max_len, width);
  for (Eigen::Index t = 0; t < max_len; ++t) mean_windows.row(t) = sums.row(t) / counts(t);

  std::vector<std::pair<std::string, double>> per_traj;
  for (const auto& traj : dataset.test) {
    const MatrixXd gt = data::build_windows(traj, spec).robot;
    MatrixXd pred(gt.rows(), gt.cols());
    for (Eigen::Index t = 0; t < gt.rows(); ++t)
      pred.row(t) = mean_windows.row(std::min(t, max_len - 1));
    per_traj.emplace_back(traj.action_label.value_or("all"),
                          trajectory_mse(pred, gt, traj.units));
  }
  return aggregate(per_traj);
}

void write_mse_csv(const std::filesystem::path& path, const std::vector<MseRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os << "# per-trajectory MSE aggregated per action; std is the population "
        "std over trajectories; positions in cm, angles in rad\n";
  os << "action,mse_mean,mse_std,trajectories\n";
  os.precision(17);
  for (const auto& r : rows)
    os << r.action << ',' << r.mean << ',' << r.stdev << ',' << r.trajectories << '\n';
}

std::string format_mse_table(const std::vector<MseRow>& rows) {
  std::ostringstream os;
  os.precision(4);
  for (const auto& r : rows)
    os << r.action << ": " << r.mean << " +/- " << r.stdev << " (n=" << r.trajectories << ")\n";
  return os.str();
}

}  // namespace moveint::eval
