#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "moveint/dataset.hpp"
#include "moveint/model.hpp"

namespace moveint::eval {

struct MseRow {
  std::string action;  // action label, or "all" for unlabeled data
  double mean = 0.0;
  double stdev = 0.0;  // population std over per-trajectory MSEs
  int trajectories = 0;
};

// Squared error between predicted and ground-truth windows, averaged over
// all timesteps and window dimensions. Position data is converted to cm
// before squaring; angle data stays in radians.
double trajectory_mse(const MatrixXd& predicted_windows, const MatrixXd& ground_truth_windows,
                      data::Units units);

// Rollout-vs-ground-truth MSE on the test split, grouped by action label.
// The model must have been trained in the dataset's units (checked via the
// units argument recorded in the checkpoint metadata).
std::vector<MseRow> mse_report(const MoVEIntModel& model, const data::DatasetSplit& dataset,
                               data::Units model_units);

// Same protocol with the constant predictor: the per-timestep mean robot
// window over the training split.
std::vector<MseRow> baseline_mse(const data::DatasetSplit& dataset);

void write_mse_csv(const std::filesystem::path& path, const std::vector<MseRow>& rows);
std::string format_mse_table(const std::vector<MseRow>& rows);

}  // namespace moveint::eval
