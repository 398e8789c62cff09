#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "moveint/common.hpp"

namespace moveint::plot {

struct Series {
  MatrixXd points;  // T x d; d >= 3 is drawn with an oblique 3-D projection
  std::string color;
  std::string label;
};

// Static SVG of one or more trajectories (observed, generated, per-component).
void write_trajectory_svg(const std::filesystem::path& path, const std::vector<Series>& series);

// Mixture-coefficient progression: one line per component over timesteps.
void write_alpha_svg(const std::filesystem::path& path, const MatrixXd& alpha_trace);

// Default palette: generated motion first, then per-component colors.
const std::vector<std::string>& component_palette();

}  // namespace moveint::plot
