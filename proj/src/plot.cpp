#include "moveint/plot.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace moveint::plot {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 540.0;
constexpr double kMargin = 48.0;

struct Range {
  double lo = 0.0, hi = 1.0;
  void grow(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double map(double v, double out_lo, double out_hi) const {
    const double span = hi - lo;
    const double t = span > 0.0 ? (v - lo) / span : 0.5;
    return out_lo + t * (out_hi - out_lo);
  }
};

// Oblique projection for 3-D points; 2-D points pass through.
std::pair<double, double> project(const Eigen::RowVectorXd& p) {
  if (p.size() >= 3) return {p(0) + 0.35 * p(2), p(1) + 0.35 * p(2)};
  if (p.size() == 2) return {p(0), p(1)};
  return {static_cast<double>(p(0)), 0.0};
}

void polyline(std::ofstream& os, const MatrixXd& pts, const Range& rx, const Range& ry,
              const std::string& color, double opacity) {
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" stroke-opacity=\""
     << opacity << "\" points=\"";
  for (Eigen::Index t = 0; t < pts.rows(); ++t) {
    const auto [u, v] = project(pts.row(t));
    os << rx.map(u, kMargin, kWidth - kMargin) << ','
       << ry.map(v, kHeight - kMargin, kMargin) << ' ';
  }
  os << "\"/>\n";
}

std::ofstream open_svg(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return os;
}

}  // namespace

const std::vector<std::string>& component_palette() {
  static const std::vector<std::string> palette = {"green", "magenta", "orange",
                                                   "teal",  "purple",  "brown"};
  return palette;
}

void write_trajectory_svg(const std::filesystem::path& path, const std::vector<Series>& series) {
  if (series.empty()) throw std::invalid_argument("write_trajectory_svg: nothing to plot");
  Range rx, ry;
  bool first = true;
  for (const auto& s : series)
    for (Eigen::Index t = 0; t < s.points.rows(); ++t) {
      const auto [u, v] = project(s.points.row(t));
      if (first) {
        rx = {u, u};
        ry = {v, v};
        first = false;
      } else {
        rx.grow(u);
        ry.grow(v);
      }
    }

  std::ofstream os = open_svg(path);
  double legend_y = kMargin;
  for (const auto& s : series) {
    polyline(os, s.points, rx, ry, s.color, 0.9);
    os << "<text x=\"" << kWidth - kMargin - 150 << "\" y=\"" << legend_y << "\" fill=\""
       << s.color << "\" font-size=\"13\">" << s.label << "</text>\n";
    legend_y += 16.0;
  }
  os << "</svg>\n";
}

void write_alpha_svg(const std::filesystem::path& path, const MatrixXd& alpha_trace) {
  if (alpha_trace.rows() == 0) throw std::invalid_argument("write_alpha_svg: empty trace");
  std::ofstream os = open_svg(path);
  Range rx{0.0, static_cast<double>(alpha_trace.rows() - 1)};
  Range ry{0.0, 1.0};
  if (alpha_trace.rows() == 1) rx.hi = 1.0;

  // frame + unit gridline
  os << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kWidth - 2 * kMargin
     << "\" height=\"" << kHeight - 2 * kMargin
     << "\" fill=\"none\" stroke=\"gray\" stroke-width=\"0.8\"/>\n";

  const auto& palette = component_palette();
  for (Eigen::Index i = 0; i < alpha_trace.cols(); ++i) {
    MatrixXd pts(alpha_trace.rows(), 2);
    for (Eigen::Index t = 0; t < alpha_trace.rows(); ++t)
      pts.row(t) << static_cast<double>(t), alpha_trace(t, i);
    polyline(os, pts, rx, ry, palette[i % palette.size()], 1.0);
  }
  os << "</svg>\n";
}

}  // namespace moveint::plot
