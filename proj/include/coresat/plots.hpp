#pragma once

// Minimal static SVG rendering for the pipeline reports.

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace coresat::plots {

struct Segment {
    double x0, y0, x1, y1;
};

/// Marching-squares iso-line of `grid` at `level`. Grid node (r, c) sits at
/// coordinates (r, c); segments are returned in those coordinates.
std::vector<Segment> contour(const Eigen::MatrixXd& grid, double level);

/// Matrix as gray cells, 0 = white, 1 = black (values clamped to [0, 1]).
std::string heatmap_svg(const Eigen::MatrixXd& values, const std::vector<std::string>& labels,
                        const std::string& title);

/// Height field sampled on a regular grid spanning matrix coordinates
/// [1, n] x [1, n], with dashed white contours at `levels` and an optional
/// highlighted contour.
std::string surface_svg(const Eigen::MatrixXd& grid, const std::vector<std::string>& labels,
                        const std::vector<double>& levels, std::optional<double> highlight,
                        const std::string& title);

/// Step plot of an ECDF with the kink window as dotted lines and the chosen
/// (value, p) point marked.
std::string ecdf_svg(const std::vector<double>& sorted_values, const std::vector<double>& probabilities,
                     double window_lo, double window_hi, double kink_value, double kink_p,
                     const std::string& title);

void write_text(const std::filesystem::path& path, const std::string& text);

} // namespace coresat::plots
