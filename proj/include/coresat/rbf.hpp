#pragma once

// Gaussian radial-basis-function model of the seriated distance surface.
//
//     y(x) = c0 + sum_m lambda_m * exp(-a * |x - x_m|^2)
//
// Weights come from the Tikhonov-regularized least-squares system
//
//     (Phi + (reg_alpha / S) * P) w = v,
//
// where Phi = <psi_k psi_m> and v = <y psi_m> are sample averages over the S
// sample points, psi_0 = 1 is the optional constant basis function, and P is
// the identity except for a zero at the constant term (the intercept is not
// penalized, so a strongly regularized surface flattens to the sample mean).
//
// The system is solved as the equivalent stacked least-squares problem
// [Psi; sqrt(reg_alpha) P] w ~ [y; 0] by SVD. A frame of wide Gaussians is
// nearly collinear, and forming Phi would square that condition number.

#include "coresat/seriation.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace coresat {

/// Point in matrix-index coordinates: x = row index, y = column index, 1-based.
struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

struct SurfaceSample {
    std::vector<Point2> points;
    std::vector<double> values;
};

struct RbfModel {
    std::vector<Point2> centers;
    Eigen::VectorXd weights; // one per center
    double shape = 1.0;      // a > 0, in index^-2
    bool has_constant_term = true;
    double constant = 0.0;
    double reg_alpha = 0.0;
    double condition_estimate = 1.0; // 2-norm condition of the stacked design
};

struct RbfSettings {
    double spacing = 0.0;        // frame spacing R; <= 0 selects N / 6
    double residual = 0.5;       // p in (0, 1)
    double reg_alpha = 0.0;      // [0, 100)
    bool constant_term = true;
};

inline constexpr double kConditionWarning = 1e12;

/// Cells (i, j) with i <= j of the normalized matrix, at coordinates (i + 1, j + 1).
SurfaceSample upper_triangle_sample(const SeriatedMatrix& s);

/// Centers on the boundary of the square [1 - R, N + R]^2, i.e. a frame at
/// distance R outside the index square [1, N]^2. Each side is split into
/// ceil(side / R) equal segments (spacing <= R); corners included once.
/// Throws when N < 2, R <= 0 or R >= N.
std::vector<Point2> frame_centers(std::size_t n, double spacing);

/// a = -ln(p) / R^2, so that exp(-a R^2) = p.
double shape_from_residual(double spacing, double residual);

double gaussian_kernel(double shape, double squared_distance);

/// Throws Error when reg_alpha < 0, the sample is empty, or the design is
/// numerically rank deficient.
RbfModel fit(const SurfaceSample& sample, std::vector<Point2> centers, double shape,
             double reg_alpha, bool with_constant);

/// Frame centers, shape from (R, p) and fit for a seriated matrix.
RbfModel fit_surface(const SeriatedMatrix& s, const RbfSettings& settings);

double evaluate(const RbfModel& model, Point2 point);

/// Sum of squared errors over the sample.
double training_residual(const RbfModel& model, const SurfaceSample& sample);

/// Squared norm of the kernel weights (the penalized part).
double weight_norm_squared(const RbfModel& model);

/// {centers, weights, a, c0, reg_alpha}
void write_model_json(const RbfModel& model, const std::filesystem::path& path);
RbfModel read_model_json(const std::filesystem::path& path);

/// Model evaluated on the integer grid 1..n x 1..n: `i,j,height` rows.
void write_surface_csv(const RbfModel& model, std::size_t n, const std::filesystem::path& path);

/// Surface over the seriated matrix with dashed contours every 0.2 and the
/// d_bound contour highlighted.
void write_surface_svg(const RbfModel& model, const std::vector<std::string>& labels,
                       std::optional<double> d_bound, const std::filesystem::path& path);

} // namespace coresat
