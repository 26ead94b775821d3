#pragma once

// Dynamic time warping between multivariate (mean, std, alpha) series and the
// pairwise distance matrix over an asset universe.

#include "coresat/stats.hpp"

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coresat {

enum class LocalMetric { Manhattan, Euclidean, SquaredEuclidean };

inline constexpr std::array<LocalMetric, 3> kAllMetrics = {
    LocalMetric::Manhattan, LocalMetric::Euclidean, LocalMetric::SquaredEuclidean};

/// "manhattan", "euclidean", "sqeuclidean"
std::string_view metric_name(LocalMetric metric);

/// Accepts the canonical names plus a few aliases; throws ConfigError otherwise.
LocalMetric parse_metric(std::string_view name);

using Point3 = std::array<double, 3>;

/// Symmetric N x N matrix of DTW distances with zero diagonal.
struct DistanceMatrix {
    std::vector<std::string> labels;
    Eigen::MatrixXd d;
    LocalMetric metric = LocalMetric::SquaredEuclidean;
};

/// (mean_return, std_dev, alpha) per year.
std::vector<Point3> as_points(const SampleVectorSeries& series);

/// Pooled z-scoring of each of the three variables across all assets and years
/// (population standard deviation). Throws on zero pooled variance.
std::vector<SampleVectorSeries> standardize_panel(const std::vector<SampleVectorSeries>& series);

double local_cost(const Point3& a, const Point3& b, LocalMetric metric);

/// T x T matrix with entry (t, u) = local_cost(a[t], b[u]).
Eigen::MatrixXd local_cost_matrix(std::span<const Point3> a, std::span<const Point3> b,
                                  LocalMetric metric);

/// Minimum summed local cost over monotone warping paths from (0, 0) to
/// (T-1, T-1) with unit-weight steps (1,0), (0,1), (1,1).
double dtw_distance(std::span<const Point3> a, std::span<const Point3> b, LocalMetric metric);
double dtw_distance(const SampleVectorSeries& a, const SampleVectorSeries& b, LocalMetric metric);

inline constexpr std::size_t kBruteForceMaxLength = 8;

/// Exhaustive enumeration of every admissible warping path. T <= kBruteForceMaxLength.
double dtw_distance_brute(std::span<const Point3> a, std::span<const Point3> b, LocalMetric metric);

/// Upper triangle computed, then mirrored. Throws when series lengths or year
/// grids differ.
DistanceMatrix pairwise_matrix(const std::vector<SampleVectorSeries>& series, LocalMetric metric);

/// CSV with a header row and first column of labels.
void write_distance_csv(const DistanceMatrix& m, const std::filesystem::path& path);
DistanceMatrix read_distance_csv(const std::filesystem::path& path, LocalMetric metric);

/// {labels, metric, rows}
void write_distance_json(const DistanceMatrix& m, const std::filesystem::path& path);
DistanceMatrix read_distance_json(const std::filesystem::path& path);

} // namespace coresat
