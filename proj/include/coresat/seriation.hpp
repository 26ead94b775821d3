#pragma once

#include "coresat/dtw.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace coresat {

/// Distance matrix reordered by ascending mean distance and scaled into [0, 1].
struct SeriatedMatrix {
    std::vector<std::size_t> order;  // order[k] = original index of the k-th asset
    std::vector<std::string> labels; // labels in seriation order
    Eigen::MatrixXd d_norm;
    double max_raw = 0.0;
    LocalMetric metric = LocalMetric::SquaredEuclidean;
};

/// Permutation sorting assets by ascending row sum; ties keep input order.
std::vector<std::size_t> order_by_mean_distance(const DistanceMatrix& d);

/// Permutes rows and columns by `order` and divides by the global maximum.
/// Throws when every entry is zero.
SeriatedMatrix normalize_minmax(const DistanceMatrix& d, std::span<const std::size_t> order);

/// order_by_mean_distance followed by normalize_minmax.
SeriatedMatrix seriate(const DistanceMatrix& d);

/// Rows/columns labeled in seriation order.
void write_seriated_csv(const SeriatedMatrix& s, const std::filesystem::path& path);

/// White (0) to black (1) heatmap of the normalized matrix.
void write_heatmap_svg(const SeriatedMatrix& s, const std::filesystem::path& path);

} // namespace coresat
