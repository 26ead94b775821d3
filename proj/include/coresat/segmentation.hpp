#pragma once

// Threshold selection on the ECDF of normalized distances, core-block
// delimitation on the modeled surface and the cross-metric intersection.

#include "coresat/rbf.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace coresat {

/// Ascending normalized distances of the strict upper triangle with
/// probabilities k / K.
struct EcdfCurve {
    std::vector<double> sorted_values;
    std::vector<double> probabilities;
};

struct KinkWindow {
    double lo = 0.60;
    double hi = 0.90;
};

inline constexpr KinkWindow kUpperKinkWindow{0.60, 0.90};
inline constexpr KinkWindow kLowerKinkWindow{0.05, 0.40};

struct Kink {
    double p = 0.0;
    double value = 0.0; // sorted value at the kink
};

struct MetricCore {
    LocalMetric metric = LocalMetric::SquaredEuclidean;
    double p_used = 0.0;
    bool p_detected = true; // false when p was fixed by the caller
    double d_bound = 0.0;
    std::size_t core_size = 0;
    std::vector<std::string> core_ids; // seriation order
    bool empty_core = false;
};

struct SegmentationResult {
    std::vector<std::string> universe;
    std::vector<MetricCore> per_metric;
    std::vector<std::string> intersection_core; // universe order
    std::vector<std::string> satellite;         // universe order
};

EcdfCurve ecdf_upper_triangle(const SeriatedMatrix& s);

/// Knee rule: within the window, the ECDF point (value, probability) with the
/// largest perpendicular distance to the chord between the first and last
/// window points. Throws when the curve is flat or straight in the window.
Kink detect_kink(const EcdfCurve& curve, KinkWindow window = kUpperKinkWindow);

/// Smallest sorted value whose ECDF probability is >= p (lower quantile).
double threshold(const EcdfCurve& curve, double p);

/// Largest k such that the model is <= d_bound on every cell (i, j), i <= j <= k,
/// of the leading block. Symmetry of the matrix makes the lower triangle redundant.
MetricCore core_block(const RbfModel& model, const SeriatedMatrix& s, double d_bound);

/// Intersection of per-metric cores over `universe`; the satellite is the complement.
SegmentationResult intersect(const std::vector<std::string>& universe,
                             const std::vector<MetricCore>& cores);

struct SegmentSettings {
    RbfSettings rbf;
    KinkWindow window = kUpperKinkWindow;
    std::optional<double> fixed_p;
};

struct MetricSegmentation {
    SeriatedMatrix seriated;
    RbfModel model;
    EcdfCurve ecdf;
    MetricCore core;
};

/// seriate -> fit_surface -> ecdf -> kink (or fixed p) -> threshold -> core_block.
MetricSegmentation segment_metric(const DistanceMatrix& d, const SegmentSettings& settings);

/// ECDF step plot with the kink window and the chosen threshold marked.
void write_ecdf_svg(const EcdfCurve& curve, KinkWindow window, const MetricCore& core,
                    const std::filesystem::path& path);

void write_metric_core_json(const MetricCore& core, const std::filesystem::path& path);
MetricCore read_metric_core_json(const std::filesystem::path& path);

/// Optional display names for the report, keyed by asset id.
using AssetNames = std::map<std::string, std::string>;

/// CSV `asset_id,name`.
AssetNames read_asset_names(const std::filesystem::path& path);

/// Core/satellite table: metadata comment lines with per-metric d_bound and
/// p_used, then `No.,ID,Name,<metric>...,Intersection` with 1/0 membership and
/// C/S labels.
void write_report_csv(const SegmentationResult& result, const AssetNames& names,
                      const std::filesystem::path& path);
void write_report_json(const SegmentationResult& result, const AssetNames& names,
                       const std::filesystem::path& path);

/// Column header used for a metric in the report ("Manhattan", "Euclidean", "Sq. Eucl.").
std::string report_column(LocalMetric metric);

} // namespace coresat
