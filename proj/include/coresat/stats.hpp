#pragma once

// Per-asset, per-year sample vectors (mean return, standard deviation, stable
// tail parameter alpha) computed from weekly log returns.

#include "coresat/ingest.hpp"

#include <complex>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace coresat {

/// Stable distribution S(alpha, beta, gamma, delta) in Nolan's S0 parametrization.
struct StableParams {
    double alpha = 2.0; // (0, 2]
    double beta = 0.0;  // [-1, 1]
    double gamma = 1.0; // scale > 0
    double delta = 0.0; // location

    /// Throws Error if any parameter is outside its range.
    void validate() const;

    /// E[exp(i t X)].
    std::complex<double> characteristic_function(double t) const;

    /// Standard deviation of the normal law reached at alpha = 2 (sqrt(2) * gamma).
    double normal_sigma() const;
};

struct SampleVector {
    int year = 0;
    double mean_return = 0.0; // percent per week
    double std_dev = 0.0;     // percent per week
    double alpha = 2.0;
    bool alpha_clamped = false;
};

struct SampleVectorSeries {
    std::string asset_id;
    std::vector<SampleVector> vectors;
};

/// Weekly returns of one asset grouped by the calendar year of their week-end date.
struct AssetBuckets {
    std::string asset_id;
    std::map<int, std::vector<double>> by_year;
};

struct MeanStd {
    double mean = 0.0; // percent
    double std = 0.0;  // percent, n - 1 denominator
};

struct AlphaFitOptions {
    double floor = 0.5;
    double ceiling = 2.0;
};

struct AlphaFit {
    double alpha = 2.0;
    bool clamped = false;
    double nu_alpha = 0.0; // (q95 - q05) / (q75 - q25)
    double nu_beta = 0.0;  // (q95 + q05 - 2 q50) / (q95 - q05)
};

inline constexpr std::size_t kMinBucketSize = 8;

/// Throws Error on an empty panel or when any bucket holds fewer than
/// kMinBucketSize returns.
std::vector<AssetBuckets> annual_buckets(const ReturnPanel& returns);

/// Arithmetic mean and sample standard deviation, reported in percent.
MeanStd mean_and_std(std::span<const double> bucket);

/// Sample quantile by linear interpolation between order statistics
/// (Hyndman-Fan type 7). `sorted` must be ascending.
double quantile_type7(std::span<const double> sorted, double prob);

/// McCulloch's quantile estimator of the stable tail index. The quantile
/// statistic nu_alpha is mapped through the published table by bilinear
/// interpolation in (nu_alpha, |nu_beta|). Results outside
/// [options.floor, options.ceiling] are clamped and flagged.
AlphaFit fit_tail_alpha(std::span<const double> bucket, const AlphaFitOptions& options = {});

/// One series per asset with years aligned across assets. Errors name the asset and year.
std::vector<SampleVectorSeries> build_sample_series(const ReturnPanel& returns,
                                                    const AlphaFitOptions& options = {});

/// Columns: asset_id,year,mean_return_pct,std_pct,alpha,alpha_clamped
void write_sample_vectors_csv(const std::vector<SampleVectorSeries>& series,
                              const std::filesystem::path& path);
std::vector<SampleVectorSeries> read_sample_vectors_csv(const std::filesystem::path& path);

} // namespace coresat
