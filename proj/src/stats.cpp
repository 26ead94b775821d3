#include "coresat/stats.hpp"

#include "coresat/csv.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <numbers>
#include <set>

namespace coresat {

namespace {

// McCulloch (1986), Table III: alpha = psi_1(nu_alpha, nu_beta).
constexpr std::array<double, 15> kNuAlpha = {2.439, 2.5, 2.6, 2.7, 2.8, 3.0, 3.2, 3.5,
                                             4.0,   5.0, 6.0, 8.0, 10.0, 15.0, 25.0};
constexpr std::array<double, 7> kNuBeta = {0.0, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0};
constexpr std::array<std::array<double, 7>, 15> kAlphaTable = {{
    {2.000, 2.000, 2.000, 2.000, 2.000, 2.000, 2.000},
    {1.916, 1.924, 1.924, 1.924, 1.924, 1.924, 1.924},
    {1.808, 1.813, 1.829, 1.829, 1.829, 1.829, 1.829},
    {1.729, 1.730, 1.737, 1.745, 1.745, 1.745, 1.745},
    {1.664, 1.663, 1.663, 1.668, 1.676, 1.676, 1.676},
    {1.563, 1.560, 1.553, 1.548, 1.547, 1.547, 1.547},
    {1.484, 1.480, 1.471, 1.460, 1.448, 1.438, 1.438},
    {1.391, 1.386, 1.378, 1.364, 1.337, 1.318, 1.318},
    {1.279, 1.273, 1.266, 1.250, 1.210, 1.184, 1.150},
    {1.128, 1.121, 1.114, 1.101, 1.067, 1.027, 0.973},
    {1.029, 1.021, 1.014, 1.004, 0.974, 0.935, 0.874},
    {0.896, 0.892, 0.884, 0.883, 0.855, 0.823, 0.769},
    {0.818, 0.812, 0.806, 0.801, 0.780, 0.756, 0.691},
    {0.698, 0.695, 0.692, 0.689, 0.676, 0.656, 0.597},
    {0.593, 0.590, 0.588, 0.586, 0.579, 0.563, 0.513},
}};

template <std::size_t N>
std::pair<std::size_t, double> bracket(const std::array<double, N>& grid, double x)
{
    if (x <= grid.front())
        return {0, 0.0};
    if (x >= grid.back())
        return {N - 2, 1.0};
    const auto hi = static_cast<std::size_t>(std::upper_bound(grid.begin(), grid.end(), x) - grid.begin());
    const std::size_t lo = hi - 1;
    return {lo, (x - grid[lo]) / (grid[hi] - grid[lo])};
}

double alpha_from_table(double nu_alpha, double nu_beta_abs)
{
    const auto [i, u] = bracket(kNuAlpha, nu_alpha);
    const auto [j, v] = bracket(kNuBeta, nu_beta_abs);
    const double a00 = kAlphaTable[i][j], a01 = kAlphaTable[i][j + 1];
    const double a10 = kAlphaTable[i + 1][j], a11 = kAlphaTable[i + 1][j + 1];
    return (1 - u) * (1 - v) * a00 + (1 - u) * v * a01 + u * (1 - v) * a10 + u * v * a11;
}

} // namespace

void StableParams::validate() const
{
    if (!(alpha > 0.0 && alpha <= 2.0))
        throw Error("stable alpha must lie in (0, 2]");
    if (!(beta >= -1.0 && beta <= 1.0))
        throw Error("stable beta must lie in [-1, 1]");
    if (!(gamma > 0.0))
        throw Error("stable gamma must be positive");
    if (!std::isfinite(delta))
        throw Error("stable delta must be finite");
}

std::complex<double> StableParams::characteristic_function(double t) const
{
    using namespace std::complex_literals;
    if (t == 0.0)
        return 1.0;
    const double gt = std::abs(gamma * t);
    const double sign = t > 0 ? 1.0 : -1.0;
    std::complex<double> bracket_term;
    double magnitude = 0.0;
    if (alpha == 1.0) {
        magnitude = gt;
        bracket_term = 1.0 + 1i * beta * sign * (2.0 / std::numbers::pi) * std::log(gt);
    } else {
        magnitude = std::pow(gt, alpha);
        bracket_term = 1.0 + 1i * beta * sign * std::tan(std::numbers::pi * alpha / 2.0) *
                                 (std::pow(gt, 1.0 - alpha) - 1.0);
    }
    return std::exp(1i * delta * t - magnitude * bracket_term);
}

double StableParams::normal_sigma() const
{
    return std::numbers::sqrt2 * gamma;
}

std::vector<AssetBuckets> annual_buckets(const ReturnPanel& returns)
{
    if (returns.assets.empty() || returns.weeks.empty())
        throw Error("empty return panel");
    std::vector<AssetBuckets> out;
    out.reserve(returns.assets.size());
    for (std::size_t a = 0; a < returns.assets.size(); ++a) {
        AssetBuckets buckets{returns.assets[a], {}};
        for (std::size_t t = 0; t < returns.weeks.size(); ++t)
            buckets.by_year[year_of(returns.weeks[t])].push_back(
                returns.returns(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(t)));
        for (const auto& [year, bucket] : buckets.by_year)
            if (bucket.size() < kMinBucketSize)
                throw Error(buckets.asset_id + " " + std::to_string(year) + ": only " +
                            std::to_string(bucket.size()) + " weekly returns, need at least " +
                            std::to_string(kMinBucketSize) + " to fit alpha");
        out.push_back(std::move(buckets));
    }
    return out;
}

MeanStd mean_and_std(std::span<const double> bucket)
{
    if (bucket.size() < 2)
        throw Error("mean_and_std needs at least two returns");
    // shifted by the first value, so a constant bucket gives exactly zero spread
    const double n = static_cast<double>(bucket.size());
    const double k = bucket.front();
    double sum = 0.0;
    for (double r : bucket)
        sum += r - k;
    const double shifted_mean = sum / n;
    double ss = 0.0;
    for (double r : bucket)
        ss += (r - k - shifted_mean) * (r - k - shifted_mean);
    return {100.0 * (k + shifted_mean), 100.0 * std::sqrt(ss / (n - 1.0))};
}

double quantile_type7(std::span<const double> sorted, double prob)
{
    if (sorted.empty())
        throw Error("quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

AlphaFit fit_tail_alpha(std::span<const double> bucket, const AlphaFitOptions& options)
{
    if (bucket.size() < kMinBucketSize)
        throw Error("alpha fit needs at least " + std::to_string(kMinBucketSize) + " returns");
    std::vector<double> sorted(bucket.begin(), bucket.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back())
        throw Error("degenerate bucket: all returns identical");

    const double q05 = quantile_type7(sorted, 0.05);
    const double q25 = quantile_type7(sorted, 0.25);
    const double q50 = quantile_type7(sorted, 0.50);
    const double q75 = quantile_type7(sorted, 0.75);
    const double q95 = quantile_type7(sorted, 0.95);
    if (!(q95 > q05))
        throw Error("degenerate bucket: 5% and 95% quantiles coincide");

    AlphaFit fit;
    fit.nu_beta = (q95 + q05 - 2.0 * q50) / (q95 - q05);
    fit.nu_alpha = q75 > q25 ? (q95 - q05) / (q75 - q25) : std::numeric_limits<double>::infinity();

    double alpha = 0.0;
    if (fit.nu_alpha < kNuAlpha.front())
        alpha = 2.0; // lighter than normal: table starts at the Gaussian ratio
    else if (fit.nu_alpha > kNuAlpha.back())
        alpha = 0.0; // beyond the table, pinned to the floor below
    else
        alpha = alpha_from_table(fit.nu_alpha, std::min(std::abs(fit.nu_beta), 1.0));

    fit.alpha = std::clamp(alpha, options.floor, options.ceiling);
    fit.clamped = fit.nu_alpha <= kNuAlpha.front() || alpha != fit.alpha ||
                  fit.nu_alpha > kNuAlpha.back();
    return fit;
}

std::vector<SampleVectorSeries> build_sample_series(const ReturnPanel& returns,
                                                    const AlphaFitOptions& options)
{
    const auto buckets = annual_buckets(returns);
    std::vector<SampleVectorSeries> out;
    out.reserve(buckets.size());
    for (const auto& asset : buckets) {
        SampleVectorSeries series{asset.asset_id, {}};
        for (const auto& [year, bucket] : asset.by_year) {
            try {
                const auto ms = mean_and_std(bucket);
                const auto fit = fit_tail_alpha(bucket, options);
                series.vectors.push_back({year, ms.mean, ms.std, fit.alpha, fit.clamped});
            } catch (const Error& e) {
                throw Error(asset.asset_id + " " + std::to_string(year) + ": " + e.what());
            }
        }
        out.push_back(std::move(series));
    }
    return out;
}

void write_sample_vectors_csv(const std::vector<SampleVectorSeries>& series,
                              const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out << "asset_id,year,mean_return_pct,std_pct,alpha,alpha_clamped\n";
    for (const auto& s : series)
        for (const auto& v : s.vectors)
            out << csv::escape(s.asset_id) << ',' << v.year << ',' << format_double(v.mean_return)
                << ',' << format_double(v.std_dev) << ',' << format_double(v.alpha) << ','
                << (v.alpha_clamped ? 1 : 0) << '\n';
}

std::vector<SampleVectorSeries> read_sample_vectors_csv(const std::filesystem::path& path)
{
    const auto table = csv::read_file(path);
    const auto id_col = csv::column_index(table, "asset_id", path);
    const auto year_col = csv::column_index(table, "year", path);
    const auto mean_col = csv::column_index(table, "mean_return_pct", path);
    const auto std_col = csv::column_index(table, "std_pct", path);
    const auto alpha_col = csv::column_index(table, "alpha", path);
    std::optional<std::size_t> clamp_col;
    try {
        clamp_col = csv::column_index(table, "alpha_clamped", path);
    } catch (const Error&) {
    }

    std::vector<SampleVectorSeries> out;
    for (const auto& [line, f] : table.rows) {
        if (f.size() < table.header.size())
            throw Error(path.filename().string() + " line " + std::to_string(line) + ": malformed row");
        if (out.empty() || out.back().asset_id != f[id_col])
            out.push_back({f[id_col], {}});
        SampleVector v;
        v.year = static_cast<int>(csv::parse_number(f[year_col]));
        v.mean_return = csv::parse_number(f[mean_col]);
        v.std_dev = csv::parse_number(f[std_col]);
        v.alpha = csv::parse_number(f[alpha_col]);
        v.alpha_clamped = clamp_col && f[*clamp_col] == "1";
        auto& vectors = out.back().vectors;
        if (!vectors.empty() && v.year != vectors.back().year + 1)
            throw Error(path.filename().string() + " line " + std::to_string(line) +
                        ": years of " + f[id_col] + " are not contiguous and increasing");
        vectors.push_back(v);
    }
    std::set<std::string> seen;
    for (const auto& s : out)
        if (!seen.insert(s.asset_id).second)
            throw Error(path.filename().string() + ": rows of " + s.asset_id + " are not contiguous");
    return out;
}

} // namespace coresat
