#pragma once

// Raw price files to a dense weekly log-return panel.
//
// The flow is parse -> convert_currency -> resample_weekly -> fill_gaps_locf
// -> log_returns. Every step is a pure function over its inputs.

#include "coresat/common.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace coresat {

struct Observation {
    Date date;
    double value = 0.0;
};

/// Dated close prices of one asset, strictly increasing dates, positive prices.
struct RawPriceSeries {
    std::string asset_id;
    std::vector<Observation> observations;
};

/// Source-to-target exchange rates, strictly increasing dates, positive rates.
struct FxSeries {
    std::vector<Observation> observations;
};

struct CsvSchema {
    std::string date_column = "date";
    std::string value_column = "close";
};

/// One asset on the common weekly grid; std::nullopt marks a week without data.
struct WeeklySeries {
    std::string asset_id;
    std::vector<std::optional<double>> values;
};

/// Dense asset x week price matrix after gap filling.
struct PricePanel {
    std::vector<std::string> assets;
    std::vector<Date> week_grid;
    Eigen::MatrixXd prices; // rows = assets, cols = weeks
};

/// returns(a, t) = ln(prices(a, t + 1) / prices(a, t)); weeks[t] is the week-end
/// date of the later price.
struct ReturnPanel {
    std::vector<std::string> assets;
    std::vector<Date> weeks;
    Eigen::MatrixXd returns;
};

struct Exclusion {
    std::string asset_id;
    std::string reason;
    int gap_length = 0;
};

struct GapFillResult {
    PricePanel panel;
    std::vector<Exclusion> excluded;
};

/// Reads `date`/`close` (per schema) columns. The asset id is the file stem.
/// Throws Error naming the line for malformed rows, duplicate dates and
/// non-positive prices.
RawPriceSeries parse_price_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Reads an FX file with `date`/`rate` columns.
FxSeries parse_fx_csv(const std::filesystem::path& path);

/// Multiplies each price by the rate on the same date, or the latest earlier rate.
RawPriceSeries convert_currency(const RawPriceSeries& series, const FxSeries& fx);

/// All `anchor` weekdays in [start, end].
std::vector<Date> week_grid(Date start, Date end, std::chrono::weekday anchor);

/// Week-end value for every grid date: the last observation in the seven days
/// ending on that date, or std::nullopt when the week has none.
WeeklySeries resample_weekly(const RawPriceSeries& series, const std::vector<Date>& grid);

/// Same as above with a grid spanning the series' own first to last date.
/// The result's grid is returned through `grid_out`.
WeeklySeries resample_weekly(const RawPriceSeries& series, std::chrono::weekday anchor,
                             std::vector<Date>* grid_out = nullptr);

/// Carries the last observation forward over runs of at most `max_consecutive_gap`
/// missing weeks. Assets with a longer run, or without a first observation, are
/// excluded and reported instead.
GapFillResult fill_gaps_locf(const std::vector<WeeklySeries>& rows, const std::vector<Date>& grid,
                             int max_consecutive_gap = 4);

/// Single-series LOCF; throws when the first value is missing.
std::vector<double> locf(const std::vector<std::optional<double>>& values);

/// Length of the longest run of missing values.
int longest_gap(const std::vector<std::optional<double>>& values);

ReturnPanel log_returns(const PricePanel& panel);

/// Week-end prices as CSV: `week_end,<asset>,...`.
void write_price_panel_csv(const PricePanel& panel, const std::filesystem::path& path);
PricePanel read_price_panel_csv(const std::filesystem::path& path);

void write_exclusions_json(const std::vector<Exclusion>& excluded, const std::filesystem::path& path);

} // namespace coresat
