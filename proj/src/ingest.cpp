#include "coresat/ingest.hpp"

#include "coresat/csv.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace coresat {

namespace {

struct NumberedObservation {
    Observation obs;
    std::size_t line = 0;
};

std::vector<Observation> read_dated_values(const std::filesystem::path& path,
                                           const std::string& date_column,
                                           const std::string& value_column,
                                           const std::string& value_label)
{
    const auto table = csv::read_file(path);
    const auto date_idx = csv::column_index(table, date_column, path);
    const auto value_idx = csv::column_index(table, value_column, path);
    const auto where = [&](std::size_t line) {
        return path.filename().string() + " line " + std::to_string(line) + ": ";
    };

    std::vector<NumberedObservation> rows;
    rows.reserve(table.rows.size());
    for (const auto& [line, fields] : table.rows) {
        if (fields.size() <= std::max(date_idx, value_idx))
            throw Error(where(line) + "malformed row, expected at least " +
                        std::to_string(std::max(date_idx, value_idx) + 1) + " fields");
        NumberedObservation row;
        row.line = line;
        try {
            row.obs.date = parse_date(fields[date_idx]);
            row.obs.value = csv::parse_number(fields[value_idx]);
        } catch (const Error& e) {
            throw Error(where(line) + "malformed row: " + e.what());
        }
        if (row.obs.value <= 0.0)
            throw Error(where(line) + "non-positive " + value_label + " " + fields[value_idx]);
        rows.push_back(row);
    }

    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.obs.date < b.obs.date; });
    std::vector<Observation> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && rows[i].obs.date == rows[i - 1].obs.date)
            throw Error(where(rows[i].line) + "duplicate date " + format_date(rows[i].obs.date));
        out.push_back(rows[i].obs);
    }
    return out;
}

} // namespace

RawPriceSeries parse_price_csv(const std::filesystem::path& path, const CsvSchema& schema)
{
    RawPriceSeries series;
    series.asset_id = path.stem().string();
    series.observations = read_dated_values(path, schema.date_column, schema.value_column, "price");
    return series;
}

FxSeries parse_fx_csv(const std::filesystem::path& path)
{
    return FxSeries{read_dated_values(path, "date", "rate", "rate")};
}

RawPriceSeries convert_currency(const RawPriceSeries& series, const FxSeries& fx)
{
    RawPriceSeries out{series.asset_id, {}};
    out.observations.reserve(series.observations.size());
    const auto& rates = fx.observations;
    for (const auto& obs : series.observations) {
        auto it = std::upper_bound(rates.begin(), rates.end(), obs.date,
                                   [](Date d, const Observation& r) { return d < r.date; });
        if (it == rates.begin())
            throw Error(series.asset_id + ": no FX rate on or before " + format_date(obs.date));
        out.observations.push_back({obs.date, obs.value * std::prev(it)->value});
    }
    return out;
}

std::vector<Date> week_grid(Date start, Date end, std::chrono::weekday anchor)
{
    std::vector<Date> grid;
    Date d = start + (anchor - std::chrono::weekday{start});
    for (; d <= end; d += std::chrono::days{7})
        grid.push_back(d);
    return grid;
}

WeeklySeries resample_weekly(const RawPriceSeries& series, const std::vector<Date>& grid)
{
    if (series.observations.empty())
        throw Error(series.asset_id + ": cannot resample an empty series");
    WeeklySeries out{series.asset_id, std::vector<std::optional<double>>(grid.size())};
    const auto& obs = series.observations;
    for (std::size_t w = 0; w < grid.size(); ++w) {
        auto it = std::upper_bound(obs.begin(), obs.end(), grid[w],
                                   [](Date d, const Observation& o) { return d < o.date; });
        if (it == obs.begin())
            continue;
        const auto& last = *std::prev(it);
        if (grid[w] - last.date < std::chrono::days{7})
            out.values[w] = last.value;
    }
    return out;
}

WeeklySeries resample_weekly(const RawPriceSeries& series, std::chrono::weekday anchor,
                             std::vector<Date>* grid_out)
{
    if (series.observations.empty())
        throw Error(series.asset_id + ": cannot resample an empty series");
    const Date first = series.observations.front().date;
    const Date last = series.observations.back().date;
    // extend to the week-end that closes the last observation's week
    const Date last_week_end = last + (anchor - std::chrono::weekday{last});
    auto grid = week_grid(first, last_week_end, anchor);
    auto out = resample_weekly(series, grid);
    if (grid_out)
        *grid_out = std::move(grid);
    return out;
}

int longest_gap(const std::vector<std::optional<double>>& values)
{
    int longest = 0, run = 0;
    for (const auto& v : values) {
        run = v ? 0 : run + 1;
        longest = std::max(longest, run);
    }
    return longest;
}

std::vector<double> locf(const std::vector<std::optional<double>>& values)
{
    if (values.empty() || !values.front())
        throw Error("first observation missing, nothing to carry forward");
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& v : values)
        out.push_back(v ? *v : out.back());
    return out;
}

GapFillResult fill_gaps_locf(const std::vector<WeeklySeries>& rows, const std::vector<Date>& grid,
                             int max_consecutive_gap)
{
    if (max_consecutive_gap < 0)
        throw ConfigError("max_consecutive_gap must be non-negative");
    GapFillResult result;
    result.panel.week_grid = grid;
    std::vector<std::vector<double>> kept;
    for (const auto& row : rows) {
        if (row.values.size() != grid.size())
            throw Error(row.asset_id + ": weekly series does not match the week grid");
        const int gap = longest_gap(row.values);
        if (gap > max_consecutive_gap) {
            result.excluded.push_back({row.asset_id, "consecutive_missing_weeks", gap});
            continue;
        }
        if (row.values.empty() || !row.values.front()) {
            int leading = 0;
            while (leading < static_cast<int>(row.values.size()) && !row.values[leading])
                ++leading;
            result.excluded.push_back({row.asset_id, "missing_first_observation", leading});
            continue;
        }
        result.panel.assets.push_back(row.asset_id);
        kept.push_back(locf(row.values));
    }
    auto& prices = result.panel.prices;
    prices.resize(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(grid.size()));
    for (std::size_t a = 0; a < kept.size(); ++a)
        for (std::size_t w = 0; w < grid.size(); ++w)
            prices(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(w)) = kept[a][w];
    return result;
}

ReturnPanel log_returns(const PricePanel& panel)
{
    if (panel.week_grid.size() < 2)
        throw Error("log returns need at least two weeks of prices");
    ReturnPanel out;
    out.assets = panel.assets;
    out.weeks.assign(panel.week_grid.begin() + 1, panel.week_grid.end());
    const Eigen::Index weeks = panel.prices.cols() - 1;
    out.returns.resize(panel.prices.rows(), weeks);
    for (Eigen::Index a = 0; a < panel.prices.rows(); ++a)
        for (Eigen::Index t = 0; t < weeks; ++t)
            out.returns(a, t) = std::log(panel.prices(a, t + 1) / panel.prices(a, t));
    return out;
}

void write_price_panel_csv(const PricePanel& panel, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out << "week_end";
    for (const auto& a : panel.assets)
        out << ',' << csv::escape(a);
    out << '\n';
    for (std::size_t w = 0; w < panel.week_grid.size(); ++w) {
        out << format_date(panel.week_grid[w]);
        for (Eigen::Index a = 0; a < panel.prices.rows(); ++a)
            out << ',' << format_double(panel.prices(a, static_cast<Eigen::Index>(w)));
        out << '\n';
    }
}

PricePanel read_price_panel_csv(const std::filesystem::path& path)
{
    const auto table = csv::read_file(path);
    if (table.header.empty() || to_lower(table.header.front()) != "week_end")
        throw Error("'" + path.string() + "' is not a weekly price panel (first column must be week_end)");
    PricePanel panel;
    panel.assets.assign(table.header.begin() + 1, table.header.end());
    panel.prices.resize(static_cast<Eigen::Index>(panel.assets.size()),
                        static_cast<Eigen::Index>(table.rows.size()));
    for (std::size_t w = 0; w < table.rows.size(); ++w) {
        const auto& [line, fields] = table.rows[w];
        if (fields.size() != table.header.size())
            throw Error(path.filename().string() + " line " + std::to_string(line) + ": malformed row");
        panel.week_grid.push_back(parse_date(fields[0]));
        for (std::size_t a = 0; a < panel.assets.size(); ++a)
            panel.prices(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(w)) =
                csv::parse_number(fields[a + 1]);
    }
    return panel;
}

void write_exclusions_json(const std::vector<Exclusion>& excluded, const std::filesystem::path& path)
{
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& e : excluded)
        doc.push_back({{"asset_id", e.asset_id}, {"reason", e.reason}, {"gap_length", e.gap_length}});
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
}

} // namespace coresat
