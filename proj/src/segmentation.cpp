#include "coresat/segmentation.hpp"

#include "coresat/csv.hpp"
#include "coresat/plots.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace coresat {

EcdfCurve ecdf_upper_triangle(const SeriatedMatrix& s)
{
    const Eigen::Index n = s.d_norm.rows();
    if (n < 2)
        throw Error("ECDF needs a matrix of size >= 2");
    EcdfCurve curve;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            curve.sorted_values.push_back(s.d_norm(i, j));
    std::sort(curve.sorted_values.begin(), curve.sorted_values.end());
    const double k_total = static_cast<double>(curve.sorted_values.size());
    for (std::size_t k = 1; k <= curve.sorted_values.size(); ++k)
        curve.probabilities.push_back(static_cast<double>(k) / k_total);
    return curve;
}

Kink detect_kink(const EcdfCurve& curve, KinkWindow window)
{
    if (!(window.lo > 0.0 && window.lo < window.hi && window.hi < 1.0 + 1e-12))
        throw ConfigError("kink window must satisfy 0 < lo < hi <= 1");
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < curve.probabilities.size(); ++k)
        if (curve.probabilities[k] >= window.lo - 1e-12 && curve.probabilities[k] <= window.hi + 1e-12)
            idx.push_back(k);
    if (idx.size() < 3)
        throw Error("too few ECDF points in the kink window; pass an explicit p");

    const double x0 = curve.sorted_values[idx.front()], y0 = curve.probabilities[idx.front()];
    const double x1 = curve.sorted_values[idx.back()], y1 = curve.probabilities[idx.back()];
    const double dx = x1 - x0, dy = y1 - y0;
    const double chord = std::hypot(dx, dy);

    double best = -1.0;
    std::size_t best_k = idx.front();
    for (auto k : idx) {
        const double dist =
            std::abs(dy * (curve.sorted_values[k] - x0) - dx * (curve.probabilities[k] - y0)) / chord;
        if (dist > best) {
            best = dist;
            best_k = k;
        }
    }
    constexpr double kStraightTolerance = 1e-9;
    if (!(dx > 0.0) || best < kStraightTolerance)
        throw Error("ECDF is flat or straight in the kink window, no kink found; pass an explicit p");
    return {curve.probabilities[best_k], curve.sorted_values[best_k]};
}

double threshold(const EcdfCurve& curve, double p)
{
    if (!(p > 0.0 && p < 1.0))
        throw Error("threshold probability must lie in (0, 1)");
    if (curve.sorted_values.empty())
        throw Error("threshold of an empty ECDF");
    constexpr double kTie = 1e-12;
    for (std::size_t k = 0; k < curve.probabilities.size(); ++k)
        if (curve.probabilities[k] >= p - kTie)
            return curve.sorted_values[k];
    return curve.sorted_values.back();
}

MetricCore core_block(const RbfModel& model, const SeriatedMatrix& s, double d_bound)
{
    MetricCore core;
    core.metric = s.metric;
    core.d_bound = d_bound;
    const auto n = static_cast<std::size_t>(s.d_norm.rows());
    std::size_t k = 0;
    for (; k < n; ++k) {
        // block grows by the new column k (0-based): cells (i, k), i <= k
        bool inside = true;
        for (std::size_t i = 0; i <= k && inside; ++i)
            inside = evaluate(model, {static_cast<double>(i + 1), static_cast<double>(k + 1)}) <= d_bound;
        if (!inside)
            break;
    }
    core.core_size = k;
    core.core_ids.assign(s.labels.begin(), s.labels.begin() + static_cast<std::ptrdiff_t>(k));
    core.empty_core = k == 0;
    return core;
}

SegmentationResult intersect(const std::vector<std::string>& universe,
                             const std::vector<MetricCore>& cores)
{
    const std::set<std::string> all(universe.begin(), universe.end());
    for (const auto& c : cores)
        for (const auto& id : c.core_ids)
            if (!all.count(id))
                throw Error("core member '" + id + "' is not part of the universe");
    SegmentationResult result;
    result.universe = universe;
    result.per_metric = cores;
    for (const auto& id : universe) {
        const bool everywhere = !cores.empty() && std::all_of(cores.begin(), cores.end(), [&](const MetricCore& c) {
            return std::find(c.core_ids.begin(), c.core_ids.end(), id) != c.core_ids.end();
        });
        (everywhere ? result.intersection_core : result.satellite).push_back(id);
    }
    return result;
}

MetricSegmentation segment_metric(const DistanceMatrix& d, const SegmentSettings& settings)
{
    MetricSegmentation out;
    out.seriated = seriate(d);
    out.model = fit_surface(out.seriated, settings.rbf);
    out.ecdf = ecdf_upper_triangle(out.seriated);
    double p = 0.0;
    if (settings.fixed_p) {
        p = *settings.fixed_p;
    } else {
        p = detect_kink(out.ecdf, settings.window).p;
    }
    const double d_bound = threshold(out.ecdf, p);
    out.core = core_block(out.model, out.seriated, d_bound);
    out.core.p_used = p;
    out.core.p_detected = !settings.fixed_p.has_value();
    return out;
}

void write_ecdf_svg(const EcdfCurve& curve, KinkWindow window, const MetricCore& core,
                    const std::filesystem::path& path)
{
    plots::write_text(path, plots::ecdf_svg(curve.sorted_values, curve.probabilities, window.lo, window.hi,
                                            core.d_bound, core.p_used,
                                            "ECDF of normalized distances (" +
                                                std::string(metric_name(core.metric)) + ")"));
}

void write_metric_core_json(const MetricCore& core, const std::filesystem::path& path)
{
    nlohmann::ordered_json doc;
    doc["metric"] = metric_name(core.metric);
    doc["p_used"] = core.p_used;
    doc["p_source"] = core.p_detected ? "kink" : "fixed";
    doc["d_bound"] = core.d_bound;
    doc["core_size"] = core.core_size;
    doc["empty_core"] = core.empty_core;
    doc["core_ids"] = core.core_ids;
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
}

MetricCore read_metric_core_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open '" + path.string() + "'");
    const auto doc = nlohmann::json::parse(in);
    MetricCore core;
    core.metric = parse_metric(doc.at("metric").get<std::string>());
    core.p_used = doc.at("p_used").get<double>();
    core.p_detected = doc.value("p_source", std::string("kink")) == "kink";
    core.d_bound = doc.at("d_bound").get<double>();
    core.core_ids = doc.at("core_ids").get<std::vector<std::string>>();
    core.core_size = core.core_ids.size();
    core.empty_core = core.core_ids.empty();
    return core;
}

AssetNames read_asset_names(const std::filesystem::path& path)
{
    const auto table = csv::read_file(path);
    const auto id_col = csv::column_index(table, "asset_id", path);
    const auto name_col = csv::column_index(table, "name", path);
    AssetNames names;
    for (const auto& [line, f] : table.rows) {
        if (f.size() <= std::max(id_col, name_col))
            throw Error(path.filename().string() + " line " + std::to_string(line) + ": malformed row");
        names[f[id_col]] = f[name_col];
    }
    return names;
}

std::string report_column(LocalMetric metric)
{
    switch (metric) {
    case LocalMetric::Manhattan:
        return "Manhattan";
    case LocalMetric::Euclidean:
        return "Euclidean";
    case LocalMetric::SquaredEuclidean:
        return "Sq. Eucl.";
    }
    return "?";
}

namespace {

bool in_core(const MetricCore& core, const std::string& id)
{
    return std::find(core.core_ids.begin(), core.core_ids.end(), id) != core.core_ids.end();
}

std::string display_name(const AssetNames& names, const std::string& id)
{
    auto it = names.find(id);
    return it == names.end() ? id : it->second;
}

bool in_intersection(const SegmentationResult& r, const std::string& id)
{
    return std::find(r.intersection_core.begin(), r.intersection_core.end(), id) !=
           r.intersection_core.end();
}

} // namespace

void write_report_csv(const SegmentationResult& result, const AssetNames& names,
                      const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    for (const auto& c : result.per_metric)
        out << "# " << metric_name(c.metric) << ": d_bound=" << format_double(c.d_bound)
            << " p_used=" << format_double(c.p_used) << " p_source=" << (c.p_detected ? "kink" : "fixed")
            << " core_size=" << c.core_size << '\n';
    out << "No.,ID,Name";
    for (const auto& c : result.per_metric)
        out << ',' << report_column(c.metric);
    out << ",Intersection\n";
    for (std::size_t k = 0; k < result.universe.size(); ++k) {
        const auto& id = result.universe[k];
        out << k + 1 << ',' << csv::escape(id) << ',' << csv::escape(display_name(names, id));
        for (const auto& c : result.per_metric)
            out << ',' << (in_core(c, id) ? 1 : 0);
        out << ',' << (in_intersection(result, id) ? 'C' : 'S') << '\n';
    }
}

void write_report_json(const SegmentationResult& result, const AssetNames& names,
                       const std::filesystem::path& path)
{
    nlohmann::ordered_json doc;
    auto metrics = nlohmann::ordered_json::array();
    for (const auto& c : result.per_metric)
        metrics.push_back({{"metric", metric_name(c.metric)},
                           {"d_bound", c.d_bound},
                           {"p_used", c.p_used},
                           {"p_source", c.p_detected ? "kink" : "fixed"},
                           {"core_size", c.core_size},
                           {"empty_core", c.empty_core}});
    doc["metrics"] = metrics;
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < result.universe.size(); ++k) {
        const auto& id = result.universe[k];
        nlohmann::ordered_json row;
        row["no"] = k + 1;
        row["id"] = id;
        row["name"] = display_name(names, id);
        for (const auto& c : result.per_metric)
            row[std::string(metric_name(c.metric))] = in_core(c, id);
        row["intersection"] = in_intersection(result, id) ? "C" : "S";
        rows.push_back(row);
    }
    doc["rows"] = rows;
    doc["core"] = result.intersection_core;
    doc["satellite"] = result.satellite;
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
}

} // namespace coresat
