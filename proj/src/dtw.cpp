#include "coresat/dtw.hpp"

#include "coresat/csv.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace coresat {

std::string_view metric_name(LocalMetric metric)
{
    switch (metric) {
    case LocalMetric::Manhattan:
        return "manhattan";
    case LocalMetric::Euclidean:
        return "euclidean";
    case LocalMetric::SquaredEuclidean:
        return "sqeuclidean";
    }
    return "unknown";
}

LocalMetric parse_metric(std::string_view name)
{
    const std::string n = to_lower(trim(name));
    if (n == "manhattan" || n == "l1" || n == "cityblock")
        return LocalMetric::Manhattan;
    if (n == "euclidean" || n == "l2")
        return LocalMetric::Euclidean;
    if (n == "sqeuclidean" || n == "squared_euclidean" || n == "squared-euclidean")
        return LocalMetric::SquaredEuclidean;
    throw ConfigError("unknown metric '" + std::string(name) +
                      "' (expected manhattan, euclidean or sqeuclidean)");
}

std::vector<Point3> as_points(const SampleVectorSeries& series)
{
    std::vector<Point3> out;
    out.reserve(series.vectors.size());
    for (const auto& v : series.vectors)
        out.push_back({v.mean_return, v.std_dev, v.alpha});
    return out;
}

std::vector<SampleVectorSeries> standardize_panel(const std::vector<SampleVectorSeries>& series)
{
    if (series.size() < 2)
        throw Error("standardization needs at least two assets");
    std::array<double, 3> sum{}, sum_sq{};
    double count = 0.0;
    for (const auto& s : series)
        for (const auto& p : as_points(s)) {
            for (int k = 0; k < 3; ++k)
                sum[k] += p[k];
            count += 1.0;
        }
    std::array<double, 3> mean{}, sd{};
    for (int k = 0; k < 3; ++k)
        mean[k] = sum[k] / count;
    for (const auto& s : series)
        for (const auto& p : as_points(s))
            for (int k = 0; k < 3; ++k)
                sum_sq[k] += (p[k] - mean[k]) * (p[k] - mean[k]);
    constexpr std::array<const char*, 3> names = {"mean return", "standard deviation", "alpha"};
    for (int k = 0; k < 3; ++k) {
        sd[k] = std::sqrt(sum_sq[k] / count);
        if (!(sd[k] > 0.0))
            throw Error(std::string("zero pooled variance in ") + names[k] + ", cannot standardize");
    }

    auto out = series;
    for (auto& s : out)
        for (auto& v : s.vectors) {
            v.mean_return = (v.mean_return - mean[0]) / sd[0];
            v.std_dev = (v.std_dev - mean[1]) / sd[1];
            v.alpha = (v.alpha - mean[2]) / sd[2];
        }
    return out;
}

double local_cost(const Point3& a, const Point3& b, LocalMetric metric)
{
    double acc = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double diff = a[k] - b[k];
        acc += metric == LocalMetric::Manhattan ? std::abs(diff) : diff * diff;
    }
    return metric == LocalMetric::Euclidean ? std::sqrt(acc) : acc;
}

Eigen::MatrixXd local_cost_matrix(std::span<const Point3> a, std::span<const Point3> b,
                                  LocalMetric metric)
{
    Eigen::MatrixXd costs(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
    for (std::size_t t = 0; t < a.size(); ++t)
        for (std::size_t u = 0; u < b.size(); ++u)
            costs(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(u)) =
                local_cost(a[t], b[u], metric);
    return costs;
}

double dtw_distance(std::span<const Point3> a, std::span<const Point3> b, LocalMetric metric)
{
    if (a.size() != b.size())
        throw Error("DTW series length mismatch: " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()));
    if (a.empty())
        throw Error("DTW of empty series");
    const auto cost = local_cost_matrix(a, b, metric);
    const Eigen::Index n = cost.rows();
    constexpr double inf = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd acc = Eigen::MatrixXd::Constant(n, n, inf);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            double best = (i == 0 && j == 0) ? 0.0 : inf;
            if (i > 0)
                best = std::min(best, acc(i - 1, j));
            if (j > 0)
                best = std::min(best, acc(i, j - 1));
            if (i > 0 && j > 0)
                best = std::min(best, acc(i - 1, j - 1));
            acc(i, j) = best + cost(i, j);
        }
    return acc(n - 1, n - 1);
}

double dtw_distance(const SampleVectorSeries& a, const SampleVectorSeries& b, LocalMetric metric)
{
    const auto pa = as_points(a);
    const auto pb = as_points(b);
    return dtw_distance(pa, pb, metric);
}

namespace {

double enumerate_paths(const Eigen::MatrixXd& cost, Eigen::Index i, Eigen::Index j, double so_far)
{
    const Eigen::Index last = cost.rows() - 1;
    const double here = so_far + cost(i, j);
    if (i == last && j == last)
        return here;
    double best = std::numeric_limits<double>::infinity();
    if (i < last)
        best = std::min(best, enumerate_paths(cost, i + 1, j, here));
    if (j < last)
        best = std::min(best, enumerate_paths(cost, i, j + 1, here));
    if (i < last && j < last)
        best = std::min(best, enumerate_paths(cost, i + 1, j + 1, here));
    return best;
}

} // namespace

double dtw_distance_brute(std::span<const Point3> a, std::span<const Point3> b, LocalMetric metric)
{
    if (a.size() != b.size())
        throw Error("DTW series length mismatch");
    if (a.empty())
        throw Error("DTW of empty series");
    if (a.size() > kBruteForceMaxLength)
        throw Error("brute-force DTW limited to T <= " + std::to_string(kBruteForceMaxLength));
    return enumerate_paths(local_cost_matrix(a, b, metric), 0, 0, 0.0);
}

DistanceMatrix pairwise_matrix(const std::vector<SampleVectorSeries>& series, LocalMetric metric)
{
    const auto n = series.size();
    DistanceMatrix out;
    out.metric = metric;
    out.d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    std::vector<std::vector<Point3>> points;
    points.reserve(n);
    for (const auto& s : series) {
        out.labels.push_back(s.asset_id);
        points.push_back(as_points(s));
        const auto& ref = series.front().vectors;
        if (s.vectors.size() != ref.size())
            throw Error(s.asset_id + ": series length " + std::to_string(s.vectors.size()) +
                        " differs from " + series.front().asset_id + " (" +
                        std::to_string(ref.size()) + ")");
        for (std::size_t t = 0; t < ref.size(); ++t)
            if (s.vectors[t].year != ref[t].year)
                throw Error(s.asset_id + ": year grid differs from " + series.front().asset_id);
    }
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t k = m + 1; k < n; ++k) {
            const double d = dtw_distance(points[m], points[k], metric);
            out.d(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = d;
            out.d(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) = d;
        }
    return out;
}

void write_distance_csv(const DistanceMatrix& m, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out << "asset_id";
    for (const auto& l : m.labels)
        out << ',' << csv::escape(l);
    out << '\n';
    for (Eigen::Index i = 0; i < m.d.rows(); ++i) {
        out << csv::escape(m.labels[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < m.d.cols(); ++j)
            out << ',' << format_double(m.d(i, j));
        out << '\n';
    }
}

DistanceMatrix read_distance_csv(const std::filesystem::path& path, LocalMetric metric)
{
    const auto table = csv::read_file(path);
    DistanceMatrix m;
    m.metric = metric;
    m.labels.assign(table.header.begin() + 1, table.header.end());
    const auto n = static_cast<Eigen::Index>(m.labels.size());
    if (static_cast<Eigen::Index>(table.rows.size()) != n)
        throw Error("'" + path.string() + "' is not a square distance matrix");
    m.d.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& [line, f] = table.rows[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(f.size()) != n + 1 || f[0] != m.labels[static_cast<std::size_t>(i)])
            throw Error(path.filename().string() + " line " + std::to_string(line) + ": malformed row");
        for (Eigen::Index j = 0; j < n; ++j)
            m.d(i, j) = csv::parse_number(f[static_cast<std::size_t>(j + 1)]);
    }
    return m;
}

void write_distance_json(const DistanceMatrix& m, const std::filesystem::path& path)
{
    nlohmann::ordered_json doc;
    doc["labels"] = m.labels;
    doc["metric"] = metric_name(m.metric);
    auto rows = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < m.d.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(m.d.cols()));
        for (Eigen::Index j = 0; j < m.d.cols(); ++j)
            row[static_cast<std::size_t>(j)] = m.d(i, j);
        rows.push_back(row);
    }
    doc["rows"] = rows;
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out << doc.dump(1) << '\n';
}

DistanceMatrix read_distance_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open '" + path.string() + "'");
    const auto doc = nlohmann::json::parse(in);
    DistanceMatrix m;
    m.labels = doc.at("labels").get<std::vector<std::string>>();
    m.metric = parse_metric(doc.at("metric").get<std::string>());
    const auto n = static_cast<Eigen::Index>(m.labels.size());
    const auto& rows = doc.at("rows");
    if (static_cast<Eigen::Index>(rows.size()) != n)
        throw Error("'" + path.string() + "' is not a square distance matrix");
    m.d.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto row = rows[static_cast<std::size_t>(i)].get<std::vector<double>>();
        if (static_cast<Eigen::Index>(row.size()) != n)
            throw Error("'" + path.string() + "' is not a square distance matrix");
        for (Eigen::Index j = 0; j < n; ++j)
            m.d(i, j) = row[static_cast<std::size_t>(j)];
    }
    return m;
}

} // namespace coresat
