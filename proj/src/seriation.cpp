#include "coresat/seriation.hpp"

#include "coresat/csv.hpp"
#include "coresat/plots.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

namespace coresat {

std::vector<std::size_t> order_by_mean_distance(const DistanceMatrix& d)
{
    const auto n = static_cast<std::size_t>(d.d.rows());
    if (n < 2)
        throw Error("seriation needs at least two assets");
    const Eigen::VectorXd row_sums = d.d.rowwise().sum();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return row_sums(static_cast<Eigen::Index>(a)) < row_sums(static_cast<Eigen::Index>(b));
    });
    return order;
}

SeriatedMatrix normalize_minmax(const DistanceMatrix& d, std::span<const std::size_t> order)
{
    const auto n = static_cast<std::size_t>(d.d.rows());
    if (order.size() != n)
        throw Error("seriation order does not match matrix size");
    std::vector<bool> seen(n, false);
    for (auto k : order) {
        if (k >= n || seen[k])
            throw Error("seriation order is not a permutation");
        seen[k] = true;
    }
    const double max_raw = d.d.maxCoeff();
    if (!(max_raw > 0.0))
        throw Error("all distances are zero, nothing to normalize (identical assets)");

    SeriatedMatrix s;
    s.order.assign(order.begin(), order.end());
    s.metric = d.metric;
    s.max_raw = max_raw;
    s.d_norm.resize(d.d.rows(), d.d.cols());
    for (std::size_t i = 0; i < n; ++i) {
        s.labels.push_back(d.labels[order[i]]);
        for (std::size_t j = 0; j < n; ++j)
            s.d_norm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                d.d(static_cast<Eigen::Index>(order[i]), static_cast<Eigen::Index>(order[j])) / max_raw;
    }
    return s;
}

SeriatedMatrix seriate(const DistanceMatrix& d)
{
    const auto order = order_by_mean_distance(d);
    return normalize_minmax(d, order);
}

void write_seriated_csv(const SeriatedMatrix& s, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out << "# metric=" << metric_name(s.metric) << ",max_raw=" << format_double(s.max_raw) << '\n';
    out << "asset_id";
    for (const auto& l : s.labels)
        out << ',' << csv::escape(l);
    out << '\n';
    for (Eigen::Index i = 0; i < s.d_norm.rows(); ++i) {
        out << csv::escape(s.labels[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < s.d_norm.cols(); ++j)
            out << ',' << format_double(s.d_norm(i, j));
        out << '\n';
    }
}

void write_heatmap_svg(const SeriatedMatrix& s, const std::filesystem::path& path)
{
    plots::write_text(path, plots::heatmap_svg(s.d_norm, s.labels,
                                               "Seriated DTW distances (" +
                                                   std::string(metric_name(s.metric)) + ")"));
}

} // namespace coresat
