#include "coresat/plots.hpp"

#include "coresat/common.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <fstream>

namespace coresat::plots {

namespace {

constexpr double kMargin = 60.0;
constexpr double kPlotSize = 540.0;

std::string xml_escape(const std::string& text)
{
    std::string out;
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

std::string header(double width, double height, const std::string& title)
{
    return fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" "
        "viewBox=\"0 0 {0:.0f} {1:.0f}\" font-family=\"sans-serif\" font-size=\"10\">\n"
        "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        "<text x=\"{2:.1f}\" y=\"24\" font-size=\"14\" text-anchor=\"middle\">{3}</text>\n",
        width, height, width / 2.0, xml_escape(title));
}

std::string gray(double v)
{
    const int level = static_cast<int>(std::lround(255.0 * (1.0 - std::clamp(v, 0.0, 1.0))));
    return fmt::format("rgb({0},{0},{0})", level);
}

std::string axis_labels(const std::vector<std::string>& labels, double cell)
{
    std::string out;
    const double font = std::clamp(cell * 0.8, 4.0, 10.0);
    for (std::size_t k = 0; k < labels.size(); ++k) {
        const double centre = kMargin + (static_cast<double>(k) + 0.5) * cell;
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"{:.1f}\" text-anchor=\"end\" "
                           "dominant-baseline=\"middle\">{}</text>\n",
                           kMargin - 4.0, centre, font, xml_escape(labels[k]));
        out += fmt::format("<text x=\"{0:.2f}\" y=\"{1:.2f}\" font-size=\"{2:.1f}\" text-anchor=\"start\" "
                           "transform=\"rotate(-90 {0:.2f} {1:.2f})\" dominant-baseline=\"middle\">{3}</text>\n",
                           centre, kMargin + kPlotSize + 4.0, font, xml_escape(labels[k]));
    }
    return out;
}

} // namespace

std::vector<Segment> contour(const Eigen::MatrixXd& grid, double level)
{
    std::vector<Segment> segments;
    const auto interp = [&](double r0, double c0, double v0, double r1, double c1, double v1) {
        const double t = v1 == v0 ? 0.5 : (level - v0) / (v1 - v0);
        return std::array<double, 2>{r0 + t * (r1 - r0), c0 + t * (c1 - c0)};
    };
    for (Eigen::Index r = 0; r + 1 < grid.rows(); ++r)
        for (Eigen::Index c = 0; c + 1 < grid.cols(); ++c) {
            // corners in order: (r,c) (r,c+1) (r+1,c+1) (r+1,c)
            const std::array<double, 4> v = {grid(r, c), grid(r, c + 1), grid(r + 1, c + 1), grid(r + 1, c)};
            const std::array<double, 4> rr = {double(r), double(r), double(r + 1), double(r + 1)};
            const std::array<double, 4> cc = {double(c), double(c + 1), double(c + 1), double(c)};
            int mask = 0;
            for (int k = 0; k < 4; ++k)
                if (v[k] > level)
                    mask |= 1 << k;
            if (mask == 0 || mask == 15)
                continue;
            // crossing point on edge k (between corner k and k+1)
            const auto edge = [&](int k) {
                const int k1 = (k + 1) % 4;
                return interp(rr[k], cc[k], v[k], rr[k1], cc[k1], v[k1]);
            };
            std::vector<int> crossed;
            for (int k = 0; k < 4; ++k) {
                const bool a = (mask >> k) & 1;
                const bool b = (mask >> ((k + 1) % 4)) & 1;
                if (a != b)
                    crossed.push_back(k);
            }
            if (crossed.size() == 2) {
                const auto p = edge(crossed[0]);
                const auto q = edge(crossed[1]);
                segments.push_back({p[1], p[0], q[1], q[0]});
            } else if (crossed.size() == 4) {
                // saddle: decide by the cell centre
                const double centre = (v[0] + v[1] + v[2] + v[3]) / 4.0;
                const bool centre_high = centre > level;
                const bool corner0_high = mask & 1;
                const std::array<std::pair<int, int>, 2> pairs =
                    centre_high == corner0_high ? std::array<std::pair<int, int>, 2>{{{0, 1}, {2, 3}}}
                                                : std::array<std::pair<int, int>, 2>{{{3, 0}, {1, 2}}};
                for (auto [e0, e1] : pairs) {
                    const auto p = edge(e0);
                    const auto q = edge(e1);
                    segments.push_back({p[1], p[0], q[1], q[0]});
                }
            }
        }
    return segments;
}

std::string heatmap_svg(const Eigen::MatrixXd& values, const std::vector<std::string>& labels,
                        const std::string& title)
{
    const auto n = static_cast<double>(values.rows());
    const double cell = kPlotSize / std::max(1.0, n);
    std::string svg = header(kPlotSize + 2 * kMargin, kPlotSize + 2 * kMargin, title);
    for (Eigen::Index i = 0; i < values.rows(); ++i)
        for (Eigen::Index j = 0; j < values.cols(); ++j)
            svg += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n",
                               kMargin + static_cast<double>(j) * cell, kMargin + static_cast<double>(i) * cell,
                               cell, cell, gray(values(i, j)));
    svg += fmt::format("<rect x=\"{0:.1f}\" y=\"{0:.1f}\" width=\"{1:.1f}\" height=\"{1:.1f}\" fill=\"none\" "
                       "stroke=\"black\"/>\n",
                       kMargin, kPlotSize);
    svg += axis_labels(labels, cell);
    svg += "</svg>\n";
    return svg;
}

std::string surface_svg(const Eigen::MatrixXd& grid, const std::vector<std::string>& labels,
                        const std::vector<double>& levels, std::optional<double> highlight,
                        const std::string& title)
{
    const auto n = static_cast<double>(labels.size());
    const double cell = kPlotSize / std::max(1.0, n);
    // grid node (r, c) spans matrix coordinate 1 + r * step
    const double step = grid.rows() > 1 ? (n - 1.0) / static_cast<double>(grid.rows() - 1) : 1.0;
    const auto to_px = [&](double coord) { return kMargin + (coord - 0.5) * cell; };
    const double px = step * cell;

    std::string svg = header(kPlotSize + 2 * kMargin, kPlotSize + 2 * kMargin, title);
    for (Eigen::Index r = 0; r < grid.rows(); ++r)
        for (Eigen::Index c = 0; c < grid.cols(); ++c)
            svg += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n",
                               to_px(1.0 + static_cast<double>(c) * step) - px / 2.0,
                               to_px(1.0 + static_cast<double>(r) * step) - px / 2.0, px + 0.05, px + 0.05,
                               gray(grid(r, c)));
    const auto path_for = [&](const std::vector<Segment>& segs) {
        std::string d;
        for (const auto& s : segs)
            d += fmt::format("M{:.2f} {:.2f}L{:.2f} {:.2f}", to_px(1.0 + s.x0 * step), to_px(1.0 + s.y0 * step),
                             to_px(1.0 + s.x1 * step), to_px(1.0 + s.y1 * step));
        return d;
    };
    for (double level : levels) {
        const auto segs = contour(grid, level);
        if (!segs.empty())
            svg += fmt::format("<path d=\"{}\" fill=\"none\" stroke=\"white\" stroke-width=\"1\" "
                               "stroke-dasharray=\"4 3\"/>\n",
                               path_for(segs));
    }
    if (highlight) {
        const auto segs = contour(grid, *highlight);
        if (!segs.empty())
            svg += fmt::format("<path d=\"{}\" fill=\"none\" stroke=\"#c8c8c8\" stroke-width=\"2.5\"/>\n",
                               path_for(segs));
        svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">d_bound = {:.3f}</text>\n",
                           kMargin + kPlotSize / 2.0, kMargin - 8.0, *highlight);
    }
    svg += axis_labels(labels, cell);
    svg += "</svg>\n";
    return svg;
}

std::string ecdf_svg(const std::vector<double>& sorted_values, const std::vector<double>& probabilities,
                     double window_lo, double window_hi, double kink_value, double kink_p,
                     const std::string& title)
{
    const auto x_px = [](double v) { return kMargin + std::clamp(v, 0.0, 1.0) * kPlotSize; };
    const auto y_px = [](double p) { return kMargin + (1.0 - std::clamp(p, 0.0, 1.0)) * kPlotSize; };
    std::string svg = header(kPlotSize + 2 * kMargin, kPlotSize + 2 * kMargin, title);
    svg += fmt::format("<rect x=\"{0:.1f}\" y=\"{0:.1f}\" width=\"{1:.1f}\" height=\"{1:.1f}\" fill=\"none\" "
                       "stroke=\"black\"/>\n",
                       kMargin, kPlotSize);
    for (int k = 0; k <= 5; ++k) {
        const double t = k / 5.0;
        svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.1f}</text>\n", x_px(t),
                           kMargin + kPlotSize + 14.0, t);
        svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\" dominant-baseline=\"middle\">"
                           "{:.1f}</text>\n",
                           kMargin - 6.0, y_px(t), t);
    }
    std::string d = fmt::format("M{:.2f} {:.2f}", x_px(0.0), y_px(0.0));
    double prev_p = 0.0;
    for (std::size_t k = 0; k < sorted_values.size(); ++k) {
        d += fmt::format("L{:.2f} {:.2f}L{:.2f} {:.2f}", x_px(sorted_values[k]), y_px(prev_p),
                         x_px(sorted_values[k]), y_px(probabilities[k]));
        prev_p = probabilities[k];
    }
    d += fmt::format("L{:.2f} {:.2f}", x_px(1.0), y_px(prev_p));
    svg += fmt::format("<path d=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.2\"/>\n", d);
    for (double p : {window_lo, window_hi})
        svg += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.2f}\" x2=\"{:.1f}\" y2=\"{:.2f}\" stroke=\"gray\" "
                           "stroke-dasharray=\"1 3\"/>\n",
                           x_px(0.0), y_px(p), x_px(1.0), y_px(p));
    svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"none\" stroke=\"red\" "
                       "stroke-width=\"1.5\"/>\n",
                       x_px(kink_value), y_px(kink_p));
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" fill=\"red\">p = {:.3f}, d_bound = {:.3f}</text>\n",
                       x_px(kink_value) + 8.0, y_px(kink_p) + 14.0, kink_p, kink_value);
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">normalized DTW distance</text>\n",
                       kMargin + kPlotSize / 2.0, kMargin + kPlotSize + 32.0);
    svg += "</svg>\n";
    return svg;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out << text;
}

} // namespace coresat::plots
