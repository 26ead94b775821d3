#include "coresat/rbf.hpp"

#include "coresat/plots.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace coresat {

SurfaceSample upper_triangle_sample(const SeriatedMatrix& s)
{
    SurfaceSample sample;
    const Eigen::Index n = s.d_norm.rows();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) {
            sample.points.push_back({static_cast<double>(i + 1), static_cast<double>(j + 1)});
            sample.values.push_back(s.d_norm(i, j));
        }
    return sample;
}

std::vector<Point2> frame_centers(std::size_t n, double spacing)
{
    if (n < 2)
        throw Error("frame needs a matrix of size >= 2");
    if (!(spacing > 0.0))
        throw Error("frame spacing must be positive");
    if (spacing >= static_cast<double>(n))
        throw Error("frame spacing " + format_double(spacing) + " >= matrix size " +
                    std::to_string(n) + ", frame is degenerate");
    const double lo = 1.0 - spacing;
    const double side = static_cast<double>(n - 1) + 2.0 * spacing;
    const auto segments = static_cast<int>(std::ceil(side / spacing - 1e-9));
    const double step = side / segments;
    const auto coord = [&](int k) { return lo + k * step; };

    std::vector<Point2> centers;
    centers.reserve(static_cast<std::size_t>(4 * segments));
    for (int k = 0; k < segments; ++k)
        centers.push_back({coord(k), coord(0)});
    for (int k = 0; k < segments; ++k)
        centers.push_back({coord(segments), coord(k)});
    for (int k = segments; k > 0; --k)
        centers.push_back({coord(k), coord(segments)});
    for (int k = segments; k > 0; --k)
        centers.push_back({coord(0), coord(k)});
    return centers;
}

double shape_from_residual(double spacing, double residual)
{
    if (!(residual > 0.0 && residual < 1.0))
        throw Error("residual p must lie in (0, 1)");
    if (!(spacing > 0.0))
        throw Error("center spacing R must be positive");
    return -std::log(residual) / (spacing * spacing);
}

double gaussian_kernel(double shape, double squared_distance)
{
    return std::exp(-shape * squared_distance);
}

namespace {

double squared_distance(Point2 a, Point2 b)
{
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

} // namespace

RbfModel fit(const SurfaceSample& sample, std::vector<Point2> centers, double shape,
             double reg_alpha, bool with_constant)
{
    if (sample.points.empty() || sample.points.size() != sample.values.size())
        throw Error("RBF sample is empty or inconsistent");
    if (!(shape > 0.0))
        throw Error("RBF shape parameter must be positive");
    if (!(reg_alpha >= 0.0) || !std::isfinite(reg_alpha))
        throw Error("regularization parameter must be non-negative");

    const auto s = static_cast<Eigen::Index>(sample.points.size());
    const auto m = static_cast<Eigen::Index>(centers.size());
    const Eigen::Index offset = with_constant ? 1 : 0;
    const Eigen::Index cols = m + offset;
    if (cols == 0)
        throw Error("RBF model has no basis functions");

    Eigen::MatrixXd basis(s, cols);
    Eigen::VectorXd y(s);
    for (Eigen::Index i = 0; i < s; ++i) {
        const auto p = sample.points[static_cast<std::size_t>(i)];
        if (with_constant)
            basis(i, 0) = 1.0;
        for (Eigen::Index k = 0; k < m; ++k)
            basis(i, k + offset) =
                gaussian_kernel(shape, squared_distance(p, centers[static_cast<std::size_t>(k)]));
        y(i) = sample.values[static_cast<std::size_t>(i)];
    }

    // Same minimizer as (Phi + reg/S * P) w = v, solved on the stacked design
    // [Psi; sqrt(reg) P] / sqrt(S) so the Gram matrix is never formed.
    const Eigen::Index penalty_rows = reg_alpha > 0.0 ? m : 0;
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(s + penalty_rows, cols);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s + penalty_rows);
    const double inv_sqrt_s = 1.0 / std::sqrt(static_cast<double>(s));
    design.topRows(s) = basis * inv_sqrt_s;
    rhs.head(s) = y * inv_sqrt_s;
    for (Eigen::Index k = 0; k < penalty_rows; ++k)
        design(s + k, k + offset) = std::sqrt(reg_alpha) * inv_sqrt_s;

    const Eigen::BDCSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv(0), smin = sv(sv.size() - 1);
    const double tol = smax * std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(s, cols));
    if (!(smin > tol)) {
        if (reg_alpha == 0.0)
            throw Error("RBF least-squares system is singular at reg_alpha = 0; use a positive reg_alpha");
        throw Error("RBF least-squares system is singular; increase reg_alpha");
    }
    const Eigen::VectorXd w = svd.solve(rhs);
    if (!w.allFinite())
        throw Error("RBF solve produced non-finite weights; increase reg_alpha");

    RbfModel model;
    model.centers = std::move(centers);
    model.shape = shape;
    model.has_constant_term = with_constant;
    model.constant = with_constant ? w(0) : 0.0;
    model.weights = w.tail(m);
    model.reg_alpha = reg_alpha;
    model.condition_estimate = smax / smin;
    return model;
}

RbfModel fit_surface(const SeriatedMatrix& s, const RbfSettings& settings)
{
    const auto n = static_cast<std::size_t>(s.d_norm.rows());
    const double spacing = settings.spacing > 0.0 ? settings.spacing : static_cast<double>(n) / 6.0;
    auto centers = frame_centers(n, spacing);
    const double shape = shape_from_residual(spacing, settings.residual);
    return fit(upper_triangle_sample(s), std::move(centers), shape, settings.reg_alpha,
               settings.constant_term);
}

double evaluate(const RbfModel& model, Point2 point)
{
    double y = model.has_constant_term ? model.constant : 0.0;
    for (std::size_t k = 0; k < model.centers.size(); ++k)
        y += model.weights(static_cast<Eigen::Index>(k)) *
             gaussian_kernel(model.shape, squared_distance(point, model.centers[k]));
    return y;
}

double training_residual(const RbfModel& model, const SurfaceSample& sample)
{
    double sse = 0.0;
    for (std::size_t i = 0; i < sample.points.size(); ++i) {
        const double e = evaluate(model, sample.points[i]) - sample.values[i];
        sse += e * e;
    }
    return sse;
}

double weight_norm_squared(const RbfModel& model)
{
    return model.weights.squaredNorm();
}

void write_model_json(const RbfModel& model, const std::filesystem::path& path)
{
    nlohmann::ordered_json doc;
    auto centers = nlohmann::ordered_json::array();
    for (const auto& c : model.centers)
        centers.push_back({c.x, c.y});
    doc["centers"] = centers;
    doc["weights"] = std::vector<double>(model.weights.data(), model.weights.data() + model.weights.size());
    doc["a"] = model.shape;
    doc["c0"] = model.has_constant_term ? nlohmann::ordered_json(model.constant) : nlohmann::ordered_json();
    doc["reg_alpha"] = model.reg_alpha;
    doc["condition_estimate"] = model.condition_estimate;
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out << doc.dump(1) << '\n';
}

RbfModel read_model_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open '" + path.string() + "'");
    const auto doc = nlohmann::json::parse(in);
    RbfModel model;
    for (const auto& c : doc.at("centers"))
        model.centers.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
    const auto w = doc.at("weights").get<std::vector<double>>();
    if (w.size() != model.centers.size())
        throw Error("'" + path.string() + "': weights and centers differ in count");
    model.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    model.shape = doc.at("a").get<double>();
    model.has_constant_term = !doc.at("c0").is_null();
    model.constant = model.has_constant_term ? doc.at("c0").get<double>() : 0.0;
    model.reg_alpha = doc.at("reg_alpha").get<double>();
    if (doc.contains("condition_estimate") && doc["condition_estimate"].is_number())
        model.condition_estimate = doc["condition_estimate"].get<double>();
    return model;
}

void write_surface_csv(const RbfModel& model, std::size_t n, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out << "i,j,height\n";
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= n; ++j)
            out << i << ',' << j << ','
                << format_double(evaluate(model, {static_cast<double>(i), static_cast<double>(j)})) << '\n';
}

void write_surface_svg(const RbfModel& model, const std::vector<std::string>& labels,
                       std::optional<double> d_bound, const std::filesystem::path& path)
{
    constexpr int kSamplesPerCell = 4;
    const auto n = static_cast<Eigen::Index>(labels.size());
    const Eigen::Index nodes = std::max<Eigen::Index>(2, (n - 1) * kSamplesPerCell + 1);
    const double step = n > 1 ? static_cast<double>(n - 1) / static_cast<double>(nodes - 1) : 1.0;
    Eigen::MatrixXd grid(nodes, nodes);
    for (Eigen::Index r = 0; r < nodes; ++r)
        for (Eigen::Index c = 0; c < nodes; ++c)
            grid(r, c) = evaluate(model, {1.0 + static_cast<double>(r) * step, 1.0 + static_cast<double>(c) * step});
    plots::write_text(path, plots::surface_svg(grid, labels, {0.2, 0.4, 0.6, 0.8}, d_bound,
                                               "RBF model of the seriated distance matrix"));
}

} // namespace coresat
