// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include "coresat/pipeline.hpp"

#include "rbf_oracle.hpp"
#include "stable_sampler.hpp"
#include "test_util.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

using namespace coresat;
namespace fs = std::filesystem;

namespace {

const fs::path kFixture = CORESAT_FIXTURE_DIR;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<Point3> random_points(std::mt19937_64& rng, std::size_t n)
{
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Point3> p(n);
    for (auto& x : p)
        x = {g(rng), g(rng), g(rng)};
    return p;
}

Outcome dtw_oracle()
{
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(1001);
    std::uniform_int_distribution<std::size_t> len(1, 6);
    double worst = 0.0;
    for (int pair = 0; pair < 1000; ++pair) {
        const auto t = len(rng);
        const auto a = random_points(rng, t), b = random_points(rng, t);
        for (auto m : kAllMetrics)
            worst = std::max(worst, std::abs(dtw_distance(a, b, m) - dtw_distance_brute(a, b, m)));
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-12 && secs < 10.0,
            fmt::format("1000 pairs x 3 metrics, max |diff| {:.3g}, {:.2f} s", worst, secs)};
}

SampleVectorSeries published(const std::string& id, const std::array<double, 6>& r, const std::array<double, 6>& s,
                             const std::array<double, 6>& a)
{
    SampleVectorSeries out{id, {}};
    for (int t = 0; t < 6; ++t)
        out.vectors.push_back({2014 + t, r[t], s[t], a[t], false});
    return out;
}

Outcome published_ordering()
{
    const auto z = standardize_panel({
        published("DMD", {-4.52, 1.67, -0.73, 8.46, -5.50, 0.85}, {28.12, 22.96, 9.65, 20.00, 14.37, 16.48},
                  {1.81, 1.18, 2.00, 2.00, 1.30, 2.00}),
        published("FRC", {-7.10, -1.62, -0.25, 5.92, -1.97, 5.05}, {18.74, 20.27, 59.19, 44.84, 29.43, 104.04},
                  {2.00, 1.44, 0.63, 1.18, 1.51, 0.90}),
        published("XPM", {-7.27, -0.38, -0.58, 5.38, -2.98, 0.70}, {15.58, 24.28, 8.66, 26.47, 22.84, 13.35},
                  {1.67, 1.65, 1.79, 1.63, 1.76, 1.57}),
        published("ZET", {-5.74, 0.16, 0.51, 2.88, -3.73, 1.11}, {28.72, 24.63, 16.39, 35.35, 20.14, 24.01},
                  {1.65, 1.68, 1.72, 1.74, 1.83, 1.80}),
    });
    bool ok = true;
    std::string detail;
    for (auto m : kAllMetrics) {
        const double similar = dtw_distance(z[2], z[3], m), divergent = dtw_distance(z[0], z[1], m);
        ok = ok && similar < divergent;
        detail += fmt::format("{}{} {:.3f} < {:.3f}", detail.empty() ? "" : ", ", metric_name(m), similar, divergent);
    }
    return {ok, "d(XPM,ZET) < d(DMD,FRC): " + detail};
}

Outcome stable_tail_recovery()
{
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(1003);
    bool ok = true;
    std::string detail;
    for (double alpha : {1.2, 1.5, 1.9}) {
        testing::StableSampler sampler({alpha, 0.0, 0.03, 0.0});
        std::vector<double> err;
        for (int b = 0; b < 200; ++b)
            err.push_back(std::abs(fit_tail_alpha(sampler.sample(rng, 52)).alpha - alpha));
        std::nth_element(err.begin(), err.begin() + 100, err.end());
        const double upper = err[100];
        const double lower = *std::max_element(err.begin(), err.begin() + 100);
        const double median = 0.5 * (lower + upper);
        ok = ok && median <= 0.25;
        detail += fmt::format("alpha {} median |err| {:.3f}, ", alpha, median);
    }
    const double normal = fit_tail_alpha(testing::StableSampler({2.0, 0.0, 1.0, 0.0}).sample(rng, 10000)).alpha;
    const double cauchy = fit_tail_alpha(testing::StableSampler({1.0, 0.0, 1.0, 0.0}).sample(rng, 10000)).alpha;
    ok = ok && normal >= 1.9 && normal <= 2.0 && cauchy >= 0.9 && cauchy <= 1.1;
    const double secs = seconds_since(t0);
    ok = ok && secs < 30.0;
    return {ok, detail + fmt::format("normal {:.3f}, Cauchy {:.3f} (10000 draws), {:.2f} s", normal, cauchy, secs)};
}

Outcome rbf_solver()
{
    std::mt19937_64 rng(1004);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const auto p = testing::random_rbf_problem(rng, 20, 400);
        for (bool constant : {true, false}) {
            const auto m = fit(p.sample, p.centers, p.shape, p.reg_alpha, constant);
            const Eigen::VectorXd oracle =
                testing::normal_equation_weights(p.sample, p.centers, p.shape, p.reg_alpha, constant);
            const Eigen::VectorXd diff = testing::model_weights(m) - oracle;
            worst = std::max(worst, diff.cwiseAbs().maxCoeff() / std::max(1.0, oracle.cwiseAbs().maxCoeff()));
        }
    }

    int monotone = 0;
    double flat_worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const auto p = testing::random_rbf_problem(rng, 20, 400);
        double last_res = -1.0, last_norm = std::numeric_limits<double>::infinity();
        bool ok = true;
        for (double reg : {1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0, 99.0}) {
            const auto m = fit(p.sample, p.centers, p.shape, reg, true);
            const double res = training_residual(m, p.sample), norm = weight_norm_squared(m);
            ok = ok && res >= last_res * (1.0 - 1e-9) && norm <= last_norm * (1.0 + 1e-9);
            last_res = res;
            last_norm = norm;
        }
        monotone += ok;

        const auto flat = fit(p.sample, p.centers, p.shape, 1e6, true);
        const auto [lo, hi] = std::minmax_element(p.sample.values.begin(), p.sample.values.end());
        const double mean = std::accumulate(p.sample.values.begin(), p.sample.values.end(), 0.0) /
                            static_cast<double>(p.sample.values.size());
        double dev = 0.0;
        for (double x = 0.0; x <= 10.0; x += 0.5)
            for (double y = 0.0; y <= 10.0; y += 0.5)
                dev = std::max(dev, std::abs(evaluate(flat, {x, y}) - mean));
        flat_worst = std::max(flat_worst, dev / (*hi - *lo));
    }
    return {worst <= 1e-8 && monotone == 50 && flat_worst <= 0.01,
            fmt::format("oracle max rel diff {:.3g} on 200 fits, monotone {}/50, flat-limit deviation {:.3g} of range",
                        worst, monotone, flat_worst)};
}

Outcome shape_identity()
{
    std::mt19937_64 rng(1005);
    std::uniform_real_distribution<double> r(0.1, 20.0), p(1e-6, 1.0 - 1e-6);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double spacing = r(rng), residual = p(rng);
        worst = std::max(worst, std::abs(gaussian_kernel(shape_from_residual(spacing, residual), spacing * spacing) -
                                         residual));
    }
    return {worst <= 1e-15, fmt::format("100 pairs, max |exp(-a R^2) - p| {:.3g}", worst)};
}

Outcome kink_detection()
{
    // 351 values (a 27-asset upper triangle): 75% spread over [0, 0.3], the rest over [0.3, 1]
    EcdfCurve c;
    const std::size_t k_total = 351;
    for (std::size_t k = 1; k <= k_total; ++k) {
        const double p = static_cast<double>(k) / static_cast<double>(k_total);
        c.probabilities.push_back(p);
        c.sorted_values.push_back(p <= 0.75 ? 0.3 * p / 0.75 : 0.3 + 0.7 * (p - 0.75) / 0.25);
    }
    const auto kink = detect_kink(c);
    return {std::abs(kink.p - 0.75) <= 0.01, fmt::format("kink at p = {:.4f}", kink.p)};
}

std::map<std::string, std::string> planted_groups()
{
    std::map<std::string, std::string> groups;
    std::istringstream in(testing::read_file(kFixture / "planted.csv"));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        groups[line.substr(0, comma)] = line.substr(comma + 1);
    }
    return groups;
}

Outcome planted_recovery()
{
    testing::TempDir tmp;
    auto config = load_config(kFixture / "config.json");
    config.output_dir = tmp / "out";
    const auto t0 = std::chrono::steady_clock::now();
    Pipeline pipeline(config);
    const auto result = pipeline.run();
    const double secs = seconds_since(t0);
    const auto groups = planted_groups();
    int core = 0, outsiders = 0;
    for (const auto& id : result.intersection_core) {
        core += groups.at(id) == "core";
        outsiders += groups.at(id) == "outsider";
    }
    return {core >= 18 && outsiders <= 1 && secs < 60.0,
            fmt::format("{}/20 planted core and {}/7 outsiders in the intersection core, {:.2f} s", core, outsiders,
                        secs)};
}

// Random universe: most assets share one yearly (scale, alpha) path, the rest wander.
ReturnPanel random_universe(std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> size(14, 30);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = size(rng);
    const int core = static_cast<int>(std::lround(0.85 * n));
    const auto grid = week_grid(parse_date("2014-01-01"), parse_date("2019-06-01"), std::chrono::Sunday);
    ReturnPanel panel;
    panel.weeks.assign(grid.begin() + 1, grid.end());
    panel.returns.resize(n, static_cast<Eigen::Index>(panel.weeks.size()));
    std::array<double, 6> base_scale{}, base_alpha{};
    for (int y = 0; y < 6; ++y) {
        base_scale[y] = 0.05 + 0.1 * u(rng);
        base_alpha[y] = 1.4 + 0.5 * u(rng);
    }
    for (int a = 0; a < n; ++a) {
        panel.assets.push_back(fmt::format("U{:02d}", a));
        for (int y = 0; y < 6; ++y) {
            const bool inside = a < core;
            const double scale = inside ? base_scale[y] * (1.0 + 0.05 * (u(rng) - 0.5)) : 0.05 + 0.5 * u(rng);
            const double alpha = inside ? base_alpha[y] : 0.8 + 1.2 * u(rng);
            const double drift = inside ? 0.0 : 0.05 * (u(rng) - 0.5);
            testing::StableSampler sampler({alpha, 0.0, scale, drift});
            for (std::size_t t = 0; t < panel.weeks.size(); ++t)
                if (year_of(panel.weeks[t]) == 2014 + y)
                    panel.returns(a, static_cast<Eigen::Index>(t)) = sampler(rng);
        }
    }
    return panel;
}

struct UniverseRun {
    std::vector<DistanceMatrix> distances;
    std::vector<MetricSegmentation> segments;
    SegmentationResult result;
};

UniverseRun run_universe(const ReturnPanel& panel)
{
    UniverseRun run;
    const auto series = standardize_panel(build_sample_series(panel, AlphaFitOptions{}));
    std::vector<MetricCore> cores;
    for (auto m : kAllMetrics) {
        run.distances.push_back(pairwise_matrix(series, m));
        run.segments.push_back(segment_metric(run.distances.back(), SegmentSettings{}));
        cores.push_back(run.segments.back().core);
    }
    run.result = intersect(panel.assets, cores);
    return run;
}

std::string check_invariants(std::mt19937_64& rng)
{
    const auto panel = random_universe(rng);
    const auto run = run_universe(panel);
    for (std::size_t k = 0; k < run.distances.size(); ++k) {
        const auto& d = run.distances[k].d;
        if (!(d == d.transpose()) || !d.diagonal().isZero(0.0))
            return "distance matrix not symmetric with zero diagonal";
        const auto& s = run.segments[k].seriated;
        const Eigen::VectorXd sums = s.d_norm.rowwise().sum();
        for (Eigen::Index i = 1; i < sums.size(); ++i)
            if (sums(i - 1) > sums(i) * (1.0 + 1e-12))
                return "seriated row sums not ascending";
        const auto again = seriate(DistanceMatrix{s.labels, s.d_norm, s.metric});
        if (again.labels != s.labels || !(again.d_norm == s.d_norm))
            return "normalization not idempotent";
        std::size_t last = 0;
        for (double p : {0.05, 0.2, 0.4, 0.6, 0.75, 0.9, 0.99}) {
            const auto core = core_block(run.segments[k].model, s, threshold(run.segments[k].ecdf, p));
            if (core.core_size < last)
                return "core shrinks as d_bound grows";
            last = core.core_size;
        }
        const auto& ids = run.segments[k].core.core_ids;
        for (const auto& id : run.result.intersection_core)
            if (std::find(ids.begin(), ids.end(), id) == ids.end())
                return "intersection not inside a metric core";
    }

    // relabel: shuffle the assets and rename them
    std::vector<Eigen::Index> perm(panel.assets.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    ReturnPanel shuffled;
    shuffled.weeks = panel.weeks;
    shuffled.returns.resize(panel.returns.rows(), panel.returns.cols());
    std::map<std::string, std::string> rename;
    for (std::size_t k = 0; k < perm.size(); ++k) {
        shuffled.assets.push_back(fmt::format("Z{:02d}", perm.size() - k));
        shuffled.returns.row(static_cast<Eigen::Index>(k)) = panel.returns.row(perm[k]);
        rename[panel.assets[static_cast<std::size_t>(perm[k])]] = shuffled.assets.back();
    }
    const auto other = run_universe(shuffled);
    const auto mapped = [&](const std::vector<std::string>& ids) {
        std::set<std::string> out;
        for (const auto& id : ids)
            out.insert(rename.at(id));
        return out;
    };
    const auto as_set = [](const std::vector<std::string>& ids) { return std::set<std::string>(ids.begin(), ids.end()); };
    for (std::size_t k = 0; k < run.segments.size(); ++k)
        if (mapped(run.segments[k].core.core_ids) != as_set(other.segments[k].core.core_ids))
            return "metric core changes under relabeling";
    if (mapped(run.result.intersection_core) != as_set(other.result.intersection_core))
        return "intersection core changes under relabeling";
    return {};
}

Outcome structural_invariants()
{
    std::mt19937_64 rng(1008);
    int passed = 0;
    std::string first_failure;
    for (int instance = 0; instance < 100; ++instance) {
        std::string why;
        try {
            why = check_invariants(rng);
        } catch (const std::exception& e) {
            why = e.what();
        }
        if (why.empty())
            ++passed;
        else if (first_failure.empty())
            first_failure = fmt::format(" (instance {}: {})", instance, why);
    }
    return {passed == 100, fmt::format("{}/100 randomized instances{}", passed, first_failure)};
}

std::vector<std::string> lines_of(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
        out.push_back(line);
    return out;
}

// comment lines hold key=value tokens; numbers compare within 1e-9, everything else exactly
bool same_metadata(const std::string& got, const std::string& want)
{
    std::istringstream a(got), b(want);
    std::string x, y;
    while (true) {
        const bool more_a = static_cast<bool>(a >> x), more_b = static_cast<bool>(b >> y);
        if (more_a != more_b)
            return false;
        if (!more_a)
            return true;
        if (x == y)
            continue;
        const auto ex = x.find('='), ey = y.find('=');
        if (ex == std::string::npos || x.substr(0, ex) != y.substr(0, ey))
            return false;
        try {
            if (std::abs(std::stod(x.substr(ex + 1)) - std::stod(y.substr(ey + 1))) > 1e-9)
                return false;
        } catch (const std::exception&) {
            return false;
        }
    }
}

Outcome report_shape()
{
    testing::TempDir tmp;
    auto config = load_config(kFixture / "config.json");
    config.output_dir = tmp / "out";
    Pipeline(config).run();
    const auto got = lines_of(testing::read_file(tmp / "out" / Pipeline::report_file("csv")));
    const auto want = lines_of(testing::read_file(kFixture / "golden" / "core_satellite.csv"));
    if (got.size() != want.size())
        return {false, fmt::format("{} lines, golden has {}", got.size(), want.size())};
    std::size_t thresholds = 0;
    for (std::size_t k = 0; k < got.size(); ++k) {
        const bool comment = !want[k].empty() && want[k][0] == '#';
        thresholds += comment && want[k].find("d_bound=") != std::string::npos;
        if (comment ? !same_metadata(got[k], want[k]) : got[k] != want[k])
            return {false, fmt::format("line {} differs: '{}' vs golden '{}'", k + 1, got[k], want[k])};
    }
    const std::string header = "No.,ID,Name,Manhattan,Euclidean,Sq. Eucl.,Intersection";
    const bool has_header = std::find(got.begin(), got.end(), header) != got.end();
    return {has_header && thresholds == 3,
            fmt::format("{} lines match the golden report, {} metric thresholds in the header", got.size(), thresholds)};
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"dtw matches exhaustive path enumeration", dtw_oracle},
        {"published sample-vector ordering", published_ordering},
        {"stable tail index recovery", stable_tail_recovery},
        {"rbf solver against normal equations", rbf_solver},
        {"shape parameter identity", shape_identity},
        {"kink detection", kink_detection},
        {"planted core recovery on the fixture", planted_recovery},
        {"structural invariants", structural_invariants},
        {"core/satellite report against golden file", report_shape},
    };
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << ' ' << k + 1 << ". " << criteria[k].first << ": " << o.detail
                  << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
