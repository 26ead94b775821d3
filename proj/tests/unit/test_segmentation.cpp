#include "coresat/segmentation.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace coresat;

namespace {

SeriatedMatrix random_seriated(std::mt19937_64& rng, Eigen::Index n)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DistanceMatrix d;
    d.d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d.labels.push_back("A" + std::to_string(i));
        for (Eigen::Index j = i + 1; j < n; ++j)
            d.d(i, j) = d.d(j, i) = u(rng);
    }
    return seriate(d);
}

// ECDF of K values: a fraction `knee` spread evenly over [0, v_knee], the rest over [v_knee, 1]
EcdfCurve two_slope_curve(std::size_t k_total, double knee, double v_knee)
{
    EcdfCurve c;
    for (std::size_t k = 1; k <= k_total; ++k) {
        const double p = static_cast<double>(k) / static_cast<double>(k_total);
        c.probabilities.push_back(p);
        c.sorted_values.push_back(p <= knee ? v_knee * p / knee : v_knee + (1.0 - v_knee) * (p - knee) / (1.0 - knee));
    }
    return c;
}

RbfModel flat_model(double level)
{
    RbfModel m;
    m.constant = level;
    m.weights.resize(0);
    return m;
}

std::size_t brute_core_size(const RbfModel& model, std::size_t n, double d_bound)
{
    std::size_t best = 0;
    for (std::size_t k = 1; k <= n; ++k) {
        bool ok = true;
        for (std::size_t i = 1; i <= k; ++i)
            for (std::size_t j = i; j <= k; ++j)
                ok = ok && evaluate(model, {double(i), double(j)}) <= d_bound;
        if (!ok)
            break;
        best = k;
    }
    return best;
}

MetricCore core_of(LocalMetric m, std::vector<std::string> ids)
{
    MetricCore c;
    c.metric = m;
    c.core_ids = std::move(ids);
    c.core_size = c.core_ids.size();
    return c;
}

} // namespace

TEST_CASE("ecdf_upper_triangle")
{
    std::mt19937_64 rng(31);
    const auto s = random_seriated(rng, 27);
    const auto c = ecdf_upper_triangle(s);
    REQUIRE(c.sorted_values.size() == 351);
    std::vector<double> expected;
    for (Eigen::Index i = 0; i < 27; ++i)
        for (Eigen::Index j = i + 1; j < 27; ++j)
            expected.push_back(s.d_norm(i, j));
    std::sort(expected.begin(), expected.end());
    CHECK(c.sorted_values == expected);
    CHECK(c.probabilities.front() == doctest::Approx(1.0 / 351.0).epsilon(1e-15));
    CHECK(c.probabilities.back() == 1.0);
    CHECK(c.sorted_values.back() == 1.0);
}

TEST_CASE("detect_kink")
{
    SUBCASE("two-slope curve")
    {
        const auto k = detect_kink(two_slope_curve(351, 0.75, 0.3));
        CHECK(std::abs(k.p - 0.75) <= 0.01);
        CHECK(k.value == doctest::Approx(0.3).epsilon(0.02));
        const auto k2 = detect_kink(two_slope_curve(1000, 0.68, 0.5));
        CHECK(std::abs(k2.p - 0.68) <= 0.01);
    }
    SUBCASE("lower window")
    {
        const auto k = detect_kink(two_slope_curve(351, 0.2, 0.6), kLowerKinkWindow);
        CHECK(std::abs(k.p - 0.2) <= 0.01);
    }
    SUBCASE("a straight curve has no kink")
    {
        CHECK_THROWS_WITH_AS(detect_kink(two_slope_curve(351, 0.5, 0.5)), doctest::Contains("explicit p"), Error);
    }
    SUBCASE("bad windows")
    {
        const auto c = two_slope_curve(100, 0.75, 0.3);
        CHECK_THROWS_AS(detect_kink(c, {0.9, 0.6}), ConfigError);
        CHECK_THROWS_AS(detect_kink(c, {0.0, 0.5}), ConfigError);
        CHECK_THROWS_AS(detect_kink(two_slope_curve(3, 0.5, 0.3)), Error);
    }
}

TEST_CASE("threshold")
{
    EcdfCurve c;
    c.sorted_values = {0.1, 0.2, 0.2, 0.5, 1.0};
    c.probabilities = {0.2, 0.4, 0.6, 0.8, 1.0};
    CHECK(threshold(c, 0.1) == 0.1);
    CHECK(threshold(c, 0.2) == 0.1);
    CHECK(threshold(c, 0.21) == 0.2);
    CHECK(threshold(c, 0.6) == 0.2);
    CHECK(threshold(c, 0.75) == 0.5);
    CHECK(threshold(c, 0.99) == 1.0);
    CHECK_THROWS_AS(threshold(c, 0.0), Error);
    CHECK_THROWS_AS(threshold(c, 1.0), Error);

    // lower-quantile consistency on random curves
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> u(0.001, 0.999);
    for (int rep = 0; rep < 20; ++rep) {
        const auto e = ecdf_upper_triangle(random_seriated(rng, 15));
        for (int q = 0; q < 20; ++q) {
            const double p = u(rng);
            const double t = threshold(e, p);
            const auto below = std::count_if(e.sorted_values.begin(), e.sorted_values.end(),
                                             [&](double v) { return v <= t; });
            const auto strictly = std::count_if(e.sorted_values.begin(), e.sorted_values.end(),
                                                [&](double v) { return v < t; });
            const double n = static_cast<double>(e.sorted_values.size());
            CHECK(static_cast<double>(below) / n >= p - 1e-12);
            CHECK(static_cast<double>(strictly) / n < p);
        }
    }
}

TEST_CASE("core_block")
{
    std::mt19937_64 rng(41);
    const auto s = random_seriated(rng, 9);
    SUBCASE("flat surfaces")
    {
        const auto all = core_block(flat_model(0.1), s, 0.5);
        CHECK(all.core_size == 9);
        CHECK(all.core_ids == s.labels);
        CHECK_FALSE(all.empty_core);
        const auto none = core_block(flat_model(0.9), s, 0.5);
        CHECK(none.core_size == 0);
        CHECK(none.empty_core);
        CHECK(core_block(flat_model(0.5), s, 0.5).core_size == 9);
    }
    SUBCASE("against exhaustive block search")
    {
        std::normal_distribution<double> g(0.0, 1.0);
        for (int rep = 0; rep < 40; ++rep) {
            RbfModel m;
            m.centers = frame_centers(9, 1.5);
            m.weights.resize(static_cast<Eigen::Index>(m.centers.size()));
            for (Eigen::Index k = 0; k < m.weights.size(); ++k)
                m.weights(k) = 0.3 * g(rng);
            m.shape = shape_from_residual(1.5, 0.5);
            m.constant = 0.4 + 0.1 * g(rng);
            std::size_t last = 0;
            for (double bound : {0.0, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.2}) {
                const auto core = core_block(m, s, bound);
                CHECK(core.core_size == brute_core_size(m, 9, bound));
                CHECK(core.core_size >= last);
                last = core.core_size;
                CHECK(std::equal(core.core_ids.begin(), core.core_ids.end(), s.labels.begin()));
            }
        }
    }
}

TEST_CASE("intersect")
{
    const std::vector<std::string> universe{"BTC", "DOGE", "ETH", "XRP"};
    const auto r = intersect(universe, {core_of(LocalMetric::Manhattan, {"ETH", "BTC", "DOGE"}),
                                        core_of(LocalMetric::Euclidean, {"BTC", "ETH", "DOGE"}),
                                        core_of(LocalMetric::SquaredEuclidean, {"BTC", "ETH"})});
    // member of two cores out of three is a satellite
    CHECK(r.intersection_core == std::vector<std::string>{"BTC", "ETH"});
    CHECK(r.satellite == std::vector<std::string>{"DOGE", "XRP"});

    const auto one = intersect(universe, {core_of(LocalMetric::Euclidean, {"XRP"})});
    CHECK(one.intersection_core == std::vector<std::string>{"XRP"});
    CHECK(intersect(universe, {}).intersection_core.empty());
    CHECK(intersect(universe, {core_of(LocalMetric::Euclidean, {})}).satellite == universe);
    CHECK_THROWS_AS(intersect(universe, {core_of(LocalMetric::Euclidean, {"LTC"})}), Error);
}

TEST_CASE("segment_metric")
{
    // 17 mutually close assets and 3 far apart, so core pairs make up 72% of the ECDF
    std::mt19937_64 rng(43);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<std::array<double, 2>> pts;
    for (int i = 0; i < 17; ++i)
        pts.push_back({0.3 * g(rng), 0.3 * g(rng)});
    for (int i = 0; i < 3; ++i)
        pts.push_back({4.0 * std::cos(2.0 * i) + 0.5 * g(rng), 4.0 * std::sin(2.0 * i) + 0.5 * g(rng)});
    DistanceMatrix d;
    d.d.resize(20, 20);
    for (Eigen::Index i = 0; i < 20; ++i) {
        d.labels.push_back(i < 17 ? "c" + std::to_string(i) : "o" + std::to_string(i));
        for (Eigen::Index j = 0; j < 20; ++j)
            d.d(i, j) = std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]);
    }
    SegmentSettings settings;
    const auto out = segment_metric(d, settings);
    CHECK(out.core.p_detected);
    CHECK(out.core.p_used >= 0.6);
    CHECK(out.core.p_used <= 0.9);
    CHECK(out.core.d_bound == threshold(out.ecdf, out.core.p_used));
    for (const auto& id : out.core.core_ids)
        CHECK(id[0] == 'c');
    CHECK(out.core.core_size >= 15);

    settings.fixed_p = 0.3;
    const auto fixed = segment_metric(d, settings);
    CHECK_FALSE(fixed.core.p_detected);
    CHECK(fixed.core.p_used == 0.3);
    CHECK(fixed.core.core_size <= out.core.core_size);
}

TEST_CASE("segmentation files")
{
    coresat::testing::TempDir dir;
    auto core = core_of(LocalMetric::Euclidean, {"B", "A"});
    core.d_bound = 0.5559;
    core.p_used = 0.74;
    write_metric_core_json(core, dir / "core.json");
    const auto back = read_metric_core_json(dir / "core.json");
    CHECK(back.core_ids == core.core_ids);
    CHECK(back.d_bound == core.d_bound);
    CHECK(back.p_used == core.p_used);
    CHECK(back.metric == LocalMetric::Euclidean);

    coresat::testing::write_file(dir / "names.csv", "asset_id,name\nA,Alpha Coin\nB,\"Beta, Inc\"\n");
    const auto names = read_asset_names(dir / "names.csv");
    CHECK(names.at("B") == "Beta, Inc");

    const auto r = intersect({"A", "B", "C"}, {core});
    write_report_csv(r, names, dir / "report.csv");
    CHECK(coresat::testing::read_file(dir / "report.csv") ==
          "# euclidean: d_bound=0.5559 p_used=0.74 p_source=kink core_size=2\n"
          "No.,ID,Name,Euclidean,Intersection\n"
          "1,A,Alpha Coin,1,C\n"
          "2,B,\"Beta, Inc\",1,C\n"
          "3,C,C,0,S\n");
    write_report_json(r, names, dir / "report.json");
    CHECK(coresat::testing::read_file(dir / "report.json").find("\"satellite\": [\n    \"C\"") != std::string::npos);
    EcdfCurve e = two_slope_curve(50, 0.75, 0.3);
    write_ecdf_svg(e, kUpperKinkWindow, core, dir / "ecdf.svg");
    CHECK(coresat::testing::read_file(dir / "ecdf.svg").find("</svg>") != std::string::npos);
}
