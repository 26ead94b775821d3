#include "coresat/pipeline.hpp"

#include "coresat/ingest.hpp"
#include "coresat/stats.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

namespace coresat {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

void PipelineConfig::validate() const
{
    if (!(start < end))
        throw ConfigError("date window is empty: start " + format_date(start) + " is not before end " +
                          format_date(end));
    if (metrics.empty())
        throw ConfigError("metrics list is empty");
    if (std::set<LocalMetric>(metrics.begin(), metrics.end()).size() != metrics.size())
        throw ConfigError("metrics list contains duplicates");
    if (max_gap < 0)
        throw ConfigError("max_gap must be >= 0");
    if (!(alpha_floor > 0.0 && alpha_floor < 2.0))
        throw ConfigError("alpha_floor must lie in (0, 2)");
    if (!(rbf.spacing >= 0.0) || !std::isfinite(rbf.spacing))
        throw ConfigError("rbf.spacing must be >= 0 (0 selects N / 6)");
    if (!(rbf.residual > 0.0 && rbf.residual < 1.0))
        throw ConfigError("rbf.residual must lie in (0, 1)");
    if (!(rbf.reg_alpha >= 0.0 && rbf.reg_alpha < 100.0))
        throw ConfigError("rbf.reg_alpha must lie in [0, 100)");
    if (!(kink_window.lo > 0.0 && kink_window.lo < kink_window.hi && kink_window.hi <= 1.0))
        throw ConfigError("kink_window must satisfy 0 < lo < hi <= 1");
    for (const auto& [metric, p] : fixed_p)
        if (!(p > 0.0 && p < 1.0))
            throw ConfigError("fixed p for " + std::string(metric_name(metric)) + " must lie in (0, 1)");
    if (output_dir.empty())
        throw ConfigError("output_dir is not set");
}

KinkWindow PipelineConfig::effective_window() const
{
    const bool default_window = kink_window.lo == kUpperKinkWindow.lo && kink_window.hi == kUpperKinkWindow.hi;
    return lower_kink && default_window ? kLowerKinkWindow : kink_window;
}

namespace {

fs::path resolve(const fs::path& base, const std::string& text)
{
    if (text.empty())
        return {};
    const fs::path p(text);
    return (p.is_absolute() ? p : base / p).lexically_normal();
}

void apply_rbf(const ojson& node, RbfSettings& rbf)
{
    if (!node.is_object())
        throw ConfigError("'rbf' must be an object");
    for (const auto& [key, value] : node.items()) {
        if (key == "spacing")
            rbf.spacing = value.get<double>();
        else if (key == "residual")
            rbf.residual = value.get<double>();
        else if (key == "reg_alpha")
            rbf.reg_alpha = value.get<double>();
        else if (key == "constant_term")
            rbf.constant_term = value.get<bool>();
        else
            throw ConfigError("unknown config key 'rbf." + key + "'");
    }
}

void apply_key(PipelineConfig& c, const std::string& key, const ojson& value, const fs::path& base)
{
    if (key == "data_dir")
        c.data_dir = resolve(base, value.get<std::string>());
    else if (key == "fx_file")
        c.fx_file = resolve(base, value.get<std::string>());
    else if (key == "names_file")
        c.names_file = resolve(base, value.get<std::string>());
    else if (key == "date_column")
        c.date_column = value.get<std::string>();
    else if (key == "close_column")
        c.close_column = value.get<std::string>();
    else if (key == "start")
        c.start = parse_date(value.get<std::string>());
    else if (key == "end")
        c.end = parse_date(value.get<std::string>());
    else if (key == "weekly_anchor")
        c.weekly_anchor = parse_weekday(value.get<std::string>());
    else if (key == "max_gap")
        c.max_gap = value.get<int>();
    else if (key == "metrics") {
        c.metrics.clear();
        for (const auto& m : value)
            c.metrics.push_back(parse_metric(m.get<std::string>()));
    } else if (key == "standardize")
        c.standardize = value.get<bool>();
    else if (key == "alpha_floor")
        c.alpha_floor = value.get<double>();
    else if (key == "rbf")
        apply_rbf(value, c.rbf);
    else if (key == "kink_window") {
        if (!value.is_array() || value.size() != 2)
            throw ConfigError("'kink_window' must be [lo, hi]");
        c.kink_window = {value[0].get<double>(), value[1].get<double>()};
    } else if (key == "lower_kink")
        c.lower_kink = value.get<bool>();
    else if (key == "fixed_p") {
        c.fixed_p.clear();
        for (const auto& [metric, p] : value.items())
            c.fixed_p[parse_metric(metric)] = p.get<double>();
    } else if (key == "output_dir")
        c.output_dir = resolve(base, value.get<std::string>());
    else
        throw ConfigError("unknown config key '" + key + "'");
}

} // namespace

PipelineConfig parse_config(const std::string& text, const fs::path& base_dir)
{
    ojson doc;
    try {
        doc = ojson::parse(text, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (doc.is_object() && doc.contains("config") && doc.contains("artifacts"))
        doc = doc["config"];
    if (!doc.is_object())
        throw ConfigError("config must be a JSON object");

    PipelineConfig config;
    // the default output directory sits next to the config, like every other relative path
    config.output_dir = resolve(base_dir, config.output_dir.string());
    for (const auto& [key, value] : doc.items()) {
        try {
            apply_key(config, key, value, base_dir);
        } catch (const ConfigError&) {
            throw;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config key '" + key + "': " + e.what());
        } catch (const Error& e) {
            throw ConfigError("config key '" + key + "': " + e.what());
        }
    }
    config.validate();
    return config;
}

PipelineConfig load_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), fs::absolute(path).parent_path());
}

namespace {

std::string path_text(const fs::path& p)
{
    return p.empty() ? std::string() : fs::absolute(p).lexically_normal().string();
}

ojson config_json(const PipelineConfig& c)
{
    ojson doc;
    doc["data_dir"] = path_text(c.data_dir);
    doc["fx_file"] = path_text(c.fx_file);
    doc["names_file"] = path_text(c.names_file);
    doc["date_column"] = c.date_column;
    doc["close_column"] = c.close_column;
    doc["start"] = format_date(c.start);
    doc["end"] = format_date(c.end);
    doc["weekly_anchor"] = weekday_name(c.weekly_anchor);
    doc["max_gap"] = c.max_gap;
    auto metrics = ojson::array();
    for (auto m : c.metrics)
        metrics.push_back(metric_name(m));
    doc["metrics"] = metrics;
    doc["standardize"] = c.standardize;
    doc["alpha_floor"] = c.alpha_floor;
    doc["rbf"] = {{"spacing", c.rbf.spacing},
                  {"residual", c.rbf.residual},
                  {"reg_alpha", c.rbf.reg_alpha},
                  {"constant_term", c.rbf.constant_term}};
    doc["kink_window"] = {c.kink_window.lo, c.kink_window.hi};
    doc["lower_kink"] = c.lower_kink;
    auto fixed = ojson::object();
    for (const auto& [m, p] : c.fixed_p)
        fixed[std::string(metric_name(m))] = p;
    doc["fixed_p"] = fixed;
    doc["output_dir"] = path_text(c.output_dir);
    return doc;
}

} // namespace

std::string config_to_json(const PipelineConfig& config)
{
    return config_json(config).dump(2);
}

std::string example_config()
{
    return R"(// coresat pipeline configuration. Comments are allowed; relative paths
// resolve against the directory of this file.
{
  // Directory of per-asset daily price files <ASSET>.csv
  "data_dir": "data",
  // Optional FX table (date,rate) multiplying every price; "" disables conversion
  "fx_file": "",
  // Optional asset_id,name table used for the report's Name column
  "names_file": "",
  "date_column": "date",
  "close_column": "close",

  // Inclusive date window and the weekday that closes each week
  "start": "2014-01-01",
  "end": "2019-06-01",
  "weekly_anchor": "sunday",
  // Longest run of missing weeks filled by carrying the last price forward;
  // assets with a longer run are excluded
  "max_gap": 4,

  // Local costs for DTW: manhattan, euclidean, sqeuclidean
  "metrics": ["manhattan", "euclidean", "sqeuclidean"],
  // Pooled z-scoring of (mean, std, alpha) before DTW
  "standardize": true,
  // Tail-index estimates are clamped into [alpha_floor, 2]
  "alpha_floor": 0.5,

  "rbf": {
    // Spacing R of the frame of centers; 0 selects N / 6
    "spacing": 0,
    // Kernel value p at distance R, giving a = -ln(p) / R^2; in (0, 1)
    "residual": 0.5,
    // Tikhonov parameter in [0, 100)
    "reg_alpha": 0,
    "constant_term": true
  },

  // Probability window searched for the ECDF kink
  "kink_window": [0.6, 0.9],
  // Search 0.05..0.40 instead (only when kink_window is left at its default)
  "lower_kink": false,
  // Per-metric p that bypasses kink detection, e.g. {"sqeuclidean": 0.75}
  "fixed_p": {},

  "output_dir": "coresat_out"
}
)";
}

std::string sha256_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open '" + path.string() + "' for checksumming");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 initialisation failed");
    char buffer[1 << 16];
    while (in.read(buffer, sizeof buffer) || in.gcount() > 0)
        EVP_DigestUpdate(ctx.get(), buffer, static_cast<std::size_t>(in.gcount()));
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config))
{
    config_.validate();
    manifest_.config_json = config_to_json(config_);
}

std::string Pipeline::distance_file(LocalMetric m, const char* ext)
{
    return "distance_" + std::string(metric_name(m)) + "." + ext;
}

std::string Pipeline::segment_file(LocalMetric m)
{
    return "segment_" + std::string(metric_name(m)) + ".json";
}

std::string Pipeline::report_file(const char* ext)
{
    return std::string("core_satellite.") + ext;
}

fs::path Pipeline::out(const std::string& name) const
{
    return config_.output_dir / name;
}

fs::path Pipeline::require(const std::string& name, const char* producer)
{
    const auto path = out(name);
    if (!fs::exists(path))
        throw Error("missing " + name + " in " + config_.output_dir.string() + "; run the '" + producer +
                    "' subcommand first");
    consumed(path);
    return path;
}

void Pipeline::emitted(const fs::path& path)
{
    const auto name = path.filename().string();
    auto it = std::find_if(manifest_.artifacts.begin(), manifest_.artifacts.end(),
                           [&](const FileDigest& f) { return f.path == name; });
    if (it == manifest_.artifacts.end())
        manifest_.artifacts.push_back({name, sha256_file(path)});
    else
        it->sha256 = sha256_file(path);
}

void Pipeline::consumed(const fs::path& path)
{
    const auto name = path_text(path);
    // intermediates produced earlier in this same invocation are not inputs
    if (fs::equivalent(path.parent_path().empty() ? "." : path.parent_path(), config_.output_dir) &&
        std::any_of(manifest_.artifacts.begin(), manifest_.artifacts.end(),
                    [&](const FileDigest& f) { return f.path == path.filename().string(); }))
        return;
    if (std::none_of(manifest_.inputs.begin(), manifest_.inputs.end(),
                     [&](const FileDigest& f) { return f.path == name; }))
        manifest_.inputs.push_back({name, sha256_file(path)});
}

template <typename F>
void Pipeline::stage(const char* name, F&& body)
{
    const auto t0 = std::chrono::steady_clock::now();
    try {
        fs::create_directories(config_.output_dir);
        body();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("stage '") + name + "': " + e.what());
    } catch (const Error& e) {
        throw Error(std::string("stage '") + name + "': " + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("stage '") + name + "': malformed JSON artifact: " + e.what());
    } catch (const fs::filesystem_error& e) {
        throw Error(std::string("stage '") + name + "': " + e.what());
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;
    manifest_.timings.push_back({name, elapsed.count()});
}

void Pipeline::ingest()
{
    stage("ingest", [&] {
        if (config_.data_dir.empty())
            throw ConfigError("data_dir is not set");
        if (!fs::is_directory(config_.data_dir))
            throw Error("data_dir '" + config_.data_dir.string() + "' is not a directory");

        const auto same_file = [](const fs::path& a, const fs::path& b) {
            return !b.empty() && fs::exists(b) && fs::equivalent(a, b);
        };
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(config_.data_dir)) {
            const auto& p = entry.path();
            if (!entry.is_regular_file() || p.extension() != ".csv")
                continue;
            if (same_file(p, config_.fx_file) || same_file(p, config_.names_file))
                continue;
            files.push_back(p);
        }
        std::sort(files.begin(), files.end());
        if (files.empty())
            throw Error("no price files (*.csv) in '" + config_.data_dir.string() + "'");

        std::optional<FxSeries> fx;
        if (!config_.fx_file.empty()) {
            consumed(config_.fx_file);
            fx = parse_fx_csv(config_.fx_file);
        }

        const auto grid = week_grid(config_.start, config_.end, config_.weekly_anchor);
        if (grid.size() < 2)
            throw Error("date window holds fewer than two weekly grid points");
        const CsvSchema schema{config_.date_column, config_.close_column};
        std::vector<WeeklySeries> weekly;
        for (const auto& file : files) {
            consumed(file);
            auto series = parse_price_csv(file, schema);
            std::erase_if(series.observations, [&](const Observation& o) {
                return o.date < config_.start || o.date > config_.end;
            });
            if (fx)
                series = convert_currency(series, *fx);
            weekly.push_back(resample_weekly(series, grid));
        }
        const auto filled = fill_gaps_locf(weekly, grid, config_.max_gap);
        if (filled.panel.assets.size() < 2)
            throw Error("fewer than two assets survive gap filling");
        write_price_panel_csv(filled.panel, out(prices_file()));
        emitted(out(prices_file()));
        write_exclusions_json(filled.excluded, out(exclusions_file()));
        emitted(out(exclusions_file()));
    });
}

void Pipeline::stats()
{
    stage("stats", [&] {
        const auto panel = read_price_panel_csv(require(prices_file(), "ingest"));
        const auto series = build_sample_series(log_returns(panel), AlphaFitOptions{config_.alpha_floor, 2.0});
        write_sample_vectors_csv(series, out(sample_vectors_file()));
        emitted(out(sample_vectors_file()));
    });
}

void Pipeline::dtw()
{
    stage("dtw", [&] {
        auto series = read_sample_vectors_csv(require(sample_vectors_file(), "stats"));
        if (config_.standardize)
            series = standardize_panel(series);
        for (auto metric : config_.metrics) {
            const auto d = pairwise_matrix(series, metric);
            write_distance_csv(d, out(distance_file(metric, "csv")));
            emitted(out(distance_file(metric, "csv")));
            write_distance_json(d, out(distance_file(metric, "json")));
            emitted(out(distance_file(metric, "json")));
        }
    });
}

void Pipeline::segment()
{
    stage("segment", [&] {
        for (auto metric : config_.metrics) {
            const std::string name(metric_name(metric));
            const auto d = read_distance_json(require(distance_file(metric, "json"), "dtw"));
            if (d.metric != metric)
                throw Error(distance_file(metric, "json") + " holds a " + std::string(metric_name(d.metric)) +
                            " matrix");
            SegmentSettings settings;
            settings.rbf = config_.rbf;
            settings.window = config_.effective_window();
            if (auto it = config_.fixed_p.find(metric); it != config_.fixed_p.end())
                settings.fixed_p = it->second;

            MetricSegmentation seg;
            try {
                seg = segment_metric(d, settings);
            } catch (const Error& e) {
                throw Error("metric " + name + ": " + e.what());
            }
            if (seg.model.condition_estimate > kConditionWarning)
                manifest_.warnings.push_back("metric " + name + ": RBF system condition estimate " +
                                             format_double(seg.model.condition_estimate) +
                                             " exceeds 1e12; consider a positive reg_alpha");
            if (seg.core.empty_core)
                manifest_.warnings.push_back("metric " + name + ": core is empty at d_bound " +
                                             format_double(seg.core.d_bound));

            const auto emit = [&](const std::string& file, auto&& writer) {
                writer(out(file));
                emitted(out(file));
            };
            emit("seriated_" + name + ".csv", [&](const fs::path& p) { write_seriated_csv(seg.seriated, p); });
            emit("heatmap_" + name + ".svg", [&](const fs::path& p) { write_heatmap_svg(seg.seriated, p); });
            emit("rbf_model_" + name + ".json", [&](const fs::path& p) { write_model_json(seg.model, p); });
            emit("surface_" + name + ".csv",
                 [&](const fs::path& p) { write_surface_csv(seg.model, seg.seriated.labels.size(), p); });
            emit("surface_" + name + ".svg",
                 [&](const fs::path& p) { write_surface_svg(seg.model, seg.seriated.labels, seg.core.d_bound, p); });
            emit("ecdf_" + name + ".svg",
                 [&](const fs::path& p) { write_ecdf_svg(seg.ecdf, settings.window, seg.core, p); });
            emit(segment_file(metric), [&](const fs::path& p) { write_metric_core_json(seg.core, p); });
        }
    });
}

SegmentationResult Pipeline::report()
{
    SegmentationResult result;
    stage("report", [&] {
        std::vector<MetricCore> cores;
        for (auto metric : config_.metrics) {
            auto core = read_metric_core_json(require(segment_file(metric), "segment"));
            if (core.metric != metric)
                throw Error(segment_file(metric) + " holds a " + std::string(metric_name(core.metric)) + " core");
            cores.push_back(std::move(core));
        }
        const auto universe = read_distance_json(require(distance_file(config_.metrics.front(), "json"), "dtw")).labels;
        AssetNames names;
        if (!config_.names_file.empty()) {
            consumed(config_.names_file);
            names = read_asset_names(config_.names_file);
        }
        result = intersect(universe, cores);
        write_report_csv(result, names, out(report_file("csv")));
        emitted(out(report_file("csv")));
        write_report_json(result, names, out(report_file("json")));
        emitted(out(report_file("json")));
    });
    return result;
}

SegmentationResult Pipeline::run()
{
    ingest();
    stats();
    dtw();
    segment();
    return report();
}

RunManifest Pipeline::write_manifest(const std::string& command)
{
    manifest_.command = command;
    ojson doc;
    doc["tool"] = "coresat";
    doc["version"] = kVersion;
    doc["command"] = command;
    doc["config"] = ojson::parse(manifest_.config_json);
    auto inputs = ojson::array();
    for (const auto& f : manifest_.inputs)
        inputs.push_back({{"path", f.path}, {"sha256", f.sha256}});
    doc["inputs"] = inputs;
    auto stages = ojson::array();
    for (const auto& t : manifest_.timings)
        stages.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
    doc["stages"] = stages;
    auto artifacts = ojson::array();
    for (const auto& f : manifest_.artifacts)
        artifacts.push_back({{"path", f.path}, {"sha256", f.sha256}});
    doc["artifacts"] = artifacts;
    doc["warnings"] = manifest_.warnings;

    fs::create_directories(config_.output_dir);
    std::ofstream out_file(out("manifest.json"));
    if (!out_file)
        throw Error("cannot write manifest in '" + config_.output_dir.string() + "'");
    out_file << doc.dump(2) << '\n';
    return manifest_;
}

} // namespace coresat
