// coresat command-line interface.

#include "coresat/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

using namespace coresat;

struct Overrides {
    std::string config;
    std::string data_dir, fx_file, names_file, output_dir;
    std::string date_column, close_column;
    std::string start, end, anchor;
    std::optional<int> max_gap;
    std::vector<std::string> metrics;
    bool no_standardize = false;
    std::optional<double> alpha_floor;
    std::optional<double> rbf_spacing, rbf_residual, reg_alpha;
    bool no_constant = false;
    std::vector<double> kink_window;
    bool lower_kink = false;
    std::vector<std::string> fixed_p;
};

void add_options(CLI::App& app, Overrides& o)
{
    app.add_option("-c,--config", o.config, "JSON config file (a manifest.json is accepted)");
    app.add_option("--data-dir", o.data_dir, "Directory of per-asset daily price CSVs");
    app.add_option("--fx-file", o.fx_file, "FX table (date,rate) applied to every price");
    app.add_option("--names-file", o.names_file, "asset_id,name table for the report");
    app.add_option("--date-column", o.date_column, "Date column in price files");
    app.add_option("--close-column", o.close_column, "Close column in price files");
    app.add_option("--start", o.start, "First date of the window (YYYY-MM-DD)");
    app.add_option("--end", o.end, "Last date of the window (YYYY-MM-DD)");
    app.add_option("--anchor", o.anchor, "Weekday closing each week");
    app.add_option("--max-gap", o.max_gap, "Longest run of missing weeks filled forward");
    app.add_option("--metric,--metrics", o.metrics, "DTW local cost(s)")->delimiter(',');
    app.add_flag("--no-standardize", o.no_standardize, "Skip pooled z-scoring before DTW");
    app.add_option("--alpha-floor", o.alpha_floor, "Lower clamp for tail-index estimates");
    app.add_option("--rbf-spacing", o.rbf_spacing, "Frame spacing R (0 selects N/6)");
    app.add_option("--rbf-residual", o.rbf_residual, "Kernel value p at distance R");
    app.add_option("--reg-alpha", o.reg_alpha, "Tikhonov regularization parameter");
    app.add_flag("--no-constant", o.no_constant, "Fit the surface without a constant term");
    app.add_option("--kink-window", o.kink_window, "Kink search window lo,hi")->delimiter(',')->expected(2);
    app.add_flag("--lower-kink", o.lower_kink, "Search the kink in 0.05..0.40");
    app.add_option("--p", o.fixed_p, "Fixed threshold probability, metric=value (repeatable)");
    app.add_option("-o,--output-dir", o.output_dir, "Directory for all artifacts");
}

std::filesystem::path cli_path(const std::string& text)
{
    return text.empty() ? std::filesystem::path() : std::filesystem::absolute(text).lexically_normal();
}

PipelineConfig build_config(const Overrides& o)
{
    PipelineConfig c = o.config.empty() ? PipelineConfig{} : load_config(o.config);
    if (!o.data_dir.empty())
        c.data_dir = cli_path(o.data_dir);
    if (!o.fx_file.empty())
        c.fx_file = cli_path(o.fx_file);
    if (!o.names_file.empty())
        c.names_file = cli_path(o.names_file);
    if (!o.output_dir.empty())
        c.output_dir = cli_path(o.output_dir);
    if (!o.date_column.empty())
        c.date_column = o.date_column;
    if (!o.close_column.empty())
        c.close_column = o.close_column;
    try {
        if (!o.start.empty())
            c.start = parse_date(o.start);
        if (!o.end.empty())
            c.end = parse_date(o.end);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    if (!o.anchor.empty())
        c.weekly_anchor = parse_weekday(o.anchor);
    if (o.max_gap)
        c.max_gap = *o.max_gap;
    if (!o.metrics.empty()) {
        c.metrics.clear();
        for (const auto& m : o.metrics)
            c.metrics.push_back(parse_metric(m));
    }
    if (o.no_standardize)
        c.standardize = false;
    if (o.alpha_floor)
        c.alpha_floor = *o.alpha_floor;
    if (o.rbf_spacing)
        c.rbf.spacing = *o.rbf_spacing;
    if (o.rbf_residual)
        c.rbf.residual = *o.rbf_residual;
    if (o.reg_alpha)
        c.rbf.reg_alpha = *o.reg_alpha;
    if (o.no_constant)
        c.rbf.constant_term = false;
    if (o.kink_window.size() == 2)
        c.kink_window = {o.kink_window[0], o.kink_window[1]};
    if (o.lower_kink)
        c.lower_kink = true;
    for (const auto& spec : o.fixed_p) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--p expects metric=value, got '" + spec + "'");
        double p = 0.0;
        try {
            std::size_t used = 0;
            p = std::stod(spec.substr(eq + 1), &used);
            if (used != spec.size() - eq - 1)
                throw std::invalid_argument("trailing text");
        } catch (const std::exception&) {
            throw ConfigError("--p value is not a number in '" + spec + "'");
        }
        c.fixed_p[parse_metric(spec.substr(0, eq))] = p;
    }
    c.validate();
    return c;
}

void print_result(const SegmentationResult& r)
{
    for (const auto& c : r.per_metric)
        std::cout << metric_name(c.metric) << ": p=" << format_double(c.p_used)
                  << " d_bound=" << format_double(c.d_bound) << " core=" << c.core_size << '\n';
    std::cout << "intersection core: " << r.intersection_core.size() << " of " << r.universe.size()
              << " assets\n";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Core/satellite segmentation of an asset universe from weekly return dynamics"};
    app.set_version_flag("--version", std::string(coresat::kVersion));
    app.require_subcommand(1);
    app.fallthrough();

    Overrides o;
    add_options(app, o);

    bool example = false;
    auto* config_cmd = app.add_subcommand("config", "Print the effective configuration");
    config_cmd->add_flag("--example", example, "Print a commented example config with all defaults");
    auto* ingest_cmd = app.add_subcommand("ingest", "Price files to a weekly price panel");
    auto* stats_cmd = app.add_subcommand("stats", "Weekly panel to annual sample vectors");
    auto* dtw_cmd = app.add_subcommand("dtw", "Sample vectors to DTW distance matrices");
    auto* segment_cmd = app.add_subcommand("segment", "Seriation, RBF surface and per-metric cores");
    auto* report_cmd = app.add_subcommand("report", "Core/satellite table across metrics");
    auto* run_cmd = app.add_subcommand("run", "All stages in order");

    CLI11_PARSE(app, argc, argv);

    try {
        if (config_cmd->parsed() && example) {
            std::cout << coresat::example_config();
            return 0;
        }
        const auto config = build_config(o);
        if (config_cmd->parsed()) {
            std::cout << coresat::config_to_json(config) << '\n';
            return 0;
        }

        coresat::Pipeline pipeline(config);
        std::string command;
        std::optional<coresat::SegmentationResult> result;
        if (ingest_cmd->parsed()) {
            command = "ingest";
            pipeline.ingest();
        } else if (stats_cmd->parsed()) {
            command = "stats";
            pipeline.stats();
        } else if (dtw_cmd->parsed()) {
            command = "dtw";
            pipeline.dtw();
        } else if (segment_cmd->parsed()) {
            command = "segment";
            pipeline.segment();
        } else if (report_cmd->parsed()) {
            command = "report";
            result = pipeline.report();
        } else if (run_cmd->parsed()) {
            command = "run";
            result = pipeline.run();
        }
        pipeline.write_manifest(command);
        for (const auto& w : pipeline.warnings())
            std::cerr << "warning: " << w << '\n';
        if (result)
            print_result(*result);
        std::cout << "artifacts written to " << config.output_dir.string() << '\n';
    } catch (const coresat::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const coresat::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
