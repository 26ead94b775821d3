#pragma once

// Configuration, stage orchestration and the run manifest.
//
// Every stage reads the persisted artifact of the previous stage from the
// output directory, so `run` and the individual subcommands executed in order
// produce identical files.

#include "coresat/dtw.hpp"
#include "coresat/segmentation.hpp"

#include <array>
#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace coresat {

inline constexpr const char* kVersion = "0.1.0";

struct PipelineConfig {
    std::filesystem::path data_dir;
    std::filesystem::path fx_file;    // empty: prices already in the target currency
    std::filesystem::path names_file; // optional asset_id,name table for the report
    std::string date_column = "date";
    std::string close_column = "close";
    Date start = parse_date("2014-01-01");
    Date end = parse_date("2019-06-01");
    std::chrono::weekday weekly_anchor = std::chrono::Sunday;
    int max_gap = 4;
    std::vector<LocalMetric> metrics{kAllMetrics.begin(), kAllMetrics.end()};
    bool standardize = true;
    double alpha_floor = 0.5;
    RbfSettings rbf;
    KinkWindow kink_window = kUpperKinkWindow;
    bool lower_kink = false;
    std::map<LocalMetric, double> fixed_p;
    std::filesystem::path output_dir = "coresat_out";

    /// Throws ConfigError for out-of-range settings.
    void validate() const;

    /// Window actually searched for the kink (lower-kink mode swaps in 0.05..0.40
    /// unless an explicit window was configured).
    KinkWindow effective_window() const;
};

/// Parses a JSON config (comments allowed). Relative paths resolve against
/// `base_dir`, including the default output_dir. A run manifest is accepted
/// too: its "config" member is used.
/// Unknown keys raise ConfigError.
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

/// Snapshot of every setting, with absolute paths.
std::string config_to_json(const PipelineConfig& config);

/// Commented example config listing every key with its default.
std::string example_config();

/// Stage names in execution order.
inline constexpr std::array<const char*, 5> kStages = {"ingest", "stats", "dtw", "segment", "report"};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct FileDigest {
    std::string path;
    std::string sha256;
};

/// What one invocation consumed and produced.
struct RunManifest {
    std::string command;
    std::string config_json;
    std::vector<FileDigest> inputs;
    std::vector<StageTiming> timings;
    std::vector<FileDigest> artifacts;
    std::vector<std::string> warnings;
};

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

class Pipeline {
public:
    explicit Pipeline(PipelineConfig config);

    const PipelineConfig& config() const { return config_; }
    const std::vector<std::string>& warnings() const { return manifest_.warnings; }

    void ingest();
    void stats();
    void dtw();
    void segment();
    SegmentationResult report();

    /// All stages in order; returns the final segmentation.
    SegmentationResult run();

    /// Writes manifest.json into the output directory and returns it.
    RunManifest write_manifest(const std::string& command);

    /// Artifact file names used by the stages.
    static std::string prices_file() { return "prices_weekly.csv"; }
    static std::string exclusions_file() { return "exclusions.json"; }
    static std::string sample_vectors_file() { return "sample_vectors.csv"; }
    static std::string distance_file(LocalMetric m, const char* ext);
    static std::string segment_file(LocalMetric m);
    static std::string report_file(const char* ext);

private:
    template <typename F>
    void stage(const char* name, F&& body);
    std::filesystem::path out(const std::string& name) const;
    std::filesystem::path require(const std::string& name, const char* producer);
    void emitted(const std::filesystem::path& path);
    void consumed(const std::filesystem::path& path);

    PipelineConfig config_;
    RunManifest manifest_;
};

} // namespace coresat
