#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "protochange/config.hpp"
#include "protochange/features.hpp"
#include "protochange/metrics.hpp"
#include "protochange/raster.hpp"

namespace protochange {

struct DetectOptions {
    /// Writes projections, cluster labels and the coarse map as flat binary
    /// files, each with a JSON header.
    std::optional<std::filesystem::path> dump_dir;
    /// Adds a metrics block to the report.
    std::optional<ChangeMask> label;
};

struct DetectResult {
    ChangeMask mask;    // final output at input resolution
    ChangeMask coarse;  // upsampled patch-level decision at input resolution
    nlohmann::json report;
};

/// resize -> prototype -> synthesize -> extract x4 -> differences -> concatenate
/// -> PCA -> k-means -> prototype vote -> coarse map -> upsample -> refine.
/// Errors escaping a stage are re-thrown with the stage name attached.
DetectResult detect(const ImagePair& pair, const PipelineConfig& config, const DetectOptions& options = {});

/// Same, reusing a caller-owned backend (one per thread).
DetectResult detect(const ImagePair& pair, const PipelineConfig& config, FeatureExtractor& backend,
                    const DetectOptions& options = {});

enum class EvalMethod { Pucd, PucdNoSam, Cva, PcaKmeans, Irmad, Sfa };

std::optional<EvalMethod> parse_eval_method(std::string_view name) noexcept;
std::string_view to_string(EvalMethod method) noexcept;
/// Row label used in the rendered table.
std::string_view display_name(EvalMethod method) noexcept;
std::vector<EvalMethod> all_eval_methods();

/// Runs one method on one pair with the config's seeds and options.
ChangeMask run_method(EvalMethod method, const ImagePair& pair, const PipelineConfig& config,
                      FeatureExtractor* backend = nullptr, nlohmann::json* report = nullptr);

struct EvalOptions {
    int workers = 1;
    /// Masks go to `out_dir/<method>/<sample id>` before metrics are computed.
    std::optional<std::filesystem::path> out_dir;
};

struct SampleOutcome {
    std::string id;
    bool ok = false;
    std::string error;
    ConfusionMatrix confusion;
    nlohmann::json report;
};

struct EvalResult {
    EvalMethod method = EvalMethod::Pucd;
    std::vector<SampleOutcome> samples;  // dataset order
    std::optional<ConfusionMatrix> pooled;
    std::optional<ClassMetrics> metrics;  // absent when every sample failed

    std::size_t failed() const noexcept;
    nlohmann::json to_json() const;
};

/// Throws EmptyDataset when the dataset has no samples or any sample lacks
/// a label. Per-sample failures are recorded, not thrown.
EvalResult evaluate(const std::filesystem::path& root, EvalMethod method, const PipelineConfig& config,
                    const EvalOptions& options = {});

/// Table rows for every method that produced metrics.
std::string render_eval_table(const std::vector<EvalResult>& results);

}  // namespace protochange
