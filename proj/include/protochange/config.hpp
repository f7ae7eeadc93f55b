#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "protochange/baselines.hpp"
#include "protochange/features.hpp"
#include "protochange/prototype.hpp"

namespace protochange {

enum class PrototypeMode {
    Random,    // one segment of the source image, drawn with the run seed
    Mask,      // scene-sized mask laid over the source image
    External,  // chip + chip mask from outside the scene
};

struct PrototypeSpec {
    PrototypeMode mode = PrototypeMode::Random;
    PrototypeSource source = PrototypeSource::Pre;  // image used by Random and Mask
    std::string mask_path;
    std::string chip_path;
    std::string chip_mask_path;
    /// Mask mode: offset of the mask over the image. External: chip position
    /// (scene centre when unset). In input-image pixels.
    std::optional<Anchor> anchor;
    double coverage = 0.5;
};

enum class SegmentProviderKind { Builtin, File };

struct SegmentProviderSpec {
    SegmentProviderKind kind = SegmentProviderKind::Builtin;
    std::string path;       // segments of the pre image
    std::string post_path;  // segments of the post image; falls back to `path`
    int quant_levels = 8;
    int min_size = 32;
};

enum class RefineSource { Pre, Post, Both };

struct PipelineConfig {
    FeatureBackendSpec backend;
    PrototypeSpec prototype;
    int pca_components = 1;
    int k = 2;
    int kmeans_max_iter = 100;
    double kmeans_tol = 1e-6;
    int kmeans_n_init = 10;
    bool refine_enabled = true;
    double refine_threshold = 0.7;
    RefineSource refine_source = RefineSource::Pre;
    bool union_with_coarse = false;
    SegmentProviderSpec segments;
    std::uint64_t seed = 0;
    bool include_timings = false;
    BaselineOptions baselines;
};

/// Sets one `section.key` entry from its text form. Throws InvalidConfig for
/// unknown keys or unparsable values.
void apply_setting(PipelineConfig& config, std::string_view key, std::string_view value);

/// Every key with its current value in text form, in a fixed order.
std::vector<std::pair<std::string, std::string>> config_entries(const PipelineConfig& config);

/// INI file with `[section]` headers and `key = value` lines, applied on top
/// of `config`. Throws MissingFile / InvalidConfig.
void apply_config_file(PipelineConfig& config, const std::filesystem::path& path);

PipelineConfig load_config(const std::filesystem::path& path);

/// Flat object keyed by `section.key`; numbers and booleans keep their type.
nlohmann::json to_json(const PipelineConfig& config);
PipelineConfig config_from_json(const nlohmann::json& snapshot);

std::string_view to_string(PrototypeMode mode) noexcept;
std::string_view to_string(SegmentProviderKind kind) noexcept;
std::string_view to_string(RefineSource source) noexcept;
std::string_view to_string(BackendKind kind) noexcept;

}  // namespace protochange
