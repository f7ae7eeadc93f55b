#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "protochange/raster.hpp"

namespace protochange {

/// Per-pixel segment ids. 0 is unsegmented background; positive ids are
/// contiguous 1..segment_count() and every one of them covers >= 1 pixel.
class SegmentMap {
public:
    SegmentMap() = default;

    /// Relabels arbitrary ids to 1..M in order of first appearance (raster
    /// order). Id 0 stays background.
    static SegmentMap from_ids(int width, int height, std::span<const std::uint32_t> ids);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::uint32_t segment_count() const noexcept { return static_cast<std::uint32_t>(sizes_.size() - 1); }
    std::span<const std::uint32_t> labels() const noexcept { return labels_; }
    std::uint32_t at(int row, int col) const noexcept
    {
        return labels_[static_cast<std::size_t>(row) * width_ + col];
    }
    /// Pixel count of `id`; size(0) is the background count.
    std::size_t size(std::uint32_t id) const noexcept { return sizes_[id]; }

    /// Footprint of one segment.
    BinaryMask mask_of(std::uint32_t id) const;

    bool operator==(const SegmentMap&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint32_t> labels_;
    std::vector<std::size_t> sizes_{0};
};

/// Reads a single-channel 8/16-bit PNG (or TIFF) of segment ids. When
/// expected dimensions are given a mismatch raises DimensionMismatch.
SegmentMap load_segments(const std::filesystem::path& path, std::optional<int> expected_width = std::nullopt,
                         std::optional<int> expected_height = std::nullopt);

/// 16-bit single-channel PNG, 0 = background. Throws InvalidArgument above 65535 segments.
void save_segments(const SegmentMap& segments, const std::filesystem::path& path);

/// Nearest-neighbour resample followed by relabelling (segments that vanish
/// are dropped from the id range).
SegmentMap resize_segments(const SegmentMap& segments, int width, int height);

/// Deterministic stand-in for an automatic mask generator: every band is
/// quantized to `quant_levels`, 4-connected components of equal codes are
/// labelled, and components smaller than `min_size` are folded into their
/// largest touching neighbour.
SegmentMap builtin_segments(const RasterImage& img, int quant_levels = 8, int min_size = 32);

struct RefineStats {
    std::uint32_t segments_total = 0;
    std::uint32_t segments_touching = 0;
    std::uint32_t segments_retained = 0;
};

/// Keeps every segment s with |s & coarse| / |s| > threshold, whole, and
/// nothing else.
ChangeMask refine(const ChangeMask& coarse, const SegmentMap& segments, double threshold = 0.7,
                  RefineStats* stats = nullptr);

}  // namespace protochange
