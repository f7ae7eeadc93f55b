#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "protochange/raster.hpp"

namespace protochange {

inline constexpr int kPatchSize = 14;

/// Unnormalized integer samples as stored in the file. Segment maps need the
/// raw ids, everything else goes through load_image().
struct RawRaster {
    int width = 0;
    int height = 0;
    int channels = 0;
    int bit_depth = 0;  // 8 or 16
    std::vector<std::uint16_t> samples;  // row-major, channels interleaved
    std::optional<GeoInfo> geo;
};

RawRaster read_raw(const std::filesystem::path& path);

/// PNG (8/16-bit) or GeoTIFF (8/16-bit unsigned). Intensities are divided by
/// the format maximum (255 or 65535).
RasterImage load_image(const std::filesystem::path& path);

/// Loads both rasters and checks they share width, height and band count.
ImagePair load_pair(const std::filesystem::path& pre, const std::filesystem::path& post);

/// Any nonzero sample in the first channel counts as set.
BinaryMask load_mask(const std::filesystem::path& path);

/// Writes 0/255 single-channel 8-bit. A `.tif`/`.tiff` extension produces a
/// GeoTIFF carrying `geo` when given; anything else is written as PNG.
void save_mask(const BinaryMask& mask, const std::filesystem::path& path,
               const std::optional<GeoInfo>& geo = std::nullopt);

/// Writes an image as PNG (bit_depth 8 or 16) or, for `.tif`, as TIFF.
void save_image(const RasterImage& img, const std::filesystem::path& path, int bit_depth = 8);

/// 8- or 16-bit PNG of raw integer samples (used for segment id maps).
void write_png_samples(const std::filesystem::path& path, int width, int height, int channels,
                       int bit_depth, std::span<const std::uint16_t> samples);

/// Nearest positive multiple of `patch` (half-way rounds up), never below `patch`.
int nearest_patch_multiple(int extent, int patch = kPatchSize);

RasterImage resize_bilinear(const RasterImage& img, int width, int height);
BinaryMask resize_nearest(const BinaryMask& mask, int width, int height);

/// Bilinearly resamples so width and height are multiples of `patch`.
/// Images already on the grid are returned unchanged.
RasterImage resize_to_patch_multiple(const RasterImage& img, int patch = kPatchSize);

/// One matched filename in an A/, B/, label/ dataset tree.
struct DatasetEntry {
    std::string id;  // filename, e.g. "train_1.png"
    std::filesystem::path pre;
    std::filesystem::path post;
    std::optional<std::filesystem::path> label;
};

/// Scans `root/A`, `root/B` and optional `root/label`, sorted by filename.
/// Throws UnmatchedFile when a name is present on only one side and
/// EmptyDataset when nothing matches.
std::vector<DatasetEntry> index_dataset(const std::filesystem::path& root);

DatasetSample load_sample(const DatasetEntry& entry);

/// Eager variant of index_dataset + load_sample.
std::vector<DatasetSample> load_dataset(const std::filesystem::path& root);

}  // namespace protochange
