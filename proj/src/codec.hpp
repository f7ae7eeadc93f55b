#pragma once

#include <filesystem>
#include <optional>
#include <span>

#include "protochange/raster_io.hpp"

namespace protochange::detail {

RawRaster read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, int width, int height, int channels, int bit_depth,
               std::span<const std::uint16_t> samples);

RawRaster read_tiff(const std::filesystem::path& path);
void write_tiff(const std::filesystem::path& path, int width, int height, int channels, int bit_depth,
                std::span<const std::uint16_t> samples, const std::optional<GeoInfo>& geo);

}  // namespace protochange::detail
