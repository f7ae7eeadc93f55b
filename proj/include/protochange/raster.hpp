#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace protochange {

/// Georeferencing carried through from GeoTIFF inputs.
///
/// `transform` uses the usual affine layout
///   x = t[0] + col * t[1] + row * t[2]
///   y = t[3] + col * t[4] + row * t[5]
/// The GeoKey directory and its parameter tags are kept verbatim so that a
/// written GeoTIFF carries the same CRS definition as the source.
struct GeoInfo {
    std::array<double, 6> transform{0.0, 1.0, 0.0, 0.0, 0.0, 1.0};
    std::vector<std::uint16_t> geo_keys;
    std::vector<double> geo_doubles;
    std::string geo_ascii;
    std::string crs;  // "EPSG:<code>" when the key directory names one

    bool operator==(const GeoInfo&) const = default;
};

/// Multi-band raster with intensities normalized to [0,1].
/// Pixels are stored row-major with bands interleaved: index = (row*width + col)*bands + band.
class RasterImage {
public:
    RasterImage() = default;
    RasterImage(int width, int height, int bands, std::vector<double> pixels,
                std::optional<GeoInfo> geo = std::nullopt);

    static RasterImage filled(int width, int height, int bands, double value);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int bands() const noexcept { return bands_; }
    bool empty() const noexcept { return pixels_.empty(); }
    std::size_t pixel_count() const noexcept
    {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }

    double at(int row, int col, int band) const noexcept
    {
        return pixels_[(static_cast<std::size_t>(row) * width_ + col) * bands_ + band];
    }
    std::span<const double> pixels() const noexcept { return pixels_; }
    const std::optional<GeoInfo>& geo() const noexcept { return geo_; }

    /// Copy of this image with a different georeference (or none).
    RasterImage with_geo(std::optional<GeoInfo> geo) const;

    bool same_shape(const RasterImage& other) const noexcept
    {
        return width_ == other.width_ && height_ == other.height_ && bands_ == other.bands_;
    }

    bool operator==(const RasterImage& other) const
    {
        return same_shape(other) && pixels_ == other.pixels_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    int bands_ = 0;
    std::vector<double> pixels_;
    std::optional<GeoInfo> geo_;
};

/// Per-pixel binary mask. Used both for change masks (1 = changed) and for
/// prototype footprints (1 = part of the target).
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height);
    BinaryMask(int width, int height, std::vector<std::uint8_t> values);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return values_.size(); }

    bool at(int row, int col) const noexcept
    {
        return values_[static_cast<std::size_t>(row) * width_ + col] != 0;
    }
    void set(int row, int col, bool on) noexcept
    {
        values_[static_cast<std::size_t>(row) * width_ + col] = on ? 1 : 0;
    }
    std::span<const std::uint8_t> values() const noexcept { return values_; }

    std::size_t count() const noexcept;
    bool any() const noexcept { return count() > 0; }
    bool same_shape(const BinaryMask& o) const noexcept
    {
        return width_ == o.width_ && height_ == o.height_;
    }

    bool operator==(const BinaryMask&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> values_;
};

using ChangeMask = BinaryMask;

/// Co-registered pre/post rasters of identical geometry.
class ImagePair {
public:
    /// Throws DimensionMismatch unless width, height and bands agree.
    ImagePair(RasterImage pre, RasterImage post);

    const RasterImage& pre() const noexcept { return pre_; }
    const RasterImage& post() const noexcept { return post_; }
    int width() const noexcept { return pre_.width(); }
    int height() const noexcept { return pre_.height(); }
    int bands() const noexcept { return pre_.bands(); }

private:
    RasterImage pre_;
    RasterImage post_;
};

struct DatasetSample {
    std::string id;
    ImagePair pair;
    std::optional<ChangeMask> label;
};

}  // namespace protochange
