#include "protochange/raster.hpp"

#include <algorithm>
#include <cmath>

#include "protochange/error.hpp"

namespace protochange {

RasterImage::RasterImage(int width, int height, int bands, std::vector<double> pixels,
                         std::optional<GeoInfo> geo)
    : width_(width), height_(height), bands_(bands), pixels_(std::move(pixels)), geo_(std::move(geo))
{
    if (width <= 0 || height <= 0 || bands <= 0)
        throw Error(ErrorCode::InvalidArgument, "raster dimensions must be positive");
    const auto expected = static_cast<std::size_t>(width) * height * bands;
    if (pixels_.size() != expected)
        throw Error(ErrorCode::ShapeMismatch, "pixel buffer holds " + std::to_string(pixels_.size()) +
                                                  " values, expected " + std::to_string(expected));
    for (double v : pixels_) {
        if (!(v >= 0.0 && v <= 1.0))
            throw Error(ErrorCode::InvalidArgument, "intensity outside [0,1]: " + std::to_string(v));
    }
}

RasterImage RasterImage::filled(int width, int height, int bands, double value)
{
    const auto n = static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0) * std::max(bands, 0);
    return RasterImage(width, height, bands, std::vector<double>(n, value));
}

RasterImage RasterImage::with_geo(std::optional<GeoInfo> geo) const
{
    RasterImage copy = *this;
    copy.geo_ = std::move(geo);
    return copy;
}

BinaryMask::BinaryMask(int width, int height)
    : width_(width), height_(height),
      values_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), 0)
{
    if (width <= 0 || height <= 0)
        throw Error(ErrorCode::InvalidArgument, "mask dimensions must be positive");
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> values)
    : width_(width), height_(height), values_(std::move(values))
{
    if (width <= 0 || height <= 0)
        throw Error(ErrorCode::InvalidArgument, "mask dimensions must be positive");
    if (values_.size() != static_cast<std::size_t>(width) * height)
        throw Error(ErrorCode::ShapeMismatch, "mask buffer size does not match dimensions");
    for (auto& v : values_) v = v ? 1 : 0;
}

std::size_t BinaryMask::count() const noexcept
{
    return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{1}));
}

ImagePair::ImagePair(RasterImage pre, RasterImage post) : pre_(std::move(pre)), post_(std::move(post))
{
    if (!pre_.same_shape(post_)) {
        throw Error(ErrorCode::DimensionMismatch,
                    "pre is " + std::to_string(pre_.width()) + "x" + std::to_string(pre_.height()) + "x" +
                        std::to_string(pre_.bands()) + ", post is " + std::to_string(post_.width()) + "x" +
                        std::to_string(post_.height()) + "x" + std::to_string(post_.bands()));
    }
}

}  // namespace protochange
