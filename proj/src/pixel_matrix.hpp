#pragma once

#include <Eigen/Dense>

#include "protochange/raster.hpp"

namespace protochange::detail {

/// n x bands matrix, one row per pixel in raster order.
inline Eigen::MatrixXd pixel_matrix(const RasterImage& img)
{
    const auto n = static_cast<Eigen::Index>(img.pixel_count());
    const Eigen::Index bands = img.bands();
    Eigen::MatrixXd m(n, bands);
    const auto px = img.pixels();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index b = 0; b < bands; ++b) m(i, b) = px[static_cast<std::size_t>(i * bands + b)];
    return m;
}

}  // namespace protochange::detail
