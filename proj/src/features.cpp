#include "protochange/features.hpp"

#include <cmath>
#include <numbers>

#include "onnx_backend.hpp"
#include "protochange/error.hpp"

namespace protochange {

PatchGrid patch_grid(int width, int height, int patch)
{
    if (patch < 1) throw Error(ErrorCode::InvalidArgument, "patch size must be >= 1");
    if (width <= 0 || height <= 0 || width % patch != 0 || height % patch != 0) {
        throw Error(ErrorCode::NotMultiple, std::to_string(width) + "x" + std::to_string(height) +
                                                " is not a positive multiple of " + std::to_string(patch));
    }
    return PatchGrid{height / patch, width / patch, patch};
}

template <class Tag>
GridValues<Tag>::GridValues(PatchGrid grid, int dim, std::vector<double> data)
    : grid_(grid), dim_(dim), data_(std::move(data))
{
    if (dim <= 0) throw Error(ErrorCode::ShapeMismatch, "feature dimension must be positive");
    if (data_.size() != grid_.cells() * static_cast<std::size_t>(dim)) {
        throw Error(ErrorCode::ShapeMismatch, "grid " + std::to_string(grid_.rows) + "x" + std::to_string(grid_.cols) +
                                                  "x" + std::to_string(dim) + " does not match " +
                                                  std::to_string(data_.size()) + " values");
    }
    for (double v : data_) {
        if (!std::isfinite(v)) throw Error(ErrorCode::ShapeMismatch, "non-finite feature value");
    }
}

template class GridValues<FeatureTag>;
template class GridValues<DifferenceTag>;

PatchStatisticsExtractor::PatchStatisticsExtractor(int dim) : dim_(dim)
{
    if (dim < 4) throw Error(ErrorCode::InvalidArgument, "patch-statistics backend needs dim >= 4");
}

FeatureMap PatchStatisticsExtractor::extract(const RasterImage& img)
{
    const PatchGrid grid = patch_grid(img.width(), img.height(), kPatchSize);
    const int bands = img.bands();
    const int p = grid.patch;
    const double area = static_cast<double>(p) * p;

    std::vector<double> data(grid.cells() * dim_, 0.0);
    std::vector<double> raw(2 * bands + kOrientationBins);
    std::vector<double> gray(static_cast<std::size_t>(p) * p);

    for (int gr = 0; gr < grid.rows; ++gr) {
        for (int gc = 0; gc < grid.cols; ++gc) {
            const int r0 = gr * p;
            const int c0 = gc * p;
            std::fill(raw.begin(), raw.end(), 0.0);

            for (int b = 0; b < bands; ++b) {
                double sum = 0.0;
                for (int y = 0; y < p; ++y)
                    for (int x = 0; x < p; ++x) sum += img.at(r0 + y, c0 + x, b);
                const double mean = sum / area;
                double sq = 0.0;
                for (int y = 0; y < p; ++y) {
                    for (int x = 0; x < p; ++x) {
                        const double d = img.at(r0 + y, c0 + x, b) - mean;
                        sq += d * d;
                    }
                }
                raw[b] = mean;
                raw[bands + b] = std::sqrt(sq / area);
            }

            for (int y = 0; y < p; ++y) {
                for (int x = 0; x < p; ++x) {
                    double s = 0.0;
                    for (int b = 0; b < bands; ++b) s += img.at(r0 + y, c0 + x, b);
                    gray[static_cast<std::size_t>(y) * p + x] = s / bands;
                }
            }
            double* hist = raw.data() + 2 * bands;
            for (int y = 0; y < p; ++y) {
                const int yu = std::max(y - 1, 0);
                const int yd = std::min(y + 1, p - 1);
                for (int x = 0; x < p; ++x) {
                    const int xl = std::max(x - 1, 0);
                    const int xr = std::min(x + 1, p - 1);
                    const double gx = (gray[static_cast<std::size_t>(y) * p + xr] -
                                       gray[static_cast<std::size_t>(y) * p + xl]) / (xr - xl);
                    const double gy = (gray[static_cast<std::size_t>(yd) * p + x] -
                                       gray[static_cast<std::size_t>(yu) * p + x]) / (yd - yu);
                    const double mag = std::hypot(gx, gy);
                    if (mag == 0.0) continue;
                    const double angle = std::atan2(gy, gx) + std::numbers::pi;  // [0, 2pi]
                    int bin = static_cast<int>(angle / (2.0 * std::numbers::pi) * kOrientationBins);
                    if (bin >= kOrientationBins) bin = 0;
                    hist[bin] += mag / area;
                }
            }

            double* out = data.data() + (static_cast<std::size_t>(gr) * grid.cols + gc) * dim_;
            const int n = std::min<int>(dim_, static_cast<int>(raw.size()));
            std::copy(raw.begin(), raw.begin() + n, out);
        }
    }
    return FeatureMap(grid, dim_, std::move(data));
}

std::unique_ptr<FeatureExtractor> make_feature_extractor(const FeatureBackendSpec& spec)
{
    switch (spec.kind) {
    case BackendKind::PatchStatistics: return std::make_unique<PatchStatisticsExtractor>(spec.dim);
    case BackendKind::PortableModel: return detail::make_onnx_extractor(spec.model_path, spec.dim);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown backend kind");
}

FeatureMap extract_features(const RasterImage& img, FeatureExtractor& backend)
{
    // Validates the geometry up front with the same error for every backend.
    patch_grid(img.width(), img.height(), kPatchSize);
    return backend.extract(img);
}

DifferenceMap feature_difference(const FeatureMap& a, const FeatureMap& b)
{
    if (!a.same_shape(b)) {
        throw Error(ErrorCode::ShapeMismatch,
                    "feature maps differ: " + std::to_string(a.grid().rows) + "x" + std::to_string(a.grid().cols) +
                        "x" + std::to_string(a.dim()) + " vs " + std::to_string(b.grid().rows) + "x" +
                        std::to_string(b.grid().cols) + "x" + std::to_string(b.dim()));
    }
    const auto da = a.data();
    const auto db = b.data();
    std::vector<double> out(da.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = db[i] - da[i];
    return DifferenceMap(a.grid(), a.dim(), std::move(out));
}

}  // namespace protochange
