#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "protochange/raster.hpp"
#include "protochange/raster_io.hpp"

namespace protochange {

struct PatchGrid {
    int rows = 0;
    int cols = 0;
    int patch = kPatchSize;

    std::size_t cells() const noexcept { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
    bool operator==(const PatchGrid&) const = default;
};

/// Throws NotMultiple unless both extents are positive multiples of `patch`.
PatchGrid patch_grid(int width, int height, int patch = kPatchSize);

/// rows x cols x dim grid of real values, one vector per patch. The tag keeps
/// raw embeddings and their differences from being mixed up.
template <class Tag>
class GridValues {
public:
    GridValues() = default;

    /// Throws ShapeMismatch on a size mismatch or any non-finite value.
    GridValues(PatchGrid grid, int dim, std::vector<double> data);

    const PatchGrid& grid() const noexcept { return grid_; }
    int dim() const noexcept { return dim_; }
    std::span<const double> data() const noexcept { return data_; }

    std::span<const double> cell(int row, int col) const noexcept
    {
        return {data_.data() + (static_cast<std::size_t>(row) * grid_.cols + col) * dim_,
                static_cast<std::size_t>(dim_)};
    }
    std::span<const double> cell(std::size_t index) const noexcept
    {
        return {data_.data() + index * dim_, static_cast<std::size_t>(dim_)};
    }

    bool same_shape(const GridValues& o) const noexcept { return grid_ == o.grid_ && dim_ == o.dim_; }
    bool operator==(const GridValues&) const = default;

private:
    PatchGrid grid_;
    int dim_ = 0;
    std::vector<double> data_;
};

struct FeatureTag;
struct DifferenceTag;
using FeatureMap = GridValues<FeatureTag>;
using DifferenceMap = GridValues<DifferenceTag>;

extern template class GridValues<FeatureTag>;
extern template class GridValues<DifferenceTag>;

enum class BackendKind {
    PatchStatistics,  // deterministic per-patch statistics, no model file needed
    PortableModel,    // ONNX patch-token embedder
};

struct FeatureBackendSpec {
    BackendKind kind = BackendKind::PatchStatistics;
    /// Output width. Required (>= 4) for PatchStatistics; for PortableModel,
    /// 0 accepts whatever the model emits and anything else is enforced.
    int dim = 16;
    std::string model_path;
};

/// One extractor instance per worker thread; instances are not thread-safe.
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual BackendKind kind() const noexcept = 0;
    virtual FeatureMap extract(const RasterImage& img) = 0;
};

/// Builds an extractor. Model-backed kinds load the model here, so a missing
/// or unreadable file fails with ModelLoadFailure before any compute.
std::unique_ptr<FeatureExtractor> make_feature_extractor(const FeatureBackendSpec& spec);

/// Per patch: mean of every band, standard deviation of every band, then an
/// 8-bin magnitude-weighted gradient-orientation histogram of the band-mean
/// intensity. Gradients never read outside the patch, so features are a pure
/// function of the patch's own pixels. Zero-padded or truncated to `dim`.
class PatchStatisticsExtractor final : public FeatureExtractor {
public:
    explicit PatchStatisticsExtractor(int dim);
    BackendKind kind() const noexcept override { return BackendKind::PatchStatistics; }
    FeatureMap extract(const RasterImage& img) override;
    int dim() const noexcept { return dim_; }

    static constexpr int kOrientationBins = 8;

private:
    int dim_;
};

FeatureMap extract_features(const RasterImage& img, FeatureExtractor& backend);

/// Elementwise b - a, so S_{x2 x1} = feature_difference(f(x1), f(x2)).
DifferenceMap feature_difference(const FeatureMap& a, const FeatureMap& b);

}  // namespace protochange
