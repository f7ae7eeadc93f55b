#include <algorithm>
#include <cmath>

#include "protochange/baselines.hpp"
#include "protochange/cva.hpp"
#include "protochange/error.hpp"

namespace protochange {

int padded_extent(int extent, int block) noexcept
{
    return (extent + block - 1) / block * block;
}

ChangeMask pca_kmeans_baseline(const ImagePair& pair, const PcaKmeansOptions& options)
{
    const int h = options.block;
    if (h < 2) throw Error(ErrorCode::InvalidArgument, "block size must be >= 2");
    if (options.components < 1 || options.components > h * h)
        throw Error(ErrorCode::InvalidComponentCount, "components must lie in [1, block^2]");
    const int width = pair.width();
    const int height = pair.height();
    if (width < h || height < h) throw Error(ErrorCode::TooSmallImage, "image smaller than one block");

    // Absolute difference image, padded by edge replication.
    const int pw = padded_extent(width, h);
    const int ph = padded_extent(height, h);
    Eigen::MatrixXd diff(ph, pw);
    bool any = false;
    for (int r = 0; r < ph; ++r) {
        const int sr = std::min(r, height - 1);
        for (int c = 0; c < pw; ++c) {
            const int sc = std::min(c, width - 1);
            double sq = 0.0;
            for (int b = 0; b < pair.bands(); ++b) {
                const double d = pair.post().at(sr, sc, b) - pair.pre().at(sr, sc, b);
                sq += d * d;
            }
            diff(r, c) = std::sqrt(sq);
            any = any || sq > 0.0;
        }
    }
    ChangeMask mask(width, height);
    if (!any) return mask;

    // Eigenspace from non-overlapping h x h blocks.
    const int blocks_y = ph / h;
    const int blocks_x = pw / h;
    Eigen::MatrixXd blocks(static_cast<Eigen::Index>(blocks_y) * blocks_x, h * h);
    for (int by = 0; by < blocks_y; ++by)
        for (int bx = 0; bx < blocks_x; ++bx)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < h; ++x)
                    blocks(static_cast<Eigen::Index>(by) * blocks_x + bx, y * h + x) = diff(by * h + y, bx * h + x);

    PcaModel model;
    try {
        model = pca_fit_transform(blocks, std::min<int>(options.components, static_cast<int>(blocks.rows()))).model;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::DegenerateData) return mask;  // uniform difference, no contrast
        throw;
    }

    // h x h neighbourhood of every original pixel, rows y - h/2 .. y + h/2 - 1.
    const Eigen::Index n = static_cast<Eigen::Index>(width) * height;
    Eigen::MatrixXd neighbourhoods(n, h * h);
    const int half = h / 2;
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const Eigen::Index i = static_cast<Eigen::Index>(r) * width + c;
            for (int y = 0; y < h; ++y) {
                const int sr = std::clamp(r - half + y, 0, ph - 1);
                for (int x = 0; x < h; ++x) {
                    const int sc = std::clamp(c - half + x, 0, pw - 1);
                    neighbourhoods(i, y * h + x) = diff(sr, sc);
                }
            }
        }
    }
    const Eigen::MatrixXd features = model.transform(neighbourhoods);

    KMeansOptions km;
    km.k = 2;
    km.seed = options.seed;
    const KMeansResult clusters = kmeans(features, km);

    double sum[2] = {0.0, 0.0};
    std::size_t count[2] = {0, 0};
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const int label = clusters.labels[static_cast<std::size_t>(r) * width + c];
            sum[label] += diff(r, c);
            ++count[label];
        }
    }
    const double mean0 = count[0] ? sum[0] / count[0] : 0.0;
    const double mean1 = count[1] ? sum[1] / count[1] : 0.0;
    const int changed = mean1 > mean0 ? 1 : 0;
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            mask.set(r, c, clusters.labels[static_cast<std::size_t>(r) * width + c] == changed);
    return mask;
}

}  // namespace protochange
