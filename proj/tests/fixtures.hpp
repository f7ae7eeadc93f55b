#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "protochange/prototype.hpp"
#include "protochange/random.hpp"
#include "protochange/raster.hpp"
#include "protochange/raster_io.hpp"

namespace fixtures {

using namespace protochange;

inline std::vector<double> clamp01(std::vector<double> v)
{
    for (double& x : v) x = std::clamp(x, 0.0, 1.0);
    return v;
}

/// Smooth low-contrast texture around `base`, inside one quantization level
/// of the builtin segmenter for the defaults used here.
inline std::vector<double> background(int w, int h, int bands, std::uint64_t seed, double base = 0.31)
{
    Rng rng(seed);
    std::vector<double> px(static_cast<std::size_t>(w) * h * bands);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            for (int b = 0; b < bands; ++b) {
                const double wave = 0.02 * std::sin(0.11 * r + 0.7 * b) * std::cos(0.07 * c);
                px[(static_cast<std::size_t>(r) * w + c) * bands + b] = base + wave + 0.004 * rng.normal();
            }
    return px;
}

struct Square {
    int row = 0;
    int col = 0;
    int size = 28;
};

inline void paint(std::vector<double>& px, int w, int bands, const Square& s, std::uint64_t seed)
{
    Rng rng(seed);
    for (int r = s.row; r < s.row + s.size; ++r)
        for (int c = s.col; c < s.col + s.size; ++c)
            for (int b = 0; b < bands; ++b)
                px[(static_cast<std::size_t>(r) * w + c) * bands + b] = 0.80 + 0.01 * b + 0.004 * rng.normal();
}

struct ChangeScene {
    ImagePair pair;
    ChangeMask truth;
    std::vector<Square> squares;
};

/// Squares appear in the post image only; the post background carries fresh
/// sensor noise.
inline ChangeScene inserted_squares(int w, int h, const std::vector<Square>& squares, std::uint64_t seed,
                                    int bands = 3)
{
    std::vector<double> pre = background(w, h, bands, seed);
    std::vector<double> post = pre;
    Rng noise(seed ^ 0x5eedull);
    for (double& v : post) v += 0.003 * noise.normal();
    ChangeMask truth(w, h);
    for (std::size_t i = 0; i < squares.size(); ++i) {
        paint(post, w, bands, squares[i], seed + 17 * (i + 1));
        for (int r = squares[i].row; r < squares[i].row + squares[i].size; ++r)
            for (int c = squares[i].col; c < squares[i].col + squares[i].size; ++c) truth.set(r, c, true);
    }
    return ChangeScene{ImagePair(RasterImage(w, h, bands, clamp01(std::move(pre))),
                                 RasterImage(w, h, bands, clamp01(std::move(post)))),
                       std::move(truth), squares};
}

/// The 256 x 256 scene with three 28 x 28 inserted squares.
inline ChangeScene three_squares(std::uint64_t seed = 7)
{
    return inserted_squares(256, 256, {{40, 50, 28}, {120, 170, 28}, {190, 60, 28}}, seed);
}

inline BinaryMask square_mask(int w, int h, const Square& s)
{
    BinaryMask m(w, h);
    for (int r = s.row; r < s.row + s.size; ++r)
        for (int c = s.col; c < s.col + s.size; ++c) m.set(r, c, true);
    return m;
}

inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("protochange_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// A/, B/, label/ tree of `n` labelled scenes with one to three squares each.
inline void write_dataset(const std::filesystem::path& root, int n, int size, std::uint64_t seed)
{
    for (const char* sub : {"A", "B", "label"}) std::filesystem::create_directories(root / sub);
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        std::vector<Square> squares;
        const int count = 1 + static_cast<int>(rng.below(3));
        for (int k = 0; k < count; ++k) {
            const int s = 20 + static_cast<int>(rng.below(10));
            squares.push_back({static_cast<int>(rng.below(static_cast<std::uint64_t>(size - s))),
                               static_cast<int>(rng.below(static_cast<std::uint64_t>(size - s))), s});
        }
        const ChangeScene scene = inserted_squares(size, size, squares, seed + 101 * (i + 1));
        const std::string id = "sample_" + std::to_string(i) + ".png";
        save_image(scene.pair.pre(), root / "A" / id);
        save_image(scene.pair.post(), root / "B" / id);
        save_mask(scene.truth, root / "label" / id);
    }
}

}  // namespace fixtures
