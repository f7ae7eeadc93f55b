#include "protochange/raster_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "codec.hpp"
#include "protochange/error.hpp"

namespace protochange {

namespace fs = std::filesystem;

namespace {

enum class Format { Png, Tiff, Unknown };

Format sniff(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    unsigned char magic[8] = {};
    in.read(reinterpret_cast<char*>(magic), sizeof(magic));
    if (in.gcount() >= 8 && magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N' && magic[3] == 'G')
        return Format::Png;
    if (in.gcount() >= 4 && ((magic[0] == 'I' && magic[1] == 'I' && (magic[2] == 42 || magic[2] == 43)) ||
                             (magic[0] == 'M' && magic[1] == 'M' && (magic[3] == 42 || magic[3] == 43))))
        return Format::Tiff;
    return Format::Unknown;
}

bool is_tiff_extension(const fs::path& path)
{
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".tif" || ext == ".tiff";
}

bool is_raster_file(const fs::path& path)
{
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".tif" || ext == ".tiff";
}

std::map<std::string, fs::path> list_rasters(const fs::path& dir)
{
    std::map<std::string, fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && is_raster_file(entry.path()))
            out.emplace(entry.path().filename().string(), entry.path());
    }
    return out;
}

}  // namespace

RawRaster read_raw(const fs::path& path)
{
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) throw Error(ErrorCode::MissingFile, "no such file: " + path.string());
    switch (sniff(path)) {
    case Format::Png: return detail::read_png(path);
    case Format::Tiff: return detail::read_tiff(path);
    case Format::Unknown: break;
    }
    throw Error(ErrorCode::UnsupportedFormat, path.string() + " is neither PNG nor TIFF");
}

RasterImage load_image(const fs::path& path)
{
    RawRaster raw = read_raw(path);
    const double scale = raw.bit_depth == 16 ? 65535.0 : 255.0;
    std::vector<double> pixels(raw.samples.size());
    std::transform(raw.samples.begin(), raw.samples.end(), pixels.begin(),
                   [scale](std::uint16_t v) { return v / scale; });
    return RasterImage(raw.width, raw.height, raw.channels, std::move(pixels), std::move(raw.geo));
}

ImagePair load_pair(const fs::path& pre, const fs::path& post)
{
    return ImagePair(load_image(pre), load_image(post));
}

BinaryMask load_mask(const fs::path& path)
{
    RawRaster raw = read_raw(path);
    std::vector<std::uint8_t> values(static_cast<std::size_t>(raw.width) * raw.height);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = raw.samples[i * raw.channels] != 0 ? 1 : 0;
    return BinaryMask(raw.width, raw.height, std::move(values));
}

void save_mask(const BinaryMask& mask, const fs::path& path, const std::optional<GeoInfo>& geo)
{
    std::vector<std::uint16_t> samples(mask.size());
    const auto values = mask.values();
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = values[i] ? 255 : 0;
    if (is_tiff_extension(path)) {
        detail::write_tiff(path, mask.width(), mask.height(), 1, 8, samples, geo);
    } else {
        detail::write_png(path, mask.width(), mask.height(), 1, 8, samples);
    }
}

void save_image(const RasterImage& img, const fs::path& path, int bit_depth)
{
    if (bit_depth != 8 && bit_depth != 16) throw Error(ErrorCode::UnsupportedFormat, "bit depth must be 8 or 16");
    const double scale = bit_depth == 16 ? 65535.0 : 255.0;
    const auto pixels = img.pixels();
    std::vector<std::uint16_t> samples(pixels.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        samples[i] = static_cast<std::uint16_t>(std::lround(pixels[i] * scale));
    if (is_tiff_extension(path)) {
        detail::write_tiff(path, img.width(), img.height(), img.bands(), bit_depth, samples, img.geo());
    } else {
        detail::write_png(path, img.width(), img.height(), img.bands(), bit_depth, samples);
    }
}

void write_png_samples(const fs::path& path, int width, int height, int channels, int bit_depth,
                       std::span<const std::uint16_t> samples)
{
    detail::write_png(path, width, height, channels, bit_depth, samples);
}

int nearest_patch_multiple(int extent, int patch)
{
    if (patch < 1) throw Error(ErrorCode::InvalidArgument, "patch size must be >= 1");
    const long cells = std::lround(static_cast<double>(extent) / patch);
    return static_cast<int>(std::max<long>(cells, 1) * patch);
}

RasterImage resize_bilinear(const RasterImage& img, int width, int height)
{
    if (img.empty()) throw Error(ErrorCode::InvalidArgument, "cannot resize an empty image");
    if (width == img.width() && height == img.height()) return img;

    const int bands = img.bands();
    const double sx = static_cast<double>(img.width()) / width;
    const double sy = static_cast<double>(img.height()) / height;

    // Half-pixel-centre sampling, clamped at the borders.
    struct Tap {
        int lo, hi;
        double frac;
    };
    auto taps = [](int out, int in, double scale) {
        std::vector<Tap> t(out);
        for (int i = 0; i < out; ++i) {
            double src = (i + 0.5) * scale - 0.5;
            src = std::clamp(src, 0.0, static_cast<double>(in - 1));
            const int lo = static_cast<int>(std::floor(src));
            t[i] = {lo, std::min(lo + 1, in - 1), src - lo};
        }
        return t;
    };
    const auto xt = taps(width, img.width(), sx);
    const auto yt = taps(height, img.height(), sy);

    std::vector<double> out(static_cast<std::size_t>(width) * height * bands);
    for (int r = 0; r < height; ++r) {
        const auto& ty = yt[r];
        for (int c = 0; c < width; ++c) {
            const auto& tx = xt[c];
            for (int b = 0; b < bands; ++b) {
                const double top = img.at(ty.lo, tx.lo, b) * (1.0 - tx.frac) + img.at(ty.lo, tx.hi, b) * tx.frac;
                const double bottom = img.at(ty.hi, tx.lo, b) * (1.0 - tx.frac) + img.at(ty.hi, tx.hi, b) * tx.frac;
                out[(static_cast<std::size_t>(r) * width + c) * bands + b] =
                    std::clamp(top * (1.0 - ty.frac) + bottom * ty.frac, 0.0, 1.0);
            }
        }
    }

    std::optional<GeoInfo> geo = img.geo();
    if (geo) {
        auto& t = geo->transform;
        t[1] *= sx;
        t[2] *= sy;
        t[4] *= sx;
        t[5] *= sy;
    }
    return RasterImage(width, height, bands, std::move(out), std::move(geo));
}

BinaryMask resize_nearest(const BinaryMask& mask, int width, int height)
{
    if (width == mask.width() && height == mask.height()) return mask;
    BinaryMask out(width, height);
    const double sx = static_cast<double>(mask.width()) / width;
    const double sy = static_cast<double>(mask.height()) / height;
    for (int r = 0; r < height; ++r) {
        const int sr = std::min(static_cast<int>((r + 0.5) * sy), mask.height() - 1);
        for (int c = 0; c < width; ++c) {
            const int sc = std::min(static_cast<int>((c + 0.5) * sx), mask.width() - 1);
            out.set(r, c, mask.at(sr, sc));
        }
    }
    return out;
}

RasterImage resize_to_patch_multiple(const RasterImage& img, int patch)
{
    if (img.empty()) throw Error(ErrorCode::InvalidArgument, "cannot resize an empty image");
    return resize_bilinear(img, nearest_patch_multiple(img.width(), patch), nearest_patch_multiple(img.height(), patch));
}

std::vector<DatasetEntry> index_dataset(const fs::path& root)
{
    const fs::path dir_a = root / "A";
    const fs::path dir_b = root / "B";
    const fs::path dir_label = root / "label";
    std::error_code ec;
    if (!fs::is_directory(dir_a, ec) || !fs::is_directory(dir_b, ec))
        throw Error(ErrorCode::MissingFile, "dataset root " + root.string() + " must contain A/ and B/");

    const auto pre = list_rasters(dir_a);
    const auto post = list_rasters(dir_b);
    std::map<std::string, fs::path> labels;
    if (fs::is_directory(dir_label, ec)) labels = list_rasters(dir_label);

    for (const auto& [name, path] : pre) {
        if (!post.contains(name)) throw Error(ErrorCode::UnmatchedFile, "A/" + name + " has no counterpart in B/");
    }
    for (const auto& [name, path] : post) {
        if (!pre.contains(name)) throw Error(ErrorCode::UnmatchedFile, "B/" + name + " has no counterpart in A/");
    }
    if (pre.empty()) throw Error(ErrorCode::EmptyDataset, "no image pairs under " + root.string());

    // std::map iterates in byte-wise lexicographic order.
    std::vector<DatasetEntry> entries;
    entries.reserve(pre.size());
    for (const auto& [name, path] : pre) {
        DatasetEntry e{name, path, post.at(name), std::nullopt};
        if (auto it = labels.find(name); it != labels.end()) e.label = it->second;
        entries.push_back(std::move(e));
    }
    return entries;
}

DatasetSample load_sample(const DatasetEntry& entry)
{
    DatasetSample sample{entry.id, load_pair(entry.pre, entry.post), std::nullopt};
    if (entry.label) {
        BinaryMask label = load_mask(*entry.label);
        if (label.width() != sample.pair.width() || label.height() != sample.pair.height())
            throw Error(ErrorCode::DimensionMismatch, "label " + entry.label->string() + " does not match pair size");
        sample.label = std::move(label);
    }
    return sample;
}

std::vector<DatasetSample> load_dataset(const fs::path& root)
{
    std::vector<DatasetSample> samples;
    for (const auto& entry : index_dataset(root)) samples.push_back(load_sample(entry));
    return samples;
}

}  // namespace protochange
