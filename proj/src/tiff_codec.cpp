#include <tiffio.h>

#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <memory>
#include <mutex>
#include <vector>

#include "codec.hpp"
#include "protochange/error.hpp"

namespace protochange::detail {

namespace {

constexpr ttag_t kModelPixelScale = 33550;
constexpr ttag_t kModelTiepoint = 33922;
constexpr ttag_t kModelTransformation = 34264;
constexpr ttag_t kGeoKeyDirectory = 34735;
constexpr ttag_t kGeoDoubleParams = 34736;
constexpr ttag_t kGeoAsciiParams = 34737;

constexpr std::uint16_t kGeographicTypeKey = 2048;
constexpr std::uint16_t kProjectedCSTypeKey = 3072;

TIFFFieldInfo kGeoFields[] = {
    {kModelPixelScale, TIFF_VARIABLE, TIFF_VARIABLE, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1,
     const_cast<char*>("ModelPixelScaleTag")},
    {kModelTiepoint, TIFF_VARIABLE, TIFF_VARIABLE, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1,
     const_cast<char*>("ModelTiepointTag")},
    {kModelTransformation, TIFF_VARIABLE, TIFF_VARIABLE, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1,
     const_cast<char*>("ModelTransformationTag")},
    {kGeoKeyDirectory, TIFF_VARIABLE, TIFF_VARIABLE, TIFF_SHORT, FIELD_CUSTOM, 1, 1,
     const_cast<char*>("GeoKeyDirectoryTag")},
    {kGeoDoubleParams, TIFF_VARIABLE, TIFF_VARIABLE, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1,
     const_cast<char*>("GeoDoubleParamsTag")},
    {kGeoAsciiParams, -1, -1, TIFF_ASCII, FIELD_CUSTOM, 1, 0, const_cast<char*>("GeoAsciiParamsTag")},
};

TIFFExtendProc g_parent_extender = nullptr;

void geo_tag_extender(TIFF* tif)
{
    TIFFMergeFieldInfo(tif, kGeoFields, sizeof(kGeoFields) / sizeof(kGeoFields[0]));
    if (g_parent_extender) g_parent_extender(tif);
}

void quiet_handler(const char*, const char*, va_list) {}

void install_handlers()
{
    static std::once_flag once;
    std::call_once(once, [] {
        g_parent_extender = TIFFSetTagExtender(geo_tag_extender);
        TIFFSetWarningHandler(quiet_handler);
        TIFFSetErrorHandler(quiet_handler);
    });
}

struct TiffCloser {
    void operator()(TIFF* t) const noexcept
    {
        if (t) TIFFClose(t);
    }
};
using TiffPtr = std::unique_ptr<TIFF, TiffCloser>;

template <typename T>
std::vector<T> get_array(TIFF* tif, ttag_t tag)
{
    std::uint16_t count = 0;
    T* data = nullptr;
    if (TIFFGetField(tif, tag, &count, &data) != 1 || !data) return {};
    return std::vector<T>(data, data + count);
}

std::optional<GeoInfo> read_geo(TIFF* tif)
{
    GeoInfo geo;
    bool have_transform = false;

    const auto matrix = get_array<double>(tif, kModelTransformation);
    const auto scale = get_array<double>(tif, kModelPixelScale);
    const auto tie = get_array<double>(tif, kModelTiepoint);
    if (matrix.size() >= 16) {
        geo.transform = {matrix[3], matrix[0], matrix[1], matrix[7], matrix[4], matrix[5]};
        have_transform = true;
    } else if (scale.size() >= 2 && tie.size() >= 6) {
        const double sx = scale[0];
        const double sy = scale[1];
        geo.transform = {tie[3] - tie[0] * sx, sx, 0.0, tie[4] + tie[1] * sy, 0.0, -sy};
        have_transform = true;
    }

    geo.geo_keys = get_array<std::uint16_t>(tif, kGeoKeyDirectory);
    geo.geo_doubles = get_array<double>(tif, kGeoDoubleParams);
    char* ascii = nullptr;
    if (TIFFGetField(tif, kGeoAsciiParams, &ascii) == 1 && ascii) geo.geo_ascii = ascii;

    // Key directory: header of 4 shorts, then 4 shorts per key.
    // Keys stored inline (location 0) carry their value in the 4th short.
    const auto& keys = geo.geo_keys;
    if (keys.size() >= 4) {
        const std::size_t nkeys = keys[3];
        for (std::size_t k = 0; k < nkeys && 4 + 4 * k + 3 < keys.size(); ++k) {
            const auto* entry = &keys[4 + 4 * k];
            if ((entry[0] == kProjectedCSTypeKey || entry[0] == kGeographicTypeKey) && entry[1] == 0 &&
                entry[3] != 0 && entry[3] != 32767) {
                geo.crs = "EPSG:" + std::to_string(entry[3]);
                if (entry[0] == kProjectedCSTypeKey) break;
            }
        }
    }

    if (!have_transform && geo.geo_keys.empty()) return std::nullopt;
    return geo;
}

void write_geo(TIFF* tif, const GeoInfo& geo)
{
    const auto& t = geo.transform;
    if (t[2] == 0.0 && t[4] == 0.0) {
        double scale[3] = {t[1], -t[5], 0.0};
        double tie[6] = {0.0, 0.0, 0.0, t[0], t[3], 0.0};
        TIFFSetField(tif, kModelPixelScale, std::uint16_t{3}, scale);
        TIFFSetField(tif, kModelTiepoint, std::uint16_t{6}, tie);
    } else {
        double m[16] = {t[1], t[2], 0.0, t[0], t[4], t[5], 0.0, t[3], 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0};
        TIFFSetField(tif, kModelTransformation, std::uint16_t{16}, m);
    }
    if (!geo.geo_keys.empty())
        TIFFSetField(tif, kGeoKeyDirectory, static_cast<std::uint16_t>(geo.geo_keys.size()),
                     geo.geo_keys.data());
    if (!geo.geo_doubles.empty())
        TIFFSetField(tif, kGeoDoubleParams, static_cast<std::uint16_t>(geo.geo_doubles.size()),
                     geo.geo_doubles.data());
    if (!geo.geo_ascii.empty()) TIFFSetField(tif, kGeoAsciiParams, geo.geo_ascii.c_str());
}

void store_sample(RawRaster& raw, std::size_t index, const unsigned char* src, std::size_t i, int bits)
{
    if (bits == 8) {
        raw.samples[index] = src[i];
    } else {
        std::uint16_t v;
        std::memcpy(&v, src + 2 * i, 2);  // libtiff returns host byte order
        raw.samples[index] = v;
    }
}

}  // namespace

RawRaster read_tiff(const std::filesystem::path& path)
{
    install_handlers();
    TiffPtr tif(TIFFOpen(path.c_str(), "r"));
    if (!tif) throw Error(ErrorCode::CorruptData, "cannot parse TIFF " + path.string());

    std::uint32_t width = 0, height = 0;
    std::uint16_t spp = 1, bits = 8, planar = PLANARCONFIG_CONTIG, format = SAMPLEFORMAT_UINT;
    if (!TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &width) || !TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &height))
        throw Error(ErrorCode::CorruptData, "TIFF without dimensions: " + path.string());
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_BITSPERSAMPLE, &bits);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_PLANARCONFIG, &planar);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLEFORMAT, &format);
    if (format != SAMPLEFORMAT_UINT || (bits != 8 && bits != 16))
        throw Error(ErrorCode::UnsupportedFormat,
                    "only 8/16-bit unsigned TIFF is supported (" + path.string() + ")");
    if (width == 0 || height == 0 || spp == 0) throw Error(ErrorCode::CorruptData, "empty TIFF " + path.string());

    RawRaster raw;
    raw.width = static_cast<int>(width);
    raw.height = static_cast<int>(height);
    raw.channels = spp;
    raw.bit_depth = bits;
    raw.samples.resize(static_cast<std::size_t>(width) * height * spp);
    const bool separate = planar == PLANARCONFIG_SEPARATE;

    if (TIFFIsTiled(tif.get())) {
        std::uint32_t tw = 0, th = 0;
        TIFFGetField(tif.get(), TIFFTAG_TILEWIDTH, &tw);
        TIFFGetField(tif.get(), TIFFTAG_TILELENGTH, &th);
        std::vector<unsigned char> tile(TIFFTileSize(tif.get()));
        const int planes = separate ? spp : 1;
        const int per_pixel = separate ? 1 : spp;
        for (int plane = 0; plane < planes; ++plane) {
            for (std::uint32_t ty = 0; ty < height; ty += th) {
                for (std::uint32_t tx = 0; tx < width; tx += tw) {
                    const auto tile_index = TIFFComputeTile(tif.get(), tx, ty, 0, static_cast<tsample_t>(plane));
                    if (TIFFReadEncodedTile(tif.get(), tile_index, tile.data(), tile.size()) < 0)
                        throw Error(ErrorCode::CorruptData, "corrupt TIFF tile in " + path.string());
                    for (std::uint32_t y = 0; y < th && ty + y < height; ++y) {
                        for (std::uint32_t x = 0; x < tw && tx + x < width; ++x) {
                            for (int s = 0; s < per_pixel; ++s) {
                                const std::size_t src = (static_cast<std::size_t>(y) * tw + x) * per_pixel + s;
                                const int band = separate ? plane : s;
                                const std::size_t dst =
                                    ((static_cast<std::size_t>(ty + y) * width) + tx + x) * spp + band;
                                store_sample(raw, dst, tile.data(), src, bits);
                            }
                        }
                    }
                }
            }
        }
    } else {
        std::vector<unsigned char> line(TIFFScanlineSize(tif.get()));
        const int planes = separate ? spp : 1;
        for (int plane = 0; plane < planes; ++plane) {
            for (std::uint32_t y = 0; y < height; ++y) {
                if (TIFFReadScanline(tif.get(), line.data(), y, static_cast<tsample_t>(plane)) < 0)
                    throw Error(ErrorCode::CorruptData, "corrupt TIFF scanline in " + path.string());
                if (separate) {
                    for (std::uint32_t x = 0; x < width; ++x)
                        store_sample(raw, (static_cast<std::size_t>(y) * width + x) * spp + plane, line.data(), x,
                                     bits);
                } else {
                    const std::size_t n = static_cast<std::size_t>(width) * spp;
                    for (std::size_t i = 0; i < n; ++i)
                        store_sample(raw, static_cast<std::size_t>(y) * width * spp + i, line.data(), i, bits);
                }
            }
        }
    }
    raw.geo = read_geo(tif.get());
    return raw;
}

void write_tiff(const std::filesystem::path& path, int width, int height, int channels, int bit_depth,
                std::span<const std::uint16_t> samples, const std::optional<GeoInfo>& geo)
{
    install_handlers();
    if (bit_depth != 8 && bit_depth != 16)
        throw Error(ErrorCode::UnsupportedFormat, "TIFF output supports 8 or 16 bits");
    const std::size_t row_samples = static_cast<std::size_t>(width) * channels;
    if (samples.size() != row_samples * height) throw Error(ErrorCode::ShapeMismatch, "sample buffer size mismatch");

    TiffPtr tif(TIFFOpen(path.c_str(), "w"));
    if (!tif) throw Error(ErrorCode::MissingFile, "cannot write " + path.string());
    TIFFSetField(tif.get(), TIFFTAG_IMAGEWIDTH, static_cast<std::uint32_t>(width));
    TIFFSetField(tif.get(), TIFFTAG_IMAGELENGTH, static_cast<std::uint32_t>(height));
    TIFFSetField(tif.get(), TIFFTAG_SAMPLESPERPIXEL, static_cast<std::uint16_t>(channels));
    TIFFSetField(tif.get(), TIFFTAG_BITSPERSAMPLE, static_cast<std::uint16_t>(bit_depth));
    TIFFSetField(tif.get(), TIFFTAG_SAMPLEFORMAT, SAMPLEFORMAT_UINT);
    TIFFSetField(tif.get(), TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
    TIFFSetField(tif.get(), TIFFTAG_PHOTOMETRIC, channels >= 3 ? PHOTOMETRIC_RGB : PHOTOMETRIC_MINISBLACK);
    TIFFSetField(tif.get(), TIFFTAG_COMPRESSION, COMPRESSION_NONE);
    TIFFSetField(tif.get(), TIFFTAG_ROWSPERSTRIP, TIFFDefaultStripSize(tif.get(), 0));
    if (geo) write_geo(tif.get(), *geo);

    const std::size_t bytes = bit_depth / 8;
    std::vector<unsigned char> line(row_samples * bytes);
    for (int y = 0; y < height; ++y) {
        for (std::size_t i = 0; i < row_samples; ++i) {
            const std::uint16_t v = samples[static_cast<std::size_t>(y) * row_samples + i];
            if (bit_depth == 8) {
                line[i] = static_cast<unsigned char>(v);
            } else {
                std::memcpy(line.data() + 2 * i, &v, 2);
            }
        }
        if (TIFFWriteScanline(tif.get(), line.data(), static_cast<std::uint32_t>(y), 0) < 0)
            throw Error(ErrorCode::CorruptData, "failed writing " + path.string());
    }
}

}  // namespace protochange::detail
