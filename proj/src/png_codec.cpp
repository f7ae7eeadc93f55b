#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <memory>
#include <vector>

#include "codec.hpp"
#include "protochange/error.hpp"

namespace protochange::detail {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept
    {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct ReadInfo {
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int channels = 0;
    int bit_depth = 0;
};

// Everything that may longjmp lives in these two functions; no objects with
// destructors are created between setjmp and the last libpng call.
bool png_read_header(png_structp png, png_infop info, std::FILE* fp, ReadInfo* out)
{
    if (setjmp(png_jmpbuf(png))) return false;
    png_init_io(png, fp);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const int color_type = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (depth == 16) png_set_swap(png);  // host little-endian samples
    png_read_update_info(png, info);

    out->width = png_get_image_width(png, info);
    out->height = png_get_image_height(png, info);
    out->channels = png_get_channels(png, info);
    out->bit_depth = png_get_bit_depth(png, info);
    return true;
}

bool png_read_rows(png_structp png, png_bytepp rows)
{
    if (setjmp(png_jmpbuf(png))) return false;
    png_read_image(png, rows);
    png_read_end(png, nullptr);
    return true;
}

bool png_write_all(png_structp png, png_infop info, std::FILE* fp, png_uint_32 width, png_uint_32 height,
                   int bit_depth, int color_type, png_bytepp rows)
{
    if (setjmp(png_jmpbuf(png))) return false;
    png_init_io(png, fp);
    png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    // Fixed settings keep output byte-stable across runs.
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_write_info(png, info);
    if (bit_depth == 16) png_set_swap(png);
    png_write_image(png, rows);
    png_write_end(png, nullptr);
    return true;
}

void silent_warning(png_structp, png_const_charp) {}

}  // namespace

RawRaster read_png(const std::filesystem::path& path)
{
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());

    png_byte sig[8];
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw Error(ErrorCode::UnsupportedFormat, path.string() + " is not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, silent_warning);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorCode::CorruptData, "libpng initialisation failed");
    }

    ReadInfo hdr;
    if (!png_read_header(png, info, fp.get(), &hdr)) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorCode::CorruptData, "corrupt PNG header in " + path.string());
    }
    if (hdr.bit_depth != 8 && hdr.bit_depth != 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorCode::UnsupportedFormat, "unsupported PNG bit depth " + std::to_string(hdr.bit_depth));
    }

    const std::size_t bytes_per_sample = hdr.bit_depth / 8;
    const std::size_t row_bytes = static_cast<std::size_t>(hdr.width) * hdr.channels * bytes_per_sample;
    std::vector<png_byte> buffer(row_bytes * hdr.height);
    std::vector<png_bytep> rows(hdr.height);
    for (png_uint_32 r = 0; r < hdr.height; ++r) rows[r] = buffer.data() + r * row_bytes;

    const bool ok = png_read_rows(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);
    if (!ok) throw Error(ErrorCode::CorruptData, "corrupt PNG data in " + path.string());

    RawRaster raw;
    raw.width = static_cast<int>(hdr.width);
    raw.height = static_cast<int>(hdr.height);
    raw.channels = hdr.channels;
    raw.bit_depth = hdr.bit_depth;
    const std::size_t n = static_cast<std::size_t>(hdr.width) * hdr.height * hdr.channels;
    raw.samples.resize(n);
    if (hdr.bit_depth == 8) {
        for (std::size_t i = 0; i < n; ++i) raw.samples[i] = buffer[i];
    } else {
        for (std::size_t i = 0; i < n; ++i)
            raw.samples[i] = static_cast<std::uint16_t>(buffer[2 * i] | (buffer[2 * i + 1] << 8));
    }
    return raw;
}

void write_png(const std::filesystem::path& path, int width, int height, int channels, int bit_depth,
               std::span<const std::uint16_t> samples)
{
    if (bit_depth != 8 && bit_depth != 16)
        throw Error(ErrorCode::UnsupportedFormat, "PNG output supports 8 or 16 bits");
    int color_type = 0;
    switch (channels) {
    case 1: color_type = PNG_COLOR_TYPE_GRAY; break;
    case 2: color_type = PNG_COLOR_TYPE_GRAY_ALPHA; break;
    case 3: color_type = PNG_COLOR_TYPE_RGB; break;
    case 4: color_type = PNG_COLOR_TYPE_RGB_ALPHA; break;
    default: throw Error(ErrorCode::UnsupportedFormat, "PNG output supports 1 to 4 channels");
    }
    const std::size_t n = static_cast<std::size_t>(width) * height * channels;
    if (samples.size() != n) throw Error(ErrorCode::ShapeMismatch, "sample buffer size mismatch");

    const std::size_t bytes_per_sample = bit_depth / 8;
    const std::size_t row_bytes = static_cast<std::size_t>(width) * channels * bytes_per_sample;
    std::vector<png_byte> buffer(row_bytes * height);
    if (bit_depth == 8) {
        for (std::size_t i = 0; i < n; ++i) buffer[i] = static_cast<png_byte>(samples[i]);
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            buffer[2 * i] = static_cast<png_byte>(samples[i] & 0xFF);
            buffer[2 * i + 1] = static_cast<png_byte>(samples[i] >> 8);
        }
    }
    std::vector<png_bytep> rows(height);
    for (int r = 0; r < height; ++r) rows[r] = buffer.data() + r * row_bytes;

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw Error(ErrorCode::MissingFile, "cannot write " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, silent_warning);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::CorruptData, "libpng initialisation failed");
    }
    const bool ok = png_write_all(png, info, fp.get(), static_cast<png_uint_32>(width),
                                  static_cast<png_uint_32>(height), bit_depth, color_type, rows.data());
    png_destroy_write_struct(&png, &info);
    if (!ok) throw Error(ErrorCode::CorruptData, "failed writing " + path.string());
}

}  // namespace protochange::detail
