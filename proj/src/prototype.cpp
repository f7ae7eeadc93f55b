#include "protochange/prototype.hpp"

#include <algorithm>
#include <map>

#include "protochange/error.hpp"
#include "protochange/random.hpp"

namespace protochange {

std::string_view to_string(PrototypeSource source) noexcept
{
    switch (source) {
    case PrototypeSource::Pre: return "pre";
    case PrototypeSource::Post: return "post";
    case PrototypeSource::External: return "external";
    }
    return "unknown";
}

namespace {

struct Box {
    int r0, c0, r1, c1;  // inclusive
};

std::optional<Box> bounding_box(const BinaryMask& mask)
{
    Box box{mask.height(), mask.width(), -1, -1};
    for (int r = 0; r < mask.height(); ++r) {
        for (int c = 0; c < mask.width(); ++c) {
            if (!mask.at(r, c)) continue;
            box.r0 = std::min(box.r0, r);
            box.c0 = std::min(box.c0, c);
            box.r1 = std::max(box.r1, r);
            box.c1 = std::max(box.c1, c);
        }
    }
    if (box.r1 < 0) return std::nullopt;
    return box;
}

Prototype crop_prototype(const RasterImage& img, const BinaryMask& scene_mask, Box box, PrototypeSource source)
{
    const int h = box.r1 - box.r0 + 1;
    const int w = box.c1 - box.c0 + 1;
    const int bands = img.bands();
    std::vector<double> chip(static_cast<std::size_t>(w) * h * bands);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(w) * h);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            for (int b = 0; b < bands; ++b)
                chip[(static_cast<std::size_t>(r) * w + c) * bands + b] = img.at(box.r0 + r, box.c0 + c, b);
            mask[static_cast<std::size_t>(r) * w + c] = scene_mask.at(box.r0 + r, box.c0 + c) ? 1 : 0;
        }
    }
    return Prototype{RasterImage(w, h, bands, std::move(chip)), BinaryMask(w, h, std::move(mask)),
                     Anchor{box.r0, box.c0}, source};
}

void check_inside(const Prototype& p, int width, int height)
{
    if (p.anchor.row < 0 || p.anchor.col < 0 || p.anchor.row + p.chip.height() > height ||
        p.anchor.col + p.chip.width() > width) {
        throw Error(ErrorCode::OutOfBounds,
                    "prototype " + std::to_string(p.chip.width()) + "x" + std::to_string(p.chip.height()) +
                        " at (" + std::to_string(p.anchor.row) + "," + std::to_string(p.anchor.col) +
                        ") does not fit a " + std::to_string(width) + "x" + std::to_string(height) + " scene");
    }
}

RasterImage composite(const RasterImage& scene, const Prototype& p)
{
    if (p.chip.bands() != scene.bands())
        throw Error(ErrorCode::ShapeMismatch, "prototype has " + std::to_string(p.chip.bands()) +
                                                  " bands, scene has " + std::to_string(scene.bands()));
    const auto src = scene.pixels();
    std::vector<double> out(src.begin(), src.end());
    const int bands = scene.bands();
    for (int r = 0; r < p.chip.height(); ++r) {
        for (int c = 0; c < p.chip.width(); ++c) {
            if (!p.mask.at(r, c)) continue;
            const std::size_t base =
                (static_cast<std::size_t>(p.anchor.row + r) * scene.width() + p.anchor.col + c) * bands;
            for (int b = 0; b < bands; ++b) out[base + b] = p.chip.at(r, c, b);
        }
    }
    return RasterImage(scene.width(), scene.height(), bands, std::move(out), scene.geo());
}

}  // namespace

Prototype select_prototype_manual(const RasterImage& img, const BinaryMask& mask, Anchor offset,
                                  PrototypeSource source)
{
    if (offset.row < 0 || offset.col < 0 || offset.row + mask.height() > img.height() ||
        offset.col + mask.width() > img.width())
        throw Error(ErrorCode::OutOfBounds, "prototype mask extends beyond the image");
    const auto box = bounding_box(mask);
    if (!box) throw Error(ErrorCode::EmptyMask, "prototype mask has no set pixels");

    // Lift the mask into scene coordinates, then crop.
    BinaryMask scene_mask(img.width(), img.height());
    for (int r = box->r0; r <= box->r1; ++r)
        for (int c = box->c0; c <= box->c1; ++c)
            if (mask.at(r, c)) scene_mask.set(offset.row + r, offset.col + c, true);
    const Box scene_box{box->r0 + offset.row, box->c0 + offset.col, box->r1 + offset.row, box->c1 + offset.col};
    return crop_prototype(img, scene_mask, scene_box, source);
}

Prototype external_prototype(RasterImage chip, BinaryMask mask, int scene_width, int scene_height,
                             std::optional<Anchor> anchor)
{
    if (mask.width() != chip.width() || mask.height() != chip.height())
        throw Error(ErrorCode::ShapeMismatch, "prototype mask and chip differ in size");
    if (!mask.any()) throw Error(ErrorCode::EmptyMask, "prototype mask has no set pixels");
    const Anchor at = anchor.value_or(Anchor{(scene_height - chip.height()) / 2, (scene_width - chip.width()) / 2});
    Prototype p{std::move(chip), std::move(mask), at, PrototypeSource::External};
    check_inside(p, scene_width, scene_height);
    return p;
}

RandomSelection select_prototype_random(const SegmentMap& segments, const RasterImage& source_img,
                                        std::uint64_t seed, PrototypeSource source)
{
    if (segments.segment_count() == 0) throw Error(ErrorCode::NoSegments, "segment map holds no segments");
    if (segments.width() != source_img.width() || segments.height() != source_img.height())
        throw Error(ErrorCode::DimensionMismatch, "segment map does not match the source image");

    Rng rng(seed);
    const auto id = static_cast<std::uint32_t>(1 + rng.below(segments.segment_count()));
    const BinaryMask footprint = segments.mask_of(id);
    const auto box = bounding_box(footprint);
    return RandomSelection{crop_prototype(source_img, footprint, *box, source), id};
}

SynthesizedPair synthesize_pair(const ImagePair& pair, const Prototype& p)
{
    check_inside(p, pair.width(), pair.height());
    return SynthesizedPair{composite(pair.pre(), p), composite(pair.post(), p)};
}

std::vector<CellCoverage> prototype_coverage(const Prototype& p, const PatchGrid& grid)
{
    check_inside(p, grid.cols * grid.patch, grid.rows * grid.patch);
    std::map<CellIndex, std::size_t> counts;
    for (int r = 0; r < p.mask.height(); ++r) {
        for (int c = 0; c < p.mask.width(); ++c) {
            if (!p.mask.at(r, c)) continue;
            ++counts[CellIndex{(p.anchor.row + r) / grid.patch, (p.anchor.col + c) / grid.patch}];
        }
    }
    const double area = static_cast<double>(grid.patch) * grid.patch;
    std::vector<CellCoverage> out;
    out.reserve(counts.size());
    for (const auto& [cell, count] : counts) out.push_back(CellCoverage{cell, static_cast<double>(count) / area});
    return out;
}

std::vector<CellIndex> prototype_cells(const Prototype& p, const PatchGrid& grid, double coverage)
{
    std::vector<CellIndex> out;
    for (const auto& cc : prototype_coverage(p, grid)) {
        if (cc.fraction > coverage) out.push_back(cc.cell);
    }
    return out;
}

}  // namespace protochange
