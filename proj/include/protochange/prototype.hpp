#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "protochange/features.hpp"
#include "protochange/raster.hpp"
#include "protochange/refinement.hpp"

namespace protochange {

enum class PrototypeSource { Pre, Post, External };

std::string_view to_string(PrototypeSource source) noexcept;

/// Top-left corner of the prototype chip in scene pixel coordinates.
struct Anchor {
    int row = 0;
    int col = 0;
    auto operator<=>(const Anchor&) const = default;
};

struct CellIndex {
    int row = 0;
    int col = 0;
    auto operator<=>(const CellIndex&) const = default;
};

/// Single-sample chip of the target of interest. `mask` has the chip's
/// dimensions and marks the target pixels.
struct Prototype {
    RasterImage chip;
    BinaryMask mask;
    Anchor anchor;
    PrototypeSource source = PrototypeSource::External;
};

/// `mask` is laid over `img` with its top-left at `offset`; the prototype is
/// the bounding box of the set pixels. Throws EmptyMask / OutOfBounds.
Prototype select_prototype_manual(const RasterImage& img, const BinaryMask& mask, Anchor offset = {},
                                  PrototypeSource source = PrototypeSource::Pre);

/// Chip from outside the scene. Without an explicit anchor the chip is
/// centred in a scene of the given size. Throws EmptyMask, ShapeMismatch
/// (mask vs chip), or OutOfBounds.
Prototype external_prototype(RasterImage chip, BinaryMask mask, int scene_width, int scene_height,
                             std::optional<Anchor> anchor = std::nullopt);

struct RandomSelection {
    Prototype prototype;
    std::uint32_t segment_id = 0;
};

/// Uniform draw over segment ids 1..M from a generator seeded with `seed`.
/// Throws NoSegments when the map holds no positive id.
RandomSelection select_prototype_random(const SegmentMap& segments, const RasterImage& source_img,
                                        std::uint64_t seed, PrototypeSource source = PrototypeSource::Pre);

struct SynthesizedPair {
    RasterImage synth_pre;
    RasterImage synth_post;
};

/// Composites the prototype's masked pixels into both epochs at its anchor;
/// all other pixels are copied unchanged.
SynthesizedPair synthesize_pair(const ImagePair& pair, const Prototype& p);

struct CellCoverage {
    CellIndex cell;
    double fraction = 0.0;  // covered area / cell area
};

/// Every grid cell touched by the prototype footprint, in row-major order.
std::vector<CellCoverage> prototype_coverage(const Prototype& p, const PatchGrid& grid);

/// Cells whose footprint coverage is strictly greater than `coverage`.
std::vector<CellIndex> prototype_cells(const Prototype& p, const PatchGrid& grid, double coverage = 0.5);

}  // namespace protochange
