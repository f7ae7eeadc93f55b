#include <map>

#include "fixtures.hpp"
#include "protochange/prototype.hpp"
#include "test_util.hpp"

using namespace protochange;

namespace {

BinaryMask rect_mask(int w, int h, int row, int col, int rh, int rw)
{
    BinaryMask m(w, h);
    for (int r = row; r < row + rh; ++r)
        for (int c = col; c < col + rw; ++c) m.set(r, c, true);
    return m;
}

Prototype chip_at(int row, int col, int size)
{
    Prototype p;
    p.chip = RasterImage::filled(size, size, 3, 0.7);
    p.mask = rect_mask(size, size, 0, 0, size, size);
    p.anchor = {row, col};
    return p;
}

}  // namespace

TEST(ManualPrototype, BoundingBoxOfMask)
{
    const fixtures::ChangeScene scene = fixtures::three_squares();
    BinaryMask m = rect_mask(256, 256, 10, 5, 20, 30);
    m.set(15, 10, false);
    const Prototype p = select_prototype_manual(scene.pair.pre(), m);
    EXPECT_EQ(p.chip.height(), 20);
    EXPECT_EQ(p.chip.width(), 30);
    EXPECT_EQ(p.anchor, (Anchor{10, 5}));
    EXPECT_FALSE(p.mask.at(5, 5));
    EXPECT_EQ(p.mask.count(), 599u);
    EXPECT_EQ(p.chip.at(0, 0, 1), scene.pair.pre().at(10, 5, 1));
    EXPECT_EQ(p.source, PrototypeSource::Pre);
}

TEST(ManualPrototype, OffsetMask)
{
    const RasterImage img = RasterImage::filled(64, 64, 3, 0.2);
    const Prototype p = select_prototype_manual(img, rect_mask(10, 10, 2, 3, 4, 5), Anchor{20, 30});
    EXPECT_EQ(p.anchor, (Anchor{22, 33}));
    EXPECT_EQ(p.chip.width(), 5);
    EXPECT_CODE(select_prototype_manual(img, rect_mask(10, 10, 2, 3, 4, 5), Anchor{60, 0}), ErrorCode::OutOfBounds);
}

TEST(ManualPrototype, Errors)
{
    const RasterImage img = RasterImage::filled(32, 32, 3, 0.2);
    EXPECT_CODE(select_prototype_manual(img, BinaryMask(32, 32)), ErrorCode::EmptyMask);
    EXPECT_CODE(select_prototype_manual(img, rect_mask(40, 32, 0, 0, 2, 2)), ErrorCode::OutOfBounds);
}

TEST(ExternalPrototype, CentredByDefault)
{
    const Prototype p = external_prototype(RasterImage::filled(10, 6, 3, 0.5), rect_mask(10, 6, 0, 0, 6, 10), 100, 60);
    EXPECT_EQ(p.anchor, (Anchor{27, 45}));
    EXPECT_EQ(p.source, PrototypeSource::External);
    const Prototype q =
        external_prototype(RasterImage::filled(10, 6, 3, 0.5), rect_mask(10, 6, 0, 0, 6, 10), 100, 60, Anchor{1, 2});
    EXPECT_EQ(q.anchor, (Anchor{1, 2}));
}

TEST(ExternalPrototype, Errors)
{
    const RasterImage chip = RasterImage::filled(10, 10, 3, 0.5);
    EXPECT_CODE(external_prototype(chip, BinaryMask(10, 10), 50, 50), ErrorCode::EmptyMask);
    EXPECT_CODE(external_prototype(chip, rect_mask(9, 10, 0, 0, 2, 2), 50, 50), ErrorCode::ShapeMismatch);
    EXPECT_CODE(external_prototype(chip, rect_mask(10, 10, 0, 0, 2, 2), 8, 8), ErrorCode::OutOfBounds);
    EXPECT_CODE(external_prototype(chip, rect_mask(10, 10, 0, 0, 2, 2), 50, 50, Anchor{45, 0}), ErrorCode::OutOfBounds);
}

TEST(Synthesize, SelfCompositeIsIdentity)
{
    const fixtures::ChangeScene scene = fixtures::three_squares();
    const BinaryMask m = fixtures::square_mask(256, 256, scene.squares[1]);
    const Prototype p = select_prototype_manual(scene.pair.post(), m, {}, PrototypeSource::Post);
    const SynthesizedPair s = synthesize_pair(scene.pair, p);
    EXPECT_EQ(s.synth_post, scene.pair.post());
    EXPECT_NE(s.synth_pre, scene.pair.pre());
}

TEST(Synthesize, ChangesOnlyFootprint)
{
    const fixtures::ChangeScene scene = fixtures::three_squares(3);
    Prototype p = chip_at(100, 20, 16);
    for (int r = 0; r < 16; ++r) p.mask.set(r, r, false);
    const SynthesizedPair s = synthesize_pair(scene.pair, p);
    for (int r = 0; r < 256; ++r)
        for (int c = 0; c < 256; ++c) {
            const bool inside = r >= 100 && r < 116 && c >= 20 && c < 36 && p.mask.at(r - 100, c - 20);
            for (int b = 0; b < 3; ++b) {
                if (inside) {
                    ASSERT_EQ(s.synth_pre.at(r, c, b), 0.7);
                    ASSERT_EQ(s.synth_post.at(r, c, b), 0.7);
                } else {
                    ASSERT_EQ(s.synth_pre.at(r, c, b), scene.pair.pre().at(r, c, b));
                    ASSERT_EQ(s.synth_post.at(r, c, b), scene.pair.post().at(r, c, b));
                }
            }
        }
}

TEST(Synthesize, BandMismatchAndBounds)
{
    const fixtures::ChangeScene scene = fixtures::inserted_squares(56, 56, {}, 1);
    Prototype p = chip_at(0, 0, 8);
    p.chip = RasterImage::filled(8, 8, 1, 0.5);
    EXPECT_CODE(synthesize_pair(scene.pair, p), ErrorCode::ShapeMismatch);
    EXPECT_CODE(synthesize_pair(scene.pair, chip_at(50, 0, 8)), ErrorCode::OutOfBounds);
}

TEST(RandomPrototype, UniformOverSegments)
{
    std::vector<std::uint32_t> ids(50 * 10);
    for (int r = 0; r < 10; ++r)
        for (int c = 0; c < 50; ++c) ids[static_cast<std::size_t>(r) * 50 + c] = static_cast<std::uint32_t>(c / 10 + 1);
    const SegmentMap seg = SegmentMap::from_ids(50, 10, ids);
    const RasterImage img = RasterImage::filled(50, 10, 3, 0.5);
    std::map<std::uint32_t, int> hits;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) ++hits[select_prototype_random(seg, img, seed).segment_id];
    ASSERT_EQ(hits.size(), 5u);
    for (const auto& [id, n] : hits) {
        EXPECT_GE(n, 1800) << id;
        EXPECT_LE(n, 2200) << id;
    }
}

TEST(RandomPrototype, ReproducibleAndShaped)
{
    const fixtures::ChangeScene scene = fixtures::three_squares();
    const SegmentMap seg = builtin_segments(scene.pair.post());
    const RandomSelection a = select_prototype_random(seg, scene.pair.post(), 42, PrototypeSource::Post);
    const RandomSelection b = select_prototype_random(seg, scene.pair.post(), 42, PrototypeSource::Post);
    EXPECT_EQ(a.segment_id, b.segment_id);
    EXPECT_EQ(a.prototype.anchor, b.prototype.anchor);
    EXPECT_EQ(a.prototype.mask.count(), seg.size(a.segment_id));
    EXPECT_EQ(a.prototype.source, PrototypeSource::Post);
}

TEST(RandomPrototype, Errors)
{
    const SegmentMap none = SegmentMap::from_ids(4, 4, std::vector<std::uint32_t>(16, 0));
    EXPECT_CODE(select_prototype_random(none, RasterImage::filled(4, 4, 3, 0.1), 0), ErrorCode::NoSegments);
    const SegmentMap one = SegmentMap::from_ids(4, 4, std::vector<std::uint32_t>(16, 3));
    EXPECT_CODE(select_prototype_random(one, RasterImage::filled(5, 4, 3, 0.1), 0), ErrorCode::DimensionMismatch);
}

TEST(PrototypeCells, AlignedSquares)
{
    const PatchGrid grid = patch_grid(56, 56);
    const auto one = prototype_cells(chip_at(14, 14, 14), grid);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0], (CellIndex{1, 1}));
    const auto four = prototype_cells(chip_at(14, 14, 28), grid);
    const std::vector<CellIndex> expect{{1, 1}, {1, 2}, {2, 1}, {2, 2}};
    EXPECT_EQ(four, expect);
}

TEST(PrototypeCells, PartialCoverageThreshold)
{
    const PatchGrid grid = patch_grid(56, 56);
    Prototype p = chip_at(14, 14, 14);
    p.chip = RasterImage::filled(14 + 6, 14, 3, 0.7);
    p.mask = rect_mask(20, 14, 0, 0, 14, 20);
    const auto cov = prototype_coverage(p, grid);
    ASSERT_EQ(cov.size(), 2u);
    EXPECT_DOUBLE_EQ(cov[0].fraction, 1.0);
    EXPECT_DOUBLE_EQ(cov[1].fraction, 84.0 / 196.0);
    EXPECT_EQ(prototype_cells(p, grid).size(), 1u);
    EXPECT_EQ(prototype_cells(p, grid, 0.4).size(), 2u);
    EXPECT_TRUE(prototype_cells(chip_at(0, 0, 7), grid).empty());
    EXPECT_EQ(prototype_cells(chip_at(0, 0, 7), grid, 0.2).size(), 1u);
}

TEST(PrototypeCells, MonotoneInCoverage)
{
    const PatchGrid grid = patch_grid(112, 112);
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const int size = 5 + static_cast<int>(rng.below(40));
        Prototype p = chip_at(static_cast<int>(rng.below(112 - size)), static_cast<int>(rng.below(112 - size)), size);
        for (int r = 0; r < size; ++r)
            for (int c = 0; c < size; ++c) p.mask.set(r, c, rng.uniform() < 0.7);
        std::size_t prev = prototype_cells(p, grid, 0.0).size();
        for (double t = 0.1; t < 1.0; t += 0.1) {
            const std::size_t n = prototype_cells(p, grid, t).size();
            EXPECT_LE(n, prev);
            prev = n;
        }
    }
}
