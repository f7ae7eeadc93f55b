#include "fixtures.hpp"
#include "protochange/refinement.hpp"
#include "test_util.hpp"

using namespace protochange;

namespace {

SegmentMap stripes(int w, int h, int band_width)
{
    std::vector<std::uint32_t> ids(static_cast<std::size_t>(w) * h);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) ids[static_cast<std::size_t>(r) * w + c] = static_cast<std::uint32_t>(c / band_width + 1);
    return SegmentMap::from_ids(w, h, ids);
}

}  // namespace

TEST(SegmentMap, RelabelsInFirstAppearanceOrder)
{
    const std::vector<std::uint32_t> ids{9, 9, 0, 7, 7, 9, 0, 0};
    const SegmentMap m = SegmentMap::from_ids(4, 2, ids);
    EXPECT_EQ(m.segment_count(), 2u);
    const std::vector<std::uint32_t> expect{1, 1, 0, 2, 2, 1, 0, 0};
    EXPECT_TRUE(std::ranges::equal(m.labels(), expect));
    EXPECT_EQ(m.size(0), 3u);
    EXPECT_EQ(m.size(1), 3u);
    EXPECT_EQ(m.size(2), 2u);
    EXPECT_EQ(m.mask_of(2).count(), 2u);
    EXPECT_CODE(SegmentMap::from_ids(3, 2, ids), ErrorCode::ShapeMismatch);
}

TEST(SegmentMap, SixteenBitPngRoundTrip)
{
    const auto dir = fixtures::scratch_dir("segments_png");
    std::vector<std::uint16_t> raw(60 * 40);
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = static_cast<std::uint16_t>(i % 7 == 0 ? 0 : 300 + i);
    write_png_samples(dir / "seg.png", 60, 40, 1, 16, raw);
    const SegmentMap m = load_segments(dir / "seg.png", 60, 40);
    EXPECT_EQ(m.size(0), (raw.size() + 6) / 7);
    EXPECT_EQ(m.segment_count(), raw.size() - m.size(0));
    save_segments(m, dir / "again.png");
    const RawRaster back = read_raw(dir / "again.png");
    EXPECT_EQ(back.bit_depth, 16);
    EXPECT_EQ(back.channels, 1);
    EXPECT_EQ(load_segments(dir / "again.png"), m);
    EXPECT_CODE(load_segments(dir / "seg.png", 61, 40), ErrorCode::DimensionMismatch);
    save_image(RasterImage::filled(4, 4, 3, 0.5), dir / "rgb.png");
    EXPECT_CODE(load_segments(dir / "rgb.png"), ErrorCode::UnsupportedFormat);
}

TEST(SegmentMap, ResizeDropsVanishedSegments)
{
    std::vector<std::uint32_t> ids(40 * 40, 1);
    ids[0] = 2;
    const SegmentMap m = SegmentMap::from_ids(40, 40, ids);
    const SegmentMap small = resize_segments(m, 10, 10);
    EXPECT_EQ(small.width(), 10);
    EXPECT_LE(small.segment_count(), 2u);
    EXPECT_EQ(resize_segments(stripes(40, 40, 10), 80, 20).segment_count(), 4u);
}

TEST(BuiltinSegments, ConstantAndTwoTone)
{
    const SegmentMap flat = builtin_segments(RasterImage::filled(32, 32, 3, 0.4));
    EXPECT_EQ(flat.segment_count(), 1u);

    std::vector<double> px(64 * 32 * 3, 0.1);
    for (int r = 0; r < 32; ++r)
        for (int c = 32; c < 64; ++c)
            for (int b = 0; b < 3; ++b) px[(static_cast<std::size_t>(r) * 64 + c) * 3 + b] = 0.9;
    const SegmentMap two = builtin_segments(RasterImage(64, 32, 3, px));
    EXPECT_EQ(two.segment_count(), 2u);
    EXPECT_NE(two.at(0, 0), two.at(0, 63));
    EXPECT_EQ(two.at(31, 31), two.at(0, 0));
}

TEST(BuiltinSegments, CheckerboardAndSmallRegions)
{
    std::vector<double> px(64 * 64);
    for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c) px[static_cast<std::size_t>(r) * 64 + c] = ((r / 16 + c / 16) % 2) ? 0.9 : 0.1;
    const RasterImage board(64, 64, 1, px);
    EXPECT_EQ(builtin_segments(board).segment_count(), 16u);
    EXPECT_LT(builtin_segments(board, 8, 300).segment_count(), 16u);

    px.assign(64 * 64, 0.1);
    px[10 * 64 + 10] = 0.9;
    const SegmentMap speck = builtin_segments(RasterImage(64, 64, 1, px));
    EXPECT_EQ(speck.segment_count(), 1u);
    EXPECT_EQ(speck.size(0), 0u);
    EXPECT_CODE(builtin_segments(RasterImage::filled(4, 4, 1, 0.1), 0), ErrorCode::InvalidArgument);
}

TEST(Refine, KeepsWholeSegmentsAboveThreshold)
{
    const SegmentMap seg = stripes(40, 10, 10);
    ChangeMask coarse(40, 10);
    for (int r = 0; r < 10; ++r)
        for (int c = 0; c < 40; ++c) {
            if (c < 8) coarse.set(r, c, true);
            if (c >= 10 && c < 17) coarse.set(r, c, true);
            if (c == 39 && r < 2) coarse.set(r, c, true);
        }
    RefineStats stats;
    const ChangeMask out = refine(coarse, seg, 0.7, &stats);
    EXPECT_EQ(stats.segments_total, 4u);
    EXPECT_EQ(stats.segments_touching, 3u);
    EXPECT_EQ(stats.segments_retained, 1u);
    EXPECT_EQ(out.count(), 100u);
    for (int r = 0; r < 10; ++r) EXPECT_TRUE(out.at(r, 9));
    EXPECT_FALSE(out.at(0, 10));

    EXPECT_EQ(refine(coarse, seg, 0.0).count(), 300u);
    EXPECT_EQ(refine(coarse, seg, 1.0).count(), 0u);
    EXPECT_EQ(refine(coarse, seg, 1.5).count(), 0u);
    EXPECT_CODE(refine(ChangeMask(40, 9), seg), ErrorCode::DimensionMismatch);
}

TEST(Refine, FullCoverageAtThresholdJustBelowOne)
{
    const SegmentMap seg = stripes(20, 5, 10);
    ChangeMask coarse(20, 5);
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 10; ++c) coarse.set(r, c, true);
    EXPECT_EQ(refine(coarse, seg, 0.999).count(), 50u);
    const ChangeMask none(20, 5);
    EXPECT_EQ(refine(none, seg, 0.0).count(), 0u);
}

TEST(Refine, OutputIsUnionOfSegments)
{
    const fixtures::ChangeScene scene = fixtures::three_squares(5);
    const SegmentMap seg = builtin_segments(scene.pair.post());
    Rng rng(2);
    ChangeMask coarse(256, 256);
    for (int r = 0; r < 256; ++r)
        for (int c = 0; c < 256; ++c) coarse.set(r, c, rng.uniform() < 0.1 || scene.truth.at(r, c));
    const ChangeMask out = refine(coarse, seg, 0.7);
    std::vector<int> state(seg.segment_count() + 1, -1);
    for (int r = 0; r < 256; ++r)
        for (int c = 0; c < 256; ++c) {
            const auto id = seg.at(r, c);
            if (id == 0) {
                EXPECT_FALSE(out.at(r, c));
                continue;
            }
            if (state[id] < 0) state[id] = out.at(r, c);
            EXPECT_EQ(state[id], out.at(r, c) ? 1 : 0);
        }
    EXPECT_GE(out.count(), 3u * 28u * 28u);
}
