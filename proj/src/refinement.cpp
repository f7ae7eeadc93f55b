#include "protochange/refinement.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "protochange/error.hpp"
#include "protochange/raster_io.hpp"

namespace protochange {

SegmentMap SegmentMap::from_ids(int width, int height, std::span<const std::uint32_t> ids)
{
    if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "segment map dimensions must be positive");
    if (ids.size() != static_cast<std::size_t>(width) * height)
        throw Error(ErrorCode::ShapeMismatch, "segment id buffer size mismatch");

    SegmentMap map;
    map.width_ = width;
    map.height_ = height;
    map.labels_.resize(ids.size());
    std::unordered_map<std::uint32_t, std::uint32_t> remap;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const std::uint32_t id = ids[i];
        if (id == 0) {
            map.labels_[i] = 0;
            ++map.sizes_[0];
            continue;
        }
        auto [it, inserted] = remap.try_emplace(id, static_cast<std::uint32_t>(map.sizes_.size()));
        if (inserted) map.sizes_.push_back(0);
        map.labels_[i] = it->second;
        ++map.sizes_[it->second];
    }
    return map;
}

BinaryMask SegmentMap::mask_of(std::uint32_t id) const
{
    std::vector<std::uint8_t> values(labels_.size());
    for (std::size_t i = 0; i < labels_.size(); ++i) values[i] = labels_[i] == id ? 1 : 0;
    return BinaryMask(width_, height_, std::move(values));
}

SegmentMap load_segments(const std::filesystem::path& path, std::optional<int> expected_width,
                         std::optional<int> expected_height)
{
    const RawRaster raw = read_raw(path);
    if (raw.channels != 1)
        throw Error(ErrorCode::UnsupportedFormat, "segment map must be single-channel: " + path.string());
    if ((expected_width && *expected_width != raw.width) || (expected_height && *expected_height != raw.height)) {
        throw Error(ErrorCode::DimensionMismatch,
                    "segment map " + path.string() + " is " + std::to_string(raw.width) + "x" +
                        std::to_string(raw.height) + ", scene is " + std::to_string(expected_width.value_or(raw.width)) +
                        "x" + std::to_string(expected_height.value_or(raw.height)));
    }
    std::vector<std::uint32_t> ids(raw.samples.begin(), raw.samples.end());
    return SegmentMap::from_ids(raw.width, raw.height, ids);
}

void save_segments(const SegmentMap& segments, const std::filesystem::path& path)
{
    if (segments.segment_count() > 65535)
        throw Error(ErrorCode::InvalidArgument, "more than 65535 segments cannot be stored in 16 bits");
    const auto labels = segments.labels();
    std::vector<std::uint16_t> samples(labels.begin(), labels.end());
    write_png_samples(path, segments.width(), segments.height(), 1, 16, samples);
}

SegmentMap resize_segments(const SegmentMap& segments, int width, int height)
{
    if (width == segments.width() && height == segments.height()) return segments;
    std::vector<std::uint32_t> ids(static_cast<std::size_t>(width) * height);
    const double sx = static_cast<double>(segments.width()) / width;
    const double sy = static_cast<double>(segments.height()) / height;
    for (int r = 0; r < height; ++r) {
        const int sr = std::min(static_cast<int>((r + 0.5) * sy), segments.height() - 1);
        for (int c = 0; c < width; ++c) {
            const int sc = std::min(static_cast<int>((c + 0.5) * sx), segments.width() - 1);
            ids[static_cast<std::size_t>(r) * width + c] = segments.at(sr, sc);
        }
    }
    return SegmentMap::from_ids(width, height, ids);
}

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0u); }

    std::uint32_t find(std::uint32_t x)
    {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void attach(std::uint32_t child_root, std::uint32_t parent_root) { parent_[child_root] = parent_root; }

private:
    std::vector<std::uint32_t> parent_;
};

}  // namespace

SegmentMap builtin_segments(const RasterImage& img, int quant_levels, int min_size)
{
    if (img.empty()) throw Error(ErrorCode::InvalidArgument, "cannot segment an empty image");
    if (quant_levels < 1) throw Error(ErrorCode::InvalidArgument, "quant_levels must be >= 1");

    const int w = img.width();
    const int h = img.height();
    const std::size_t n = img.pixel_count();

    std::vector<std::uint64_t> code(n, 0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            std::uint64_t key = 0;
            for (int b = 0; b < img.bands(); ++b) {
                const int q = std::min(quant_levels - 1, static_cast<int>(img.at(r, c, b) * quant_levels));
                key = key * static_cast<std::uint64_t>(quant_levels) + static_cast<std::uint64_t>(q);
            }
            code[static_cast<std::size_t>(r) * w + c] = key;
        }
    }

    // Connected components with equal codes; ids by first appearance.
    constexpr std::uint32_t kUnset = 0xFFFFFFFFu;
    std::vector<std::uint32_t> comp(n, kUnset);
    std::vector<std::size_t> comp_size;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < n; ++start) {
        if (comp[start] != kUnset) continue;
        const auto id = static_cast<std::uint32_t>(comp_size.size());
        std::size_t count = 0;
        comp[start] = id;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            ++count;
            const int r = static_cast<int>(i / w);
            const int c = static_cast<int>(i % w);
            const std::size_t nb[4] = {r > 0 ? i - w : n, r + 1 < h ? i + w : n, c > 0 ? i - 1 : n,
                                       c + 1 < w ? i + 1 : n};
            for (std::size_t j : nb) {
                if (j == n || comp[j] != kUnset || code[j] != code[i]) continue;
                comp[j] = id;
                stack.push_back(j);
            }
        }
        comp_size.push_back(count);
    }

    // Fold small components into their largest neighbour until nothing changes.
    DisjointSets sets(comp_size.size());
    std::vector<std::size_t> size = comp_size;
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<std::vector<std::uint32_t>> adjacency(comp_size.size());
        bool any_small = false;
        for (std::uint32_t id = 0; id < comp_size.size(); ++id) {
            if (sets.find(id) == id && size[id] < static_cast<std::size_t>(min_size)) any_small = true;
        }
        if (!any_small) break;

        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                const std::size_t i = static_cast<std::size_t>(r) * w + c;
                const std::uint32_t a = sets.find(comp[i]);
                if (c + 1 < w) {
                    const std::uint32_t b = sets.find(comp[i + 1]);
                    if (a != b) {
                        adjacency[a].push_back(b);
                        adjacency[b].push_back(a);
                    }
                }
                if (r + 1 < h) {
                    const std::uint32_t b = sets.find(comp[i + w]);
                    if (a != b) {
                        adjacency[a].push_back(b);
                        adjacency[b].push_back(a);
                    }
                }
            }
        }

        std::vector<std::uint32_t> order;
        for (std::uint32_t id = 0; id < comp_size.size(); ++id) {
            if (sets.find(id) == id && size[id] < static_cast<std::size_t>(min_size) && !adjacency[id].empty())
                order.push_back(id);
        }
        std::stable_sort(order.begin(), order.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return size[a] < size[b]; });

        for (std::uint32_t id : order) {
            if (sets.find(id) != id || size[id] >= static_cast<std::size_t>(min_size)) continue;
            std::uint32_t best = id;
            for (std::uint32_t nb : adjacency[id]) {
                const std::uint32_t root = sets.find(nb);
                if (root == id) continue;
                if (best == id || size[root] > size[best] || (size[root] == size[best] && root < best)) best = root;
            }
            if (best == id) continue;
            sets.attach(id, best);
            size[best] += size[id];
            changed = true;
        }
    }

    // Background 0 is reserved, so shift roots by one before relabelling.
    std::vector<std::uint32_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = sets.find(comp[i]) + 1;
    return SegmentMap::from_ids(w, h, ids);
}

ChangeMask refine(const ChangeMask& coarse, const SegmentMap& segments, double threshold, RefineStats* stats)
{
    if (coarse.width() != segments.width() || coarse.height() != segments.height()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "coarse mask " + std::to_string(coarse.width()) + "x" + std::to_string(coarse.height()) +
                        " vs segments " + std::to_string(segments.width()) + "x" + std::to_string(segments.height()));
    }
    const std::uint32_t m = segments.segment_count();
    std::vector<std::size_t> inside(m + 1, 0);
    const auto labels = segments.labels();
    const auto values = coarse.values();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (values[i]) ++inside[labels[i]];
    }

    std::vector<std::uint8_t> keep(m + 1, 0);
    RefineStats local;
    local.segments_total = m;
    for (std::uint32_t id = 1; id <= m; ++id) {
        if (inside[id] > 0) ++local.segments_touching;
        const double overlap = static_cast<double>(inside[id]) / static_cast<double>(segments.size(id));
        if (overlap > threshold) {
            keep[id] = 1;
            ++local.segments_retained;
        }
    }
    if (stats) *stats = local;

    std::vector<std::uint8_t> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = keep[labels[i]];
    return ChangeMask(coarse.width(), coarse.height(), std::move(out));
}

}  // namespace protochange
