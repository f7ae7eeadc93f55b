#include "protochange/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <type_traits>

#include "protochange/baselines.hpp"
#include "protochange/cva.hpp"
#include "protochange/error.hpp"
#include "protochange/prototype.hpp"
#include "protochange/random.hpp"
#include "protochange/raster_io.hpp"
#include "protochange/refinement.hpp"

namespace protochange {

namespace {

class StageClock {
public:
    template <class F>
    auto run(const char* name, F&& fn) -> std::invoke_result_t<F>
    {
        const auto start = std::chrono::steady_clock::now();
        try {
            auto out = fn();
            record(name, start);
            return out;
        } catch (const Error& e) {
            throw e.at_stage(name);
        }
    }

    nlohmann::json to_json() const { return timings_; }

private:
    void record(const char* name, std::chrono::steady_clock::time_point start)
    {
        const std::chrono::duration<double, std::milli> ms = std::chrono::steady_clock::now() - start;
        timings_[name] = timings_.value(name, 0.0) + ms.count();
    }

    nlohmann::json timings_ = nlohmann::json::object();
};

nlohmann::json anchor_json(const Anchor& a)
{
    return {{"row", a.row}, {"col", a.col}};
}

Anchor scale_anchor(const Anchor& a, double sy, double sx)
{
    return Anchor{static_cast<int>(std::lround(a.row * sy)), static_cast<int>(std::lround(a.col * sx))};
}

const RasterImage& pick(const ImagePair& pair, PrototypeSource source)
{
    return source == PrototypeSource::Post ? pair.post() : pair.pre();
}

SegmentMap segments_for(const RasterImage& img, PrototypeSource side, const SegmentProviderSpec& spec, int width,
                        int height)
{
    if (spec.kind == SegmentProviderKind::Builtin) return builtin_segments(img, spec.quant_levels, spec.min_size);
    std::string path = spec.path;
    if (side == PrototypeSource::Post && !spec.post_path.empty()) path = spec.post_path;
    if (path.empty()) throw Error(ErrorCode::InvalidConfig, "segments.provider = file needs segments.path");
    return load_segments(path, width, height);
}

struct ResolvedPrototype {
    Prototype prototype;
    nlohmann::json identity;
};

ResolvedPrototype resolve_prototype(const ImagePair& input, const ImagePair& working, const PipelineConfig& config)
{
    const PrototypeSpec& spec = config.prototype;
    const double sy = static_cast<double>(working.height()) / input.height();
    const double sx = static_cast<double>(working.width()) / input.width();
    nlohmann::json id = {{"mode", to_string(spec.mode)}};

    switch (spec.mode) {
    case PrototypeMode::Random: {
        const std::uint64_t seed = derive_seed(config.seed, "prototype");
        SegmentMap segments;
        if (config.segments.kind == SegmentProviderKind::Builtin) {
            segments = builtin_segments(pick(working, spec.source), config.segments.quant_levels,
                                        config.segments.min_size);
        } else {
            segments = resize_segments(segments_for(pick(input, spec.source), spec.source, config.segments,
                                                    input.width(), input.height()),
                                       working.width(), working.height());
        }
        RandomSelection sel = select_prototype_random(segments, pick(working, spec.source), seed, spec.source);
        id["seed"] = seed;
        id["segment_id"] = sel.segment_id;
        id["segment_count"] = segments.segment_count();
        return {std::move(sel.prototype), std::move(id)};
    }
    case PrototypeMode::Mask: {
        if (spec.mask_path.empty()) throw Error(ErrorCode::InvalidConfig, "prototype.mode = mask needs prototype.mask");
        const BinaryMask mask = load_mask(spec.mask_path);
        const Anchor offset = spec.anchor.value_or(Anchor{});
        // Validates emptiness and bounds at input resolution.
        const Prototype full = select_prototype_manual(pick(input, spec.source), mask, offset, spec.source);
        BinaryMask canvas(input.width(), input.height());
        for (int r = 0; r < full.mask.height(); ++r)
            for (int c = 0; c < full.mask.width(); ++c)
                if (full.mask.at(r, c)) canvas.set(full.anchor.row + r, full.anchor.col + c, true);
        const BinaryMask scaled = resize_nearest(canvas, working.width(), working.height());
        id["path"] = spec.mask_path;
        return {select_prototype_manual(pick(working, spec.source), scaled, Anchor{}, spec.source), std::move(id)};
    }
    case PrototypeMode::External: {
        if (spec.chip_path.empty() || spec.chip_mask_path.empty())
            throw Error(ErrorCode::InvalidConfig, "prototype.mode = external needs prototype.chip and prototype.chip_mask");
        RasterImage chip = load_image(spec.chip_path);
        BinaryMask chip_mask = load_mask(spec.chip_mask_path);
        if (chip_mask.width() != chip.width() || chip_mask.height() != chip.height())
            throw Error(ErrorCode::ShapeMismatch, "chip mask dimensions differ from the chip");
        const int w = std::max(1, static_cast<int>(std::lround(chip.width() * sx)));
        const int h = std::max(1, static_cast<int>(std::lround(chip.height() * sy)));
        if (w != chip.width() || h != chip.height()) {
            chip = resize_bilinear(chip, w, h);
            chip_mask = resize_nearest(chip_mask, w, h);
        }
        std::optional<Anchor> anchor;
        if (spec.anchor) anchor = scale_anchor(*spec.anchor, sy, sx);
        id["chip"] = spec.chip_path;
        id["chip_mask"] = spec.chip_mask_path;
        return {external_prototype(std::move(chip), std::move(chip_mask), working.width(), working.height(), anchor),
                std::move(id)};
    }
    }
    throw Error(ErrorCode::InvalidConfig, "unknown prototype mode");
}

bool all_zero(const DifferenceMap& d)
{
    for (double v : d.data())
        if (v != 0.0) return false;
    return true;
}

void write_dump(const std::filesystem::path& dir, const std::string& name, const void* data, std::size_t bytes,
                const nlohmann::json& header)
{
    std::ofstream bin(dir / (name + ".bin"), std::ios::binary);
    bin.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    std::ofstream(dir / (name + ".json")) << header.dump(2) << '\n';
    if (!bin) throw Error(ErrorCode::InvalidArgument, "cannot write intermediate " + (dir / name).string());
}

void dump_intermediates(const std::filesystem::path& dir, const Eigen::MatrixXd& projections,
                        const std::vector<int>& labels, const CoarseChangeMap& coarse)
{
    std::filesystem::create_directories(dir);
    std::vector<double> proj(static_cast<std::size_t>(projections.size()));
    for (Eigen::Index r = 0; r < projections.rows(); ++r)
        for (Eigen::Index c = 0; c < projections.cols(); ++c)
            proj[static_cast<std::size_t>(r * projections.cols() + c)] = projections(r, c);
    write_dump(dir, "projections", proj.data(), proj.size() * sizeof(double),
               {{"dtype", "float64"}, {"order", "row-major"}, {"shape", {projections.rows(), projections.cols()}}});
    std::vector<std::int32_t> lab(labels.begin(), labels.end());
    write_dump(dir, "labels", lab.data(), lab.size() * sizeof(std::int32_t),
               {{"dtype", "int32"}, {"shape", {coarse.grid.rows, coarse.grid.cols}}});
    write_dump(dir, "coarse", coarse.cells.data(), coarse.cells.size(),
               {{"dtype", "uint8"}, {"shape", {coarse.grid.rows, coarse.grid.cols}}});
}

nlohmann::json metrics_block(const ChangeMask& pred, const ChangeMask& label)
{
    const ConfusionMatrix cm = confusion(pred, label);
    return {{"confusion", to_json(cm)}, {"metrics", to_json(class_metrics(cm))}};
}

}  // namespace

DetectResult detect(const ImagePair& pair, const PipelineConfig& config, const DetectOptions& options)
{
    std::unique_ptr<FeatureExtractor> backend;
    try {
        backend = make_feature_extractor(config.backend);
    } catch (const Error& e) {
        throw e.at_stage("backend");
    }
    return detect(pair, config, *backend, options);
}

DetectResult detect(const ImagePair& pair, const PipelineConfig& config, FeatureExtractor& backend,
                    const DetectOptions& options)
{
    StageClock clock;
    nlohmann::json report;
    report["config"] = to_json(config);
    report["input"] = {{"width", pair.width()}, {"height", pair.height()}, {"bands", pair.bands()}};

    const ImagePair working = clock.run("resize", [&] {
        return ImagePair(resize_to_patch_multiple(pair.pre()), resize_to_patch_multiple(pair.post()));
    });
    const PatchGrid grid = clock.run("resize", [&] { return patch_grid(working.width(), working.height()); });
    report["working"] = {{"width", working.width()},
                         {"height", working.height()},
                         {"grid", {{"rows", grid.rows}, {"cols", grid.cols}}}};

    ResolvedPrototype proto = clock.run("prototype", [&] { return resolve_prototype(pair, working, config); });
    bool cells_fallback = false;
    const std::vector<CellIndex> cells = clock.run("prototype", [&] {
        std::vector<CellIndex> out = prototype_cells(proto.prototype, grid, config.prototype.coverage);
        if (!out.empty()) return out;
        // Footprint too small or too scattered: use the best-covered cells.
        const std::vector<CellCoverage> cov = prototype_coverage(proto.prototype, grid);
        double best = 0.0;
        for (const auto& c : cov) best = std::max(best, c.fraction);
        for (const auto& c : cov)
            if (best > 0.0 && c.fraction == best) out.push_back(c.cell);
        cells_fallback = true;
        return out;
    });
    proto.identity["cells_fallback"] = cells_fallback;
    proto.identity["source"] = to_string(proto.prototype.source);
    proto.identity["anchor"] = anchor_json(proto.prototype.anchor);
    proto.identity["chip"] = {{"width", proto.prototype.chip.width()}, {"height", proto.prototype.chip.height()}};
    proto.identity["mask_pixels"] = proto.prototype.mask.count();
    proto.identity["cells"] = cells.size();
    report["prototype"] = proto.identity;

    const SynthesizedPair synth = clock.run("synthesize", [&] { return synthesize_pair(working, proto.prototype); });

    const FeatureMap f1 = clock.run("extract", [&] { return extract_features(working.pre(), backend); });
    const FeatureMap f2 = clock.run("extract", [&] { return extract_features(working.post(), backend); });
    const FeatureMap g1 = clock.run("extract", [&] { return extract_features(synth.synth_pre, backend); });
    const FeatureMap g2 = clock.run("extract", [&] { return extract_features(synth.synth_post, backend); });
    report["features"] = {{"dim", f1.dim()}, {"backend", to_string(backend.kind())}};

    const DifferenceMap s21 = clock.run("difference", [&] { return feature_difference(f1, f2); });
    const DifferenceMap s11 = clock.run("difference", [&] { return feature_difference(f1, g1); });
    const DifferenceMap s22 = clock.run("difference", [&] { return feature_difference(f2, g2); });

    CoarseChangeMap coarse{grid, std::vector<std::uint8_t>(grid.cells(), 0)};
    if (all_zero(s21)) {
        report["short_circuit"] = "no temporal feature difference";
    } else {
        const ChangeVectors vectors = clock.run("vectors", [&] { return build_change_vectors(s21, s11, s22); });
        const PcaResult pca =
            clock.run("pca", [&] { return pca_fit_transform(vectors.data, config.pca_components); });
        report["pca"] = {{"components", config.pca_components},
                         {"explained_variance", std::vector<double>(pca.model.explained_variance.data(),
                                                                    pca.model.explained_variance.data() +
                                                                        pca.model.explained_variance.size())},
                         {"total_variance", pca.model.total_variance}};

        KMeansOptions km;
        km.k = config.k;
        km.seed = derive_seed(config.seed, "kmeans");
        km.max_iter = config.kmeans_max_iter;
        km.tol = config.kmeans_tol;
        km.n_init = config.kmeans_n_init;
        const KMeansResult clusters = clock.run("kmeans", [&] { return kmeans(pca.projections, km); });
        report["kmeans"] = {{"k", config.k},
                            {"seed", km.seed},
                            {"n_init", km.n_init},
                            {"best_run", clusters.best_run},
                            {"iterations", clusters.iterations},
                            {"converged", clusters.converged},
                            {"inertia", clusters.inertia}};

        const ClusterVote vote =
            clock.run("vote", [&] { return assign_change_cluster(clusters.labels, cells, s21, config.k); });
        report["vote"] = {{"cluster", vote.cluster},
                          {"tally", vote.tally},
                          {"mean_s21_norm", vote.mean_s21_norm},
                          {"tie_broken", vote.tie_broken}};

        coarse = clock.run("coarse", [&] { return coarse_map(clusters.labels, vote.cluster, grid); });
        if (options.dump_dir) dump_intermediates(*options.dump_dir, pca.projections, clusters.labels, coarse);
    }
    report["coarse"] = {{"changed_cells", coarse.changed_count()}, {"cells", coarse.cells.size()}};

    const ChangeMask coarse_px = clock.run("coarse", [&] {
        const ChangeMask block = upsample(coarse);
        if (block.width() == pair.width() && block.height() == pair.height()) return block;
        return resize_nearest(block, pair.width(), pair.height());
    });

    ChangeMask final_mask = coarse_px;
    if (config.refine_enabled) {
        final_mask = clock.run("refine", [&] {
            ChangeMask out(pair.width(), pair.height());
            nlohmann::json stats = nlohmann::json::object();
            auto apply = [&](PrototypeSource side) {
                const SegmentMap segments =
                    segments_for(pick(pair, side), side, config.segments, pair.width(), pair.height());
                RefineStats st;
                const ChangeMask kept = refine(coarse_px, segments, config.refine_threshold, &st);
                for (int r = 0; r < out.height(); ++r)
                    for (int c = 0; c < out.width(); ++c)
                        if (kept.at(r, c)) out.set(r, c, true);
                stats[std::string(to_string(side))] = {{"segments", st.segments_total},
                                                       {"touching", st.segments_touching},
                                                       {"retained", st.segments_retained}};
            };
            if (config.refine_source != RefineSource::Post) apply(PrototypeSource::Pre);
            if (config.refine_source != RefineSource::Pre) apply(PrototypeSource::Post);
            if (config.union_with_coarse)
                for (int r = 0; r < out.height(); ++r)
                    for (int c = 0; c < out.width(); ++c)
                        if (coarse_px.at(r, c)) out.set(r, c, true);
            report["refine"] = {{"threshold", config.refine_threshold},
                                {"source", to_string(config.refine_source)},
                                {"union_with_coarse", config.union_with_coarse},
                                {"segments", stats}};
            return out;
        });
    }
    report["changed_pixels"] = final_mask.count();

    if (options.label) {
        report["metrics"] = metrics_block(final_mask, *options.label);
        report["coarse_metrics"] = metrics_block(coarse_px, *options.label);
    }
    if (config.include_timings) report["timings_ms"] = clock.to_json();
    return DetectResult{std::move(final_mask), coarse_px, std::move(report)};
}

ChangeMask run_method(EvalMethod method, const ImagePair& pair, const PipelineConfig& config,
                      FeatureExtractor* backend, nlohmann::json* report)
{
    auto note = [&](nlohmann::json j) {
        if (report) *report = std::move(j);
    };
    switch (method) {
    case EvalMethod::Pucd:
    case EvalMethod::PucdNoSam: {
        PipelineConfig cfg = config;
        if (method == EvalMethod::PucdNoSam) cfg.refine_enabled = false;
        DetectResult r = backend ? detect(pair, cfg, *backend) : detect(pair, cfg);
        note(std::move(r.report));
        return std::move(r.mask);
    }
    case EvalMethod::Cva: {
        const CvaResult r = cva_baseline(pair, config.baselines.otsu_bins);
        nlohmann::json j = {{"method", "cva"}};
        if (r.otsu) j["threshold"] = r.otsu->threshold;
        note(std::move(j));
        return r.mask;
    }
    case EvalMethod::PcaKmeans: {
        PcaKmeansOptions opt = config.baselines.pca_kmeans;
        opt.seed = derive_seed(config.seed, "pcakmeans");
        note({{"method", "pcakmeans"}, {"seed", opt.seed}, {"block", opt.block}, {"components", opt.components}});
        return pca_kmeans_baseline(pair, opt);
    }
    case EvalMethod::Irmad: {
        const IrmadResult r = irmad_baseline(pair, config.baselines.irmad);
        note({{"method", "irmad"},
              {"iterations", r.iterations},
              {"converged", r.converged},
              {"final_delta", r.final_delta},
              {"threshold", r.threshold},
              {"rho", std::vector<double>(r.rho.data(), r.rho.data() + r.rho.size())}});
        return r.mask;
    }
    case EvalMethod::Sfa: {
        const SfaResult r = sfa_baseline(pair, config.baselines.sfa);
        note({{"method", "sfa"},
              {"threshold", r.threshold},
              {"eigenvalues",
               std::vector<double>(r.eigenvalues.data(), r.eigenvalues.data() + r.eigenvalues.size())}});
        return r.mask;
    }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown method");
}

}  // namespace protochange
