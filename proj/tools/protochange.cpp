#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "protochange/baselines.hpp"
#include "protochange/config.hpp"
#include "protochange/error.hpp"
#include "protochange/pipeline.hpp"
#include "protochange/raster_io.hpp"

namespace pc = protochange;

namespace {

struct CommonFlags {
    std::string config_path;
    std::vector<std::string> settings;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonFlags& flags)
{
    cmd->add_option("--config", flags.config_path, "INI config file (default: $PROTOCHANGE_CONFIG)");
    cmd->add_option("--set", flags.settings, "Override one config entry, section.key=value")->take_all();
    cmd->add_option("--seed", flags.seed, "Root seed for every random stage");
}

pc::PipelineConfig base_config(const CommonFlags& flags)
{
    pc::PipelineConfig config;
    std::string path = flags.config_path;
    if (path.empty())
        if (const char* env = std::getenv("PROTOCHANGE_CONFIG"); env && *env) path = env;
    if (!path.empty()) pc::apply_config_file(config, path);
    for (const auto& s : flags.settings) {
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw pc::Error(pc::ErrorCode::InvalidConfig, "--set expects section.key=value, got '" + s + "'");
        pc::apply_setting(config, s.substr(0, eq), s.substr(eq + 1));
    }
    if (flags.seed) config.seed = *flags.seed;
    return config;
}

void write_json(const nlohmann::json& j, const std::string& path)
{
    std::ofstream out(path);
    out << j.dump(2) << '\n';
    if (!out) throw pc::Error(pc::ErrorCode::InvalidArgument, "cannot write " + path);
}

std::vector<pc::EvalMethod> parse_methods(const std::string& text)
{
    if (text == "all") return pc::all_eval_methods();
    std::vector<pc::EvalMethod> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        const auto m = pc::parse_eval_method(item);
        if (!m) throw pc::Error(pc::ErrorCode::InvalidArgument, "unknown method '" + item + "'");
        out.push_back(*m);
    }
    if (out.empty()) throw pc::Error(pc::ErrorCode::InvalidArgument, "no method given");
    return out;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Prototype-guided unsupervised change detection"};
    app.require_subcommand(1);

    // detect
    CommonFlags detect_common;
    std::string pre, post, out, report_path, dump_dir, label_path;
    std::optional<std::string> prototype, prototype_mask, prototype_source, chip, chip_mask, anchor;
    std::optional<std::string> backend, model, segments, segments_post, refine_source;
    std::optional<int> dim;
    std::optional<double> threshold;
    bool no_refine = false, union_coarse = false, timings = false;
    auto* det = app.add_subcommand("detect", "Run the prototype-guided pipeline on one pair");
    add_common(det, detect_common);
    det->add_option("--pre", pre, "Pre-event image")->required();
    det->add_option("--post", post, "Post-event image")->required();
    det->add_option("--out", out, "Output mask (.png, or .tif for GeoTIFF)")->required();
    det->add_option("--report", report_path, "Run report (JSON)");
    det->add_option("--prototype", prototype, "random | mask | external");
    det->add_option("--prototype-mask", prototype_mask, "Scene mask selecting the prototype (implies mask)");
    det->add_option("--prototype-source", prototype_source, "pre | post");
    det->add_option("--chip", chip, "External prototype chip (implies external)");
    det->add_option("--chip-mask", chip_mask, "Mask over the external chip");
    det->add_option("--anchor", anchor, "row,col of the prototype in the scene");
    det->add_option("--backend", backend, "stats | onnx");
    det->add_option("--model", model, "ONNX patch embedder (implies onnx)");
    det->add_option("--dim", dim, "Feature dimension");
    det->add_option("--segments", segments, "builtin | segment id PNG");
    det->add_option("--segments-post", segments_post, "Segment id PNG for the post image");
    det->add_option("--refine-source", refine_source, "pre | post | both");
    det->add_option("--threshold", threshold, "Segment overlap threshold");
    det->add_flag("--no-refine", no_refine, "Output the coarse map");
    det->add_flag("--union-with-coarse", union_coarse, "Union refined segments with the coarse map");
    det->add_flag("--timings", timings, "Record per-stage timings in the report");
    det->add_option("--dump-intermediate", dump_dir, "Directory for projections, labels and coarse map");
    det->add_option("--label", label_path, "Ground-truth mask; adds metrics to the report");

    // baseline
    CommonFlags base_common;
    std::string b_method, b_pre, b_post, b_out, b_report;
    std::optional<int> bins, block, components, max_iter;
    std::optional<double> eps, ridge, confidence;
    auto* base = app.add_subcommand("baseline", "Run a classical change detector on one pair");
    add_common(base, base_common);
    base->add_option("--method", b_method, "cva | pcakmeans | irmad | sfa")->required();
    base->add_option("--pre", b_pre, "Pre-event image")->required();
    base->add_option("--post", b_post, "Post-event image")->required();
    base->add_option("--out", b_out, "Output mask")->required();
    base->add_option("--report", b_report, "Method report (JSON)");
    base->add_option("--bins", bins, "cva: Otsu histogram bins");
    base->add_option("--block", block, "pcakmeans: block size");
    base->add_option("--components", components, "pcakmeans: PCA components");
    base->add_option("--max-iter", max_iter, "irmad: iteration cap");
    base->add_option("--eps", eps, "irmad: convergence tolerance");
    base->add_option("--ridge", ridge, "irmad/sfa: covariance ridge");
    base->add_option("--confidence", confidence, "irmad/sfa: chi-square quantile");

    // eval
    CommonFlags eval_common;
    std::string root, methods = "pucd", out_dir, e_report;
    int workers = 1;
    std::optional<std::string> e_backend, e_model, e_segments;
    auto* ev = app.add_subcommand("eval", "Evaluate methods over a labelled A/B/label dataset");
    add_common(ev, eval_common);
    ev->add_option("--root", root, "Dataset root")->required();
    ev->add_option("--method", methods, "Comma-separated methods or 'all'");
    ev->add_option("--workers", workers, "Samples processed concurrently")->check(CLI::PositiveNumber);
    ev->add_option("--out-dir", out_dir, "Write predicted masks under DIR/<method>/");
    ev->add_option("--report", e_report, "Metrics report (JSON)");
    ev->add_option("--backend", e_backend, "stats | onnx");
    ev->add_option("--model", e_model, "ONNX patch embedder (implies onnx)");
    ev->add_option("--segments", e_segments, "builtin");

    CLI11_PARSE(app, argc, argv);

    try {
        if (det->parsed()) {
            pc::PipelineConfig config = base_config(detect_common);
            if (prototype_mask) {
                pc::apply_setting(config, "prototype.mode", "mask");
                pc::apply_setting(config, "prototype.mask", *prototype_mask);
            }
            if (chip) {
                pc::apply_setting(config, "prototype.mode", "external");
                pc::apply_setting(config, "prototype.chip", *chip);
            }
            if (prototype) pc::apply_setting(config, "prototype.mode", *prototype);
            if (prototype_source) pc::apply_setting(config, "prototype.source", *prototype_source);
            if (chip_mask) pc::apply_setting(config, "prototype.chip_mask", *chip_mask);
            if (anchor) pc::apply_setting(config, "prototype.anchor", *anchor);
            if (model) {
                pc::apply_setting(config, "backend.kind", "onnx");
                pc::apply_setting(config, "backend.model", *model);
            }
            if (backend) pc::apply_setting(config, "backend.kind", *backend);
            if (dim) config.backend.dim = *dim;
            if (segments) {
                if (*segments == "builtin") {
                    pc::apply_setting(config, "segments.provider", "builtin");
                } else {
                    pc::apply_setting(config, "segments.provider", "file");
                    pc::apply_setting(config, "segments.path", *segments);
                }
            }
            if (segments_post) pc::apply_setting(config, "segments.post_path", *segments_post);
            if (refine_source) pc::apply_setting(config, "refine.source", *refine_source);
            if (threshold) config.refine_threshold = *threshold;
            if (no_refine) config.refine_enabled = false;
            if (union_coarse) config.union_with_coarse = true;
            if (timings) config.include_timings = true;

            const pc::ImagePair pair = pc::load_pair(pre, post);
            pc::DetectOptions opts;
            if (!dump_dir.empty()) opts.dump_dir = dump_dir;
            if (!label_path.empty()) opts.label = pc::load_mask(label_path);
            const pc::DetectResult result = pc::detect(pair, config, opts);
            pc::save_mask(result.mask, out, pair.pre().geo());
            if (!report_path.empty()) write_json(result.report, report_path);
            std::cout << "changed pixels: " << result.mask.count() << " / " << result.mask.size() << '\n';
        } else if (base->parsed()) {
            pc::PipelineConfig config = base_config(base_common);
            const auto method = pc::parse_baseline(b_method);
            if (!method) throw pc::Error(pc::ErrorCode::InvalidArgument, "unknown baseline '" + b_method + "'");
            if (bins) config.baselines.otsu_bins = *bins;
            if (block) config.baselines.pca_kmeans.block = *block;
            if (components) config.baselines.pca_kmeans.components = *components;
            if (max_iter) config.baselines.irmad.max_iter = *max_iter;
            if (eps) config.baselines.irmad.eps = *eps;
            if (ridge) config.baselines.irmad.ridge = config.baselines.sfa.ridge = *ridge;
            if (confidence) config.baselines.irmad.confidence = config.baselines.sfa.confidence = *confidence;

            const pc::ImagePair pair = pc::load_pair(b_pre, b_post);
            const auto eval_method = pc::parse_eval_method(pc::to_string(*method));
            nlohmann::json report;
            const pc::ChangeMask mask = pc::run_method(*eval_method, pair, config, nullptr, &report);
            pc::save_mask(mask, b_out, pair.pre().geo());
            report["config"] = pc::to_json(config);
            if (!b_report.empty()) write_json(report, b_report);
            std::cout << "changed pixels: " << mask.count() << " / " << mask.size() << '\n';
        } else if (ev->parsed()) {
            pc::PipelineConfig config = base_config(eval_common);
            if (e_model) {
                pc::apply_setting(config, "backend.kind", "onnx");
                pc::apply_setting(config, "backend.model", *e_model);
            }
            if (e_backend) pc::apply_setting(config, "backend.kind", *e_backend);
            if (e_segments) pc::apply_setting(config, "segments.provider", *e_segments);

            pc::EvalOptions opts;
            opts.workers = workers;
            if (!out_dir.empty()) opts.out_dir = out_dir;
            std::vector<pc::EvalResult> results;
            nlohmann::json report = {{"config", pc::to_json(config)}, {"methods", nlohmann::json::array()}};
            for (pc::EvalMethod m : parse_methods(methods)) {
                results.push_back(pc::evaluate(root, m, config, opts));
                const auto& r = results.back();
                for (const auto& s : r.samples)
                    if (!s.ok) std::cerr << pc::to_string(m) << ": " << s.id << " failed: " << s.error << '\n';
                report["methods"].push_back(r.to_json());
            }
            report["table"] = pc::render_eval_table(results);
            std::cout << report["table"].get<std::string>();
            if (!e_report.empty()) write_json(report, e_report);
            for (const auto& r : results)
                if (r.failed()) return 3;
        }
    } catch (const pc::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
