#include "protochange/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <functional>
#include <system_error>

#include "protochange/error.hpp"

namespace protochange {

std::string_view to_string(PrototypeMode mode) noexcept
{
    switch (mode) {
    case PrototypeMode::Random: return "random";
    case PrototypeMode::Mask: return "mask";
    case PrototypeMode::External: return "external";
    }
    return "random";
}

std::string_view to_string(SegmentProviderKind kind) noexcept
{
    return kind == SegmentProviderKind::File ? "file" : "builtin";
}

std::string_view to_string(RefineSource source) noexcept
{
    switch (source) {
    case RefineSource::Pre: return "pre";
    case RefineSource::Post: return "post";
    case RefineSource::Both: return "both";
    }
    return "pre";
}

std::string_view to_string(BackendKind kind) noexcept
{
    return kind == BackendKind::PortableModel ? "onnx" : "stats";
}

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected)
{
    throw Error(ErrorCode::InvalidConfig,
                "invalid value '" + std::string(value) + "' for " + std::string(key) + " (expected " +
                    std::string(expected) + ")");
}

template <class T>
T parse_number(std::string_view key, std::string_view text)
{
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) bad_value(key, text, "a number");
    return value;
}

bool parse_bool(std::string_view key, std::string_view text)
{
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    bad_value(key, text, "true or false");
}

std::string number_text(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string number_text(long long v)
{
    return std::to_string(v);
}

std::optional<Anchor> parse_anchor(std::string_view key, std::string_view text)
{
    if (text.empty()) return std::nullopt;
    const auto comma = text.find(',');
    if (comma == std::string_view::npos) bad_value(key, text, "row,col");
    return Anchor{parse_number<int>(key, text.substr(0, comma)), parse_number<int>(key, text.substr(comma + 1))};
}

struct Field {
    const char* key;
    std::function<std::string(const PipelineConfig&)> get;
    std::function<void(PipelineConfig&, std::string_view key, std::string_view)> set;
};

template <class T>
Field int_field(const char* key, T PipelineConfig::*member)
{
    return {key, [member](const PipelineConfig& c) { return number_text(static_cast<long long>(c.*member)); },
            [member](PipelineConfig& c, std::string_view k, std::string_view v) { c.*member = parse_number<T>(k, v); }};
}

template <class Get, class Set>
Field field(const char* key, Get get, Set set)
{
    return {key, get, set};
}

const std::vector<Field>& fields()
{
    using C = PipelineConfig;
    static const std::vector<Field> table = {
        field(
            "backend.kind", [](const C& c) { return std::string(to_string(c.backend.kind)); },
            [](C& c, std::string_view k, std::string_view v) {
                if (v == "stats") c.backend.kind = BackendKind::PatchStatistics;
                else if (v == "onnx") c.backend.kind = BackendKind::PortableModel;
                else bad_value(k, v, "stats or onnx");
            }),
        field(
            "backend.dim", [](const C& c) { return number_text(static_cast<long long>(c.backend.dim)); },
            [](C& c, std::string_view k, std::string_view v) { c.backend.dim = parse_number<int>(k, v); }),
        field(
            "backend.model", [](const C& c) { return c.backend.model_path; },
            [](C& c, std::string_view, std::string_view v) { c.backend.model_path = std::string(v); }),
        field(
            "prototype.mode", [](const C& c) { return std::string(to_string(c.prototype.mode)); },
            [](C& c, std::string_view k, std::string_view v) {
                if (v == "random") c.prototype.mode = PrototypeMode::Random;
                else if (v == "mask") c.prototype.mode = PrototypeMode::Mask;
                else if (v == "external") c.prototype.mode = PrototypeMode::External;
                else bad_value(k, v, "random, mask or external");
            }),
        field(
            "prototype.source", [](const C& c) { return std::string(to_string(c.prototype.source)); },
            [](C& c, std::string_view k, std::string_view v) {
                if (v == "pre") c.prototype.source = PrototypeSource::Pre;
                else if (v == "post") c.prototype.source = PrototypeSource::Post;
                else bad_value(k, v, "pre or post");
            }),
        field(
            "prototype.mask", [](const C& c) { return c.prototype.mask_path; },
            [](C& c, std::string_view, std::string_view v) { c.prototype.mask_path = std::string(v); }),
        field(
            "prototype.chip", [](const C& c) { return c.prototype.chip_path; },
            [](C& c, std::string_view, std::string_view v) { c.prototype.chip_path = std::string(v); }),
        field(
            "prototype.chip_mask", [](const C& c) { return c.prototype.chip_mask_path; },
            [](C& c, std::string_view, std::string_view v) { c.prototype.chip_mask_path = std::string(v); }),
        field(
            "prototype.anchor",
            [](const C& c) {
                if (!c.prototype.anchor) return std::string();
                return std::to_string(c.prototype.anchor->row) + "," + std::to_string(c.prototype.anchor->col);
            },
            [](C& c, std::string_view k, std::string_view v) { c.prototype.anchor = parse_anchor(k, v); }),
        field(
            "prototype.coverage", [](const C& c) { return number_text(c.prototype.coverage); },
            [](C& c, std::string_view k, std::string_view v) { c.prototype.coverage = parse_number<double>(k, v); }),
        int_field("pca.components", &C::pca_components),
        int_field("kmeans.k", &C::k),
        int_field("kmeans.max_iter", &C::kmeans_max_iter),
        int_field("kmeans.n_init", &C::kmeans_n_init),
        field(
            "kmeans.tol", [](const C& c) { return number_text(c.kmeans_tol); },
            [](C& c, std::string_view k, std::string_view v) { c.kmeans_tol = parse_number<double>(k, v); }),
        field(
            "refine.enabled", [](const C& c) { return std::string(c.refine_enabled ? "true" : "false"); },
            [](C& c, std::string_view k, std::string_view v) { c.refine_enabled = parse_bool(k, v); }),
        field(
            "refine.threshold", [](const C& c) { return number_text(c.refine_threshold); },
            [](C& c, std::string_view k, std::string_view v) { c.refine_threshold = parse_number<double>(k, v); }),
        field(
            "refine.source", [](const C& c) { return std::string(to_string(c.refine_source)); },
            [](C& c, std::string_view k, std::string_view v) {
                if (v == "pre") c.refine_source = RefineSource::Pre;
                else if (v == "post") c.refine_source = RefineSource::Post;
                else if (v == "both") c.refine_source = RefineSource::Both;
                else bad_value(k, v, "pre, post or both");
            }),
        field(
            "refine.union_with_coarse", [](const C& c) { return std::string(c.union_with_coarse ? "true" : "false"); },
            [](C& c, std::string_view k, std::string_view v) { c.union_with_coarse = parse_bool(k, v); }),
        field(
            "segments.provider", [](const C& c) { return std::string(to_string(c.segments.kind)); },
            [](C& c, std::string_view k, std::string_view v) {
                if (v == "builtin") c.segments.kind = SegmentProviderKind::Builtin;
                else if (v == "file") c.segments.kind = SegmentProviderKind::File;
                else bad_value(k, v, "builtin or file");
            }),
        field(
            "segments.path", [](const C& c) { return c.segments.path; },
            [](C& c, std::string_view, std::string_view v) { c.segments.path = std::string(v); }),
        field(
            "segments.post_path", [](const C& c) { return c.segments.post_path; },
            [](C& c, std::string_view, std::string_view v) { c.segments.post_path = std::string(v); }),
        field(
            "segments.quant_levels",
            [](const C& c) { return number_text(static_cast<long long>(c.segments.quant_levels)); },
            [](C& c, std::string_view k, std::string_view v) { c.segments.quant_levels = parse_number<int>(k, v); }),
        field(
            "segments.min_size", [](const C& c) { return number_text(static_cast<long long>(c.segments.min_size)); },
            [](C& c, std::string_view k, std::string_view v) { c.segments.min_size = parse_number<int>(k, v); }),
        field(
            "run.seed", [](const C& c) { return std::to_string(c.seed); },
            [](C& c, std::string_view k, std::string_view v) { c.seed = parse_number<std::uint64_t>(k, v); }),
        field(
            "report.include_timings", [](const C& c) { return std::string(c.include_timings ? "true" : "false"); },
            [](C& c, std::string_view k, std::string_view v) { c.include_timings = parse_bool(k, v); }),
        field(
            "cva.bins", [](const C& c) { return number_text(static_cast<long long>(c.baselines.otsu_bins)); },
            [](C& c, std::string_view k, std::string_view v) { c.baselines.otsu_bins = parse_number<int>(k, v); }),
        field(
            "pcakmeans.block",
            [](const C& c) { return number_text(static_cast<long long>(c.baselines.pca_kmeans.block)); },
            [](C& c, std::string_view k, std::string_view v) {
                c.baselines.pca_kmeans.block = parse_number<int>(k, v);
            }),
        field(
            "pcakmeans.components",
            [](const C& c) { return number_text(static_cast<long long>(c.baselines.pca_kmeans.components)); },
            [](C& c, std::string_view k, std::string_view v) {
                c.baselines.pca_kmeans.components = parse_number<int>(k, v);
            }),
        field(
            "irmad.max_iter",
            [](const C& c) { return number_text(static_cast<long long>(c.baselines.irmad.max_iter)); },
            [](C& c, std::string_view k, std::string_view v) { c.baselines.irmad.max_iter = parse_number<int>(k, v); }),
        field(
            "irmad.eps", [](const C& c) { return number_text(c.baselines.irmad.eps); },
            [](C& c, std::string_view k, std::string_view v) { c.baselines.irmad.eps = parse_number<double>(k, v); }),
        field(
            "irmad.ridge", [](const C& c) { return number_text(c.baselines.irmad.ridge); },
            [](C& c, std::string_view k, std::string_view v) { c.baselines.irmad.ridge = parse_number<double>(k, v); }),
        field(
            "irmad.confidence", [](const C& c) { return number_text(c.baselines.irmad.confidence); },
            [](C& c, std::string_view k, std::string_view v) {
                c.baselines.irmad.confidence = parse_number<double>(k, v);
            }),
        field(
            "sfa.ridge", [](const C& c) { return number_text(c.baselines.sfa.ridge); },
            [](C& c, std::string_view k, std::string_view v) { c.baselines.sfa.ridge = parse_number<double>(k, v); }),
        field(
            "sfa.confidence", [](const C& c) { return number_text(c.baselines.sfa.confidence); },
            [](C& c, std::string_view k, std::string_view v) {
                c.baselines.sfa.confidence = parse_number<double>(k, v);
            }),
    };
    return table;
}

const Field* find_field(std::string_view key)
{
    for (const auto& f : fields())
        if (key == f.key) return &f;
    return nullptr;
}

}  // namespace

void apply_setting(PipelineConfig& config, std::string_view key, std::string_view value)
{
    const Field* f = find_field(key);
    if (!f) throw Error(ErrorCode::InvalidConfig, "unknown configuration key '" + std::string(key) + "'");
    f->set(config, key, value);
}

std::vector<std::pair<std::string, std::string>> config_entries(const PipelineConfig& config)
{
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& f : fields()) out.emplace_back(f.key, f.get(config));
    return out;
}

void apply_config_file(PipelineConfig& config, const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path))
        throw Error(ErrorCode::MissingFile, "config file not found: " + path.string());
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw Error(ErrorCode::InvalidConfig, e.what());
    }
    for (const auto& [section, body] : tree) {
        if (body.empty()) {
            apply_setting(config, section, body.data());
            continue;
        }
        for (const auto& [key, value] : body) apply_setting(config, section + "." + key, value.data());
    }
}

PipelineConfig load_config(const std::filesystem::path& path)
{
    PipelineConfig config;
    apply_config_file(config, path);
    return config;
}

nlohmann::json to_json(const PipelineConfig& config)
{
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [key, text] : config_entries(config)) {
        if (text == "true" || text == "false") {
            out[key] = text == "true";
            continue;
        }
        if (key != "prototype.anchor" && !text.empty()) {
            if (key == "run.seed") {
                out[key] = config.seed;
                continue;
            }
            const char* end = text.data() + text.size();
            long long i = 0;
            if (auto [p, ec] = std::from_chars(text.data(), end, i); ec == std::errc{} && p == end) {
                out[key] = i;
                continue;
            }
            double d = 0.0;
            if (auto [p, ec] = std::from_chars(text.data(), end, d); ec == std::errc{} && p == end) {
                out[key] = d;
                continue;
            }
        }
        out[key] = text;
    }
    return out;
}

PipelineConfig config_from_json(const nlohmann::json& snapshot)
{
    if (!snapshot.is_object()) throw Error(ErrorCode::InvalidConfig, "config snapshot must be a JSON object");
    PipelineConfig config;
    for (const auto& [key, value] : snapshot.items()) {
        if (value.is_string()) {
            apply_setting(config, key, value.get<std::string>());
        } else if (value.is_boolean()) {
            apply_setting(config, key, value.get<bool>() ? "true" : "false");
        } else if (value.is_number_unsigned()) {
            apply_setting(config, key, std::to_string(value.get<std::uint64_t>()));
        } else if (value.is_number_integer()) {
            apply_setting(config, key, std::to_string(value.get<long long>()));
        } else if (value.is_number_float()) {
            apply_setting(config, key, number_text(value.get<double>()));
        } else {
            throw Error(ErrorCode::InvalidConfig, "unsupported value type for '" + key + "'");
        }
    }
    return config;
}

}  // namespace protochange
