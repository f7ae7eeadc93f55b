#include <algorithm>
#include <atomic>
#include <memory>
#include <thread>

#include "protochange/error.hpp"
#include "protochange/pipeline.hpp"
#include "protochange/raster_io.hpp"

namespace protochange {

std::optional<EvalMethod> parse_eval_method(std::string_view name) noexcept
{
    for (EvalMethod m : all_eval_methods())
        if (to_string(m) == name) return m;
    return std::nullopt;
}

std::string_view to_string(EvalMethod method) noexcept
{
    switch (method) {
    case EvalMethod::Pucd: return "pucd";
    case EvalMethod::PucdNoSam: return "pucd-nosam";
    case EvalMethod::Cva: return "cva";
    case EvalMethod::PcaKmeans: return "pcakmeans";
    case EvalMethod::Irmad: return "irmad";
    case EvalMethod::Sfa: return "sfa";
    }
    return "pucd";
}

std::string_view display_name(EvalMethod method) noexcept
{
    switch (method) {
    case EvalMethod::Pucd: return "PUCD";
    case EvalMethod::PucdNoSam: return "PUCD w/o SAM";
    case EvalMethod::Cva: return "CVA";
    case EvalMethod::PcaKmeans: return "PCAKmeans";
    case EvalMethod::Irmad: return "IRMAD";
    case EvalMethod::Sfa: return "SFA";
    }
    return "PUCD";
}

std::vector<EvalMethod> all_eval_methods()
{
    return {EvalMethod::Cva,       EvalMethod::Irmad,     EvalMethod::PcaKmeans,
            EvalMethod::Sfa,       EvalMethod::PucdNoSam, EvalMethod::Pucd};
}

std::size_t EvalResult::failed() const noexcept
{
    return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [](const auto& s) { return !s.ok; }));
}

nlohmann::json EvalResult::to_json() const
{
    nlohmann::json out;
    out["method"] = protochange::to_string(method);
    out["aggregation"] = "micro";
    out["zero_division"] = 0;
    out["samples_total"] = samples.size();
    out["samples_failed"] = failed();
    out["pooled"] = pooled ? protochange::to_json(*pooled) : nlohmann::json();
    out["metrics"] = metrics ? protochange::to_json(*metrics) : nlohmann::json();
    nlohmann::json list = nlohmann::json::array();
    for (const auto& s : samples) {
        nlohmann::json item = {{"id", s.id}, {"ok", s.ok}};
        if (s.ok) {
            item["confusion"] = protochange::to_json(s.confusion);
            item["metrics"] = protochange::to_json(class_metrics(s.confusion));
            item["report"] = s.report;
        } else {
            item["error"] = s.error;
        }
        list.push_back(std::move(item));
    }
    out["samples"] = std::move(list);
    return out;
}

EvalResult evaluate(const std::filesystem::path& root, EvalMethod method, const PipelineConfig& config,
                    const EvalOptions& options)
{
    const std::vector<DatasetEntry> entries = index_dataset(root);
    for (const auto& e : entries)
        if (!e.label)
            throw Error(ErrorCode::EmptyDataset, "labels required for evaluation; no label for " + e.id);

    const bool needs_backend = method == EvalMethod::Pucd || method == EvalMethod::PucdNoSam;
    const int workers = std::clamp(options.workers, 1, static_cast<int>(std::max<std::size_t>(entries.size(), 1)));
    std::vector<std::unique_ptr<FeatureExtractor>> backends(static_cast<std::size_t>(workers));
    if (needs_backend)
        for (auto& b : backends) b = make_feature_extractor(config.backend);

    std::optional<std::filesystem::path> mask_dir;
    if (options.out_dir) {
        mask_dir = *options.out_dir / std::string(to_string(method));
        std::filesystem::create_directories(*mask_dir);
    }

    EvalResult result;
    result.method = method;
    result.samples.resize(entries.size());
    std::atomic<std::size_t> next{0};

    auto work = [&](FeatureExtractor* backend) {
        for (std::size_t i = next++; i < entries.size(); i = next++) {
            SampleOutcome& out = result.samples[i];
            out.id = entries[i].id;
            try {
                const DatasetSample sample = load_sample(entries[i]);
                const ChangeMask mask = run_method(method, sample.pair, config, backend, &out.report);
                if (mask_dir) save_mask(mask, *mask_dir / out.id, sample.pair.pre().geo());
                out.confusion = confusion(mask, *sample.label);
                out.ok = true;
            } catch (const std::exception& e) {
                out.ok = false;
                out.error = e.what();
                out.report = nlohmann::json();
            }
        }
    };

    if (workers == 1) {
        work(backends[0].get());
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, backends[static_cast<std::size_t>(w)].get());
        for (auto& t : pool) t.join();
    }

    std::vector<ConfusionMatrix> ok;
    for (const auto& s : result.samples)
        if (s.ok) ok.push_back(s.confusion);
    if (!ok.empty()) {
        result.pooled = pooled(ok);
        result.metrics = class_metrics(*result.pooled);
    }
    return result;
}

std::string render_eval_table(const std::vector<EvalResult>& results)
{
    std::vector<TableRow> rows;
    for (const auto& r : results)
        if (r.metrics) rows.push_back({std::string(display_name(r.method)), *r.metrics});
    return render_table(rows);
}

}  // namespace protochange
