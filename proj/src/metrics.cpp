#include "protochange/metrics.hpp"

#include <algorithm>
#include <cstdio>

#include "protochange/error.hpp"

namespace protochange {

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) noexcept
{
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
}

ConfusionMatrix confusion(const ChangeMask& pred, const ChangeMask& gt)
{
    if (!pred.same_shape(gt)) {
        throw Error(ErrorCode::DimensionMismatch,
                    "prediction " + std::to_string(pred.width()) + "x" + std::to_string(pred.height()) +
                        " vs ground truth " + std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
    }
    ConfusionMatrix cm;
    const auto p = pred.values();
    const auto g = gt.values();
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i]) {
            g[i] ? ++cm.tp : ++cm.fp;
        } else {
            g[i] ? ++cm.fn : ++cm.tn;
        }
    }
    return cm;
}

namespace {

double ratio(double num, double den) noexcept
{
    return den == 0.0 ? 0.0 : num / den;
}

struct Scores {
    double precision, recall, f1, iou;
};

Scores one_class(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) noexcept
{
    const double p = ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
    const double r = ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
    return Scores{p, r, ratio(2.0 * p * r, p + r), ratio(static_cast<double>(tp), static_cast<double>(tp + fp + fn))};
}

}  // namespace

ClassMetrics class_metrics(const ConfusionMatrix& cm)
{
    if (cm.total() == 0) throw Error(ErrorCode::EmptyMatrix, "confusion matrix has no pixels");
    const Scores changed = one_class(cm.tp, cm.fp, cm.fn);
    const Scores unchanged = one_class(cm.tn, cm.fn, cm.fp);
    ClassMetrics m;
    m.precision0 = unchanged.precision;
    m.recall0 = unchanged.recall;
    m.f1_0 = unchanged.f1;
    m.iou0 = unchanged.iou;
    m.precision1 = changed.precision;
    m.recall1 = changed.recall;
    m.f1_1 = changed.f1;
    m.iou1 = changed.iou;
    m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    return m;
}

ConfusionMatrix pooled(std::span<const ConfusionMatrix> samples)
{
    if (samples.empty()) throw Error(ErrorCode::EmptyDataset, "no samples to aggregate");
    ConfusionMatrix sum;
    for (const auto& cm : samples) sum += cm;
    return sum;
}

ClassMetrics aggregate(std::span<const ConfusionMatrix> samples)
{
    return class_metrics(pooled(samples));
}

nlohmann::json to_json(const ConfusionMatrix& cm)
{
    return {{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}};
}

nlohmann::json to_json(const ClassMetrics& m)
{
    return {{"precision", {m.precision0, m.precision1}},
            {"recall", {m.recall0, m.recall1}},
            {"f1", {m.f1_0, m.f1_1}},
            {"iou", {m.iou0, m.iou1}},
            {"acc", m.accuracy}};
}

std::string render_table(std::span<const TableRow> rows)
{
    auto pair = [](double a, double b) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.1f/%.1f", 100.0 * a, 100.0 * b);
        return std::string(buf);
    };
    auto single = [](double a) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * a);
        return std::string(buf);
    };

    const std::vector<std::string> header = {"Method", "Pre. (0/1)", "Rec. (0/1)", "F1 (0/1)", "IoU (0/1)", "ACC"};
    std::vector<std::vector<std::string>> cells;
    cells.push_back(header);
    for (const auto& row : rows) {
        const auto& m = row.metrics;
        cells.push_back({row.method, pair(m.precision0, m.precision1), pair(m.recall0, m.recall1),
                         pair(m.f1_0, m.f1_1), pair(m.iou0, m.iou1), single(m.accuracy)});
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& line : cells)
        for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());

    std::string out;
    for (std::size_t li = 0; li < cells.size(); ++li) {
        const auto& line = cells[li];
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (i) out += " | ";
            out += line[i];
            if (i + 1 < line.size()) out.append(width[i] - line[i].size(), ' ');
        }
        out += '\n';
        if (li == 0) {
            for (std::size_t i = 0; i < width.size(); ++i) {
                if (i) out += "-+-";
                out.append(width[i], '-');
            }
            out += '\n';
        }
    }
    return out;
}

}  // namespace protochange
