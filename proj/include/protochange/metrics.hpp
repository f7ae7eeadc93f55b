#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "protochange/raster.hpp"

namespace protochange {

/// Pixel counts with "changed" as the positive class.
struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
    ConfusionMatrix& operator+=(const ConfusionMatrix& o) noexcept;
    bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(const ChangeMask& pred, const ChangeMask& gt);

/// The nine columns of the comparison table. Suffix 0 is the unchanged class
/// (tn plays the role of true positives), suffix 1 the changed class.
/// Any 0/0 ratio is reported as 0.
struct ClassMetrics {
    double precision0 = 0.0, recall0 = 0.0, f1_0 = 0.0, iou0 = 0.0;
    double precision1 = 0.0, recall1 = 0.0, f1_1 = 0.0, iou1 = 0.0;
    double accuracy = 0.0;

    bool operator==(const ClassMetrics&) const = default;
};

ClassMetrics class_metrics(const ConfusionMatrix& cm);

/// Micro aggregation: sum the matrices, then compute the ratios.
ClassMetrics aggregate(std::span<const ConfusionMatrix> samples);
ConfusionMatrix pooled(std::span<const ConfusionMatrix> samples);

nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const ClassMetrics& m);

struct TableRow {
    std::string method;
    ClassMetrics metrics;
};

/// Aligned text table: Method | Pre. (0/1) | Rec. (0/1) | F1 (0/1) | IoU (0/1) | ACC,
/// values in percent with one decimal.
std::string render_table(std::span<const TableRow> rows);

}  // namespace protochange
