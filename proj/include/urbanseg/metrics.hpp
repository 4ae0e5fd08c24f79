#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "urbanseg/taxonomy.hpp"

namespace urbanseg {

/// Rows = ground truth, columns = prediction, both over Soil..Water.
using ConfusionMatrix = std::array<std::array<std::uint64_t, kNumSemanticClasses>, kNumSemanticClasses>;

/// Throws Alignment on length mismatch and Validation when either side holds
/// Unassigned (ground truth must be masked beforehand).
ConfusionMatrix confusion(std::span<const ClassId> gt, std::span<const ClassId> pred);

using PerClass = std::array<std::optional<double>, kNumSemanticClasses>;

/// Classes with TP + FP + FN = 0 are excluded (nullopt) from the mean; a class
/// present in ground truth but never predicted scores 0. Throws
/// UndefinedMetric when every class is excluded.
struct IouScores {
  PerClass iou;
  double miou = 0.0;
};
IouScores iou_miou(const ConfusionMatrix& m);

/// Per-class 2TP / (2TP + FP + FN), macro-averaged under the IoU inclusion rule.
struct F1Scores {
  PerClass f1;
  double macro = 0.0;
};
F1Scores f1_scores(const ConfusionMatrix& m);

struct MetricsReport {
  ConfusionMatrix confusion{};
  PerClass iou{};
  PerClass f1{};
  double miou = 0.0;
  double macro_f1 = 0.0;
  std::uint64_t evaluated = 0;
  std::uint64_t excluded = 0;  // Unassigned ground truth
};

MetricsReport make_report(const ConfusionMatrix& m, std::uint64_t excluded = 0);

/// Drops Unassigned ground truth, then scores.
MetricsReport evaluate_labels(std::span<const ClassId> gt, std::span<const ClassId> pred);

nlohmann::json to_json(const MetricsReport& r);
MetricsReport report_from_json(const nlohmann::json& j);

struct ReportRow {
  std::string key;  // e.g. "1" for iteration 1
  MetricsReport report;
};

/// Columns: Soil, Terrain, Vegetation, Building, Street Elements, Water,
/// mIoU, F1. Text shows percentages with two decimals ("-" for excluded
/// classes); CSV holds fractions at full round-trip precision (empty field
/// for excluded classes).
std::string render_text(std::span<const ReportRow> rows, const std::string& key_header = "Iteration");
std::string render_csv(std::span<const ReportRow> rows, const std::string& key_header = "iteration");

struct CsvRow {
  std::string key;
  PerClass iou;
  double miou = 0.0;
  double f1 = 0.0;
};
std::vector<CsvRow> parse_csv(const std::string& text);

}  // namespace urbanseg
