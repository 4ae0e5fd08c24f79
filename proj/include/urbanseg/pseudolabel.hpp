#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "urbanseg/prediction_set.hpp"
#include "urbanseg/taxonomy.hpp"

namespace urbanseg {

struct ThresholdOverride {
  ClassId cls;
  std::optional<double> previous;
  double value;
};

/// Per-class confidence threshold. A class is Absent (nullopt) when no point
/// was predicted as it.
struct ThresholdTable {
  std::array<std::optional<double>, kNumSemanticClasses> tau{};
  int iteration = 1;
  std::vector<ThresholdOverride> overrides;

  std::optional<double> get(ClassId c) const { return tau[semantic_index(c)]; }

  nlohmann::json to_json() const;
  static ThresholdTable from_json(const nlohmann::json& j);
  /// Content hash of the canonical JSON serialization.
  std::string id() const;
};

void save_thresholds(const ThresholdTable& table, const std::filesystem::path& path);
ThresholdTable load_thresholds(const std::filesystem::path& path);

/// tau_c = sum over unique confidences u of u * n_{u,c} / sum_v n_{v,c}, for
/// points whose argmax is c. Also computed as the plain per-class mean and
/// cross-checked. Throws Argument for an empty set.
ThresholdTable compute_thresholds(const PredictionSet& preds, int iteration = 1);

/// The weighted unique-value form alone (exposed for tests).
std::array<std::optional<double>, kNumSemanticClasses> thresholds_unique_weighted(const PredictionSet& preds);
/// The plain per-class mean alone (pairwise summation in index order).
std::array<std::optional<double>, kNumSemanticClasses> thresholds_plain_mean(const PredictionSet& preds);

/// Replaces listed entries and records provenance. Throws Domain for an
/// Unassigned override, Validation for values outside [0,1].
ThresholdTable adjust_thresholds(const ThresholdTable& table, const std::map<ClassId, double>& overrides);

/// Parses "Soil=0.1,Water=0.9".
std::map<ClassId, double> parse_overrides(const std::string& text);

struct PseudoLabelSet {
  std::vector<std::size_t> indices;
  std::vector<ClassId> labels;
  std::vector<double> confidence;
  int iteration = 1;
  std::string table_id;

  std::size_t size() const { return indices.size(); }
  std::array<std::size_t, kNumSemanticClasses> class_counts() const;
};

/// Keeps point j iff confidence_j > tau[argmax_j] (strict); Absent classes
/// contribute nothing.
PseudoLabelSet filter_pseudolabels(const PredictionSet& preds, const ThresholdTable& table);

/// Classes that produced predictions but no pseudo-labels, e.g. because all
/// their confidences sit at or below the threshold.
std::vector<ClassId> vanished_classes(const PredictionSet& preds, const PseudoLabelSet& kept);

}  // namespace urbanseg
