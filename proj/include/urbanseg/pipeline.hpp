#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "urbanseg/features.hpp"
#include "urbanseg/metrics.hpp"
#include "urbanseg/model.hpp"
#include "urbanseg/point_cloud.hpp"
#include "urbanseg/prediction_set.hpp"
#include "urbanseg/pseudolabel.hpp"
#include "urbanseg/taxonomy.hpp"

namespace urbanseg {

enum class Strategy : std::uint8_t { Fixed = 0, Adaptive = 1 };
const char* to_string(Strategy s) noexcept;
Strategy parse_strategy(const std::string& text);

/// Where the iteration-1 train predictions come from. Exactly one of the
/// three sources is set.
struct BootstrapConfig {
  std::optional<std::filesystem::path> predictions;  // imported .pred file
  std::optional<std::filesystem::path> model;        // baseline checkpoint
  std::optional<std::filesystem::path> source;       // labeled LAS to train on
  FeatureSet source_features{FeatureSet::Base::Basic, false};
  TrainingParams source_training{};
};

/// Self-training run description; see docs/formats.md for the JSON schema.
struct PipelineConfig {
  Strategy strategy = Strategy::Adaptive;
  int iterations = 3;
  std::map<ClassId, double> initial_overrides{{ClassId::Soil, 0.1}, {ClassId::Water, 0.9}};
  /// Adaptive only: extra overrides applied after recomputation at the
  /// given iteration (keys 2..iterations).
  std::map<int, std::map<ClassId, double>> iteration_overrides;
  FeatureSet features{};
  std::uint64_t seed = 0;
  double block_area = 25000.0;
  std::filesystem::path train, val, test;
  std::optional<std::filesystem::path> label_mapping;  // classification bytes -> taxonomy
  BootstrapConfig bootstrap;
  TrainingParams training{};
  std::optional<std::string> run_id;

  /// Throws Validation for iterations < 1, bad overrides, or a bootstrap
  /// section that does not name exactly one source.
  void validate() const;

  nlohmann::json to_json() const;
  /// Relative paths are resolved against `base_dir`.
  static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  /// SHA-256 of the canonical JSON form.
  std::string hash() const;
};

PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct IterationRecord {
  int iteration = 0;
  std::string source_predictions_id;  // predictions the table and filter used
  std::string table_id;
  std::string table_path;
  std::array<std::optional<double>, kNumSemanticClasses> tau{};
  std::array<std::size_t, kNumSemanticClasses> pseudo_counts{};
  std::size_t pseudo_total = 0;
  std::vector<ClassId> vanished;
  std::string pseudolabel_path;
  std::string sidecar_path;
  std::uint64_t seed = 0;
  std::string checkpoint_id;
  std::string checkpoint_path;
  int best_epoch = 0;
  std::string predictions_id;  // train predictions produced by this model
  std::string predictions_path;
  std::optional<MetricsReport> val;
  std::optional<MetricsReport> test;

  nlohmann::json to_json() const;
  static IterationRecord from_json(const nlohmann::json& j);
};

struct BootstrapRecord {
  std::string source;  // "predictions", "model" or "trained"
  std::string predictions_id;
  std::string predictions_path;
  std::optional<std::string> checkpoint_id;
  std::optional<std::string> checkpoint_path;
  std::optional<MetricsReport> test;

  nlohmann::json to_json() const;
  static BootstrapRecord from_json(const nlohmann::json& j);
};

struct RunManifest {
  std::string run_id;
  std::string config_hash;
  std::string strategy;
  std::string classifier;
  std::string status;  // "running", "complete" or "halted"
  std::string diagnostic;
  std::optional<BootstrapRecord> bootstrap;
  std::vector<IterationRecord> iterations;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

void save_manifest(const RunManifest& m, const std::filesystem::path& path);
RunManifest load_manifest(const std::filesystem::path& path);

/// Scores an external prediction file against a labeled cloud. With a
/// mapping, the file's columns are the mapping's universe ids in ascending
/// order; probabilities are summed per target class, mass mapped to
/// Unassigned is dropped, and the argmax of the remainder is scored. The
/// report is written to `report_path` (JSON) only after scoring succeeds.
MetricsReport run_transfer_eval(const std::filesystem::path& pred_file, const PointCloud& gt_cloud,
                                const std::optional<LabelMapping>& mapping,
                                const std::optional<std::filesystem::path>& report_path = std::nullopt);

/// Collapses source-taxonomy probabilities into the six semantic classes
/// as described above.
PredictionSet aggregate_predictions(const PredictionSet& source, const LabelMapping& mapping);

/// In-memory inputs of a self-training run.
struct SelfTrainInputs {
  PointCloud train;  // labels, if any, are ignored
  PointCloud val;    // labeled
  PointCloud test;   // labeled
  PredictionSet initial;  // six-column predictions for `train`
  std::optional<BootstrapRecord> bootstrap;
};

/// Loads the clouds and produces the bootstrap predictions; a trained
/// bootstrap model is checkpointed into `run_dir`.
SelfTrainInputs prepare_selftrain(const PipelineConfig& config, const std::filesystem::path& run_dir);

/// run_root / run_id, where run_id defaults to "run-" + the first 12 hex
/// digits of the config hash.
std::filesystem::path run_directory(const PipelineConfig& config, const std::filesystem::path& run_root);

/// The iterative loop. Writes config.json, thresholds/, pseudolabels/,
/// checkpoints/, predictions/, reports/ and manifest.json under `run_dir`;
/// the manifest is rewritten after every iteration. Throws Degenerate when
/// an iteration keeps no pseudo-labels (after writing a halted manifest),
/// State when `run_dir` already holds a manifest.
RunManifest run_selftrain(const PipelineConfig& config, const SelfTrainInputs& inputs,
                          const Classifier& classifier, const std::filesystem::path& run_dir);

/// prepare_selftrain + run_selftrain under run_directory(config, run_root).
RunManifest run_selftrain(const PipelineConfig& config, const Classifier& classifier,
                          const std::filesystem::path& run_root);

/// Rows keyed by iteration ("0" for the bootstrap when it has a test
/// report) holding the test reports.
std::vector<ReportRow> run_report_rows(const RunManifest& manifest);

}  // namespace urbanseg
