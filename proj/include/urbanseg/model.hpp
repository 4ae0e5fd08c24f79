#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "urbanseg/features.hpp"
#include "urbanseg/prediction_set.hpp"
#include "urbanseg/taxonomy.hpp"

namespace urbanseg {

enum class Optimizer : std::uint8_t { Sgd = 0, Adam = 1 };

struct TrainingParams {
  double learning_rate = 0.001;
  int epochs = 200;
  std::size_t max_points = 65536;  // per batch element
  std::size_t batch_size = 4;      // elements per gradient step
  bool class_weights = true;       // inverse-frequency weighting
  Optimizer optimizer = Optimizer::Adam;
  std::uint64_t seed = 0;
};

/// Held-out data for checkpoint selection. Unassigned rows must already be
/// removed.
struct ValidationData {
  const FeatureMatrix* features = nullptr;
  std::span<const ClassId> labels;
};

/// Multinomial logistic regression over the six semantic classes with
/// per-feature standardization folded into the model.
class BaselineModel {
 public:
  BaselineModel() = default;
  /// Zero weights (uniform predictions) with identity standardization.
  BaselineModel(FeatureSet set, int dimension);

  const FeatureSet& feature_set() const { return set_; }
  int dimension() const { return static_cast<int>(mean_.size()); }

  /// 6 x (dimension + 1); the last column is the bias.
  Eigen::MatrixXd& weights() { return weights_; }
  const Eigen::MatrixXd& weights() const { return weights_; }
  Eigen::VectorXd& feature_mean() { return mean_; }
  Eigen::VectorXd& feature_scale() { return scale_; }
  const Eigen::VectorXd& feature_mean() const { return mean_; }
  const Eigen::VectorXd& feature_scale() const { return scale_; }
  std::vector<double>& class_weight() { return class_weight_; }
  const std::vector<double>& class_weight() const { return class_weight_; }

  /// Standardized design matrix with a trailing column of ones.
  Eigen::MatrixXd design(const FeatureMatrix& features) const;
  Eigen::MatrixXd logits(const FeatureMatrix& features) const;

  /// Binary checkpoint, see docs/formats.md.
  void save(const std::filesystem::path& path) const;
  static BaselineModel load(const std::filesystem::path& path);

 private:
  FeatureSet set_;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd mean_, scale_;
  std::vector<double> class_weight_;
};

/// Row-wise softmax of a logit matrix.
PredictionSet softmax_rows(const Eigen::MatrixXd& logits);

/// Throws Shape when the feature width differs from the model.
PredictionSet predict(const BaselineModel& model, const FeatureMatrix& features);

/// Class-weighted mean cross-entropy over rows of a design matrix, and its
/// gradient with respect to the 6 x (D+1) weights.
struct LossGradient {
  double loss = 0.0;
  Eigen::MatrixXd gradient;
};
LossGradient loss_and_gradient(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& design,
                               std::span<const ClassId> labels, std::span<const double> class_weight);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_miou;
};

struct TrainingResult {
  BaselineModel model;
  int best_epoch = 0;
  std::vector<EpochRecord> history;
};

/// Mini-batch descent from zero weights. Every epoch is scored on `val` by
/// mIoU and the best epoch (earliest on ties) is returned; without `val`
/// the last epoch is returned. Zero epochs yield uniform predictions.
/// `blocks` groups training rows for batch sampling (empty: one block).
/// Throws Degenerate when fewer than two classes are present, Validation
/// when a label is Unassigned.
TrainingResult train_baseline(const FeatureMatrix& features, std::span<const ClassId> labels,
                              const FeatureSet& set, const TrainingParams& params,
                              const std::optional<ValidationData>& val = std::nullopt,
                              std::span<const std::vector<std::size_t>> blocks = {});

/// Pluggable classifier contract used by the self-training loop.
class TrainedModel {
 public:
  virtual ~TrainedModel() = default;
  virtual PredictionSet predict(const FeatureMatrix& features) const = 0;
  /// Persists the checkpoint; returns the bytes' SHA-256 prefix used as id.
  virtual std::string save(const std::filesystem::path& path) const = 0;
  virtual int best_epoch() const { return 0; }
};

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::string name() const = 0;
  /// Trains a fresh instance; no state carries over between calls.
  virtual std::unique_ptr<TrainedModel> train(const FeatureMatrix& features, std::span<const ClassId> labels,
                                              const FeatureSet& set, const std::optional<ValidationData>& val,
                                              std::uint64_t seed,
                                              std::span<const std::vector<std::size_t>> blocks) const = 0;
};

class BaselineClassifier final : public Classifier {
 public:
  explicit BaselineClassifier(TrainingParams params) : params_(params) {}
  std::string name() const override { return "baseline-logreg"; }
  std::unique_ptr<TrainedModel> train(const FeatureMatrix& features, std::span<const ClassId> labels,
                                      const FeatureSet& set, const std::optional<ValidationData>& val,
                                      std::uint64_t seed,
                                      std::span<const std::vector<std::size_t>> blocks) const override;

 private:
  TrainingParams params_;
};

class BaselineTrainedModel final : public TrainedModel {
 public:
  explicit BaselineTrainedModel(TrainingResult result) : result_(std::move(result)) {}
  PredictionSet predict(const FeatureMatrix& features) const override;
  std::string save(const std::filesystem::path& path) const override;
  int best_epoch() const override { return result_.best_epoch; }
  const TrainingResult& result() const { return result_; }

 private:
  TrainingResult result_;
};

}  // namespace urbanseg
