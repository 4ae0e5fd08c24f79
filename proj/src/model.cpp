#include "urbanseg/model.hpp"

#include <cmath>
#include <numeric>
#include <string_view>

#include "byte_io.hpp"
#include "urbanseg/errors.hpp"
#include "urbanseg/hashing.hpp"
#include "urbanseg/metrics.hpp"
#include "urbanseg/parallel.hpp"

namespace urbanseg {

namespace {

constexpr int K = kNumSemanticClasses;
constexpr std::string_view kModelMagic = "USEGMODL";
constexpr std::uint32_t kModelVersion = 1;
constexpr std::size_t kModelHeaderSize = 32;

std::vector<double> inverse_frequency(std::span<const ClassId> labels) {
  std::array<double, K> counts{};
  for (auto l : labels) counts[semantic_index(l)] += 1.0;
  int present = 0;
  for (double c : counts) present += c > 0.0;
  std::vector<double> w(K, 0.0);
  for (int c = 0; c < K; ++c) {
    if (counts[c] > 0.0) w[c] = static_cast<double>(labels.size()) / (present * counts[c]);
  }
  return w;
}

double validation_miou(const BaselineModel& model, const ValidationData& val) {
  const auto preds = predict(model, *val.features);
  const auto hard = preds.hard_labels();
  return evaluate_labels(val.labels, hard).miou;
}

}  // namespace

BaselineModel::BaselineModel(FeatureSet set, int dimension)
    : set_(set),
      weights_(Eigen::MatrixXd::Zero(K, dimension + 1)),
      mean_(Eigen::VectorXd::Zero(dimension)),
      scale_(Eigen::VectorXd::Ones(dimension)),
      class_weight_(K, 1.0) {}

Eigen::MatrixXd BaselineModel::design(const FeatureMatrix& features) const {
  if (features.cols() != dimension()) {
    fail(ErrorKind::Shape, "feature matrix has " + std::to_string(features.cols()) + " columns, model expects " +
                               std::to_string(dimension()));
  }
  Eigen::MatrixXd d(features.rows(), features.cols() + 1);
  d.leftCols(features.cols()) =
      (features.rowwise() - mean_.transpose()).array().rowwise() / scale_.transpose().array();
  d.col(features.cols()).setOnes();
  return d;
}

Eigen::MatrixXd BaselineModel::logits(const FeatureMatrix& features) const {
  return design(features) * weights_.transpose();
}

PredictionSet softmax_rows(const Eigen::MatrixXd& logits) {
  const auto n = static_cast<std::size_t>(logits.rows());
  const auto k = static_cast<std::size_t>(logits.cols());
  PredictionSet out(n, k);
  parallel_chunks(n, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double mx = logits.row(r).maxCoeff();
      double sum = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        const double e = std::exp(logits(r, static_cast<Eigen::Index>(c)) - mx);
        out.at(i, c) = e;
        sum += e;
      }
      for (std::size_t c = 0; c < k; ++c) out.at(i, c) /= sum;
    }
  });
  return out;
}

PredictionSet predict(const BaselineModel& model, const FeatureMatrix& features) {
  return softmax_rows(model.logits(features));
}

LossGradient loss_and_gradient(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& design,
                               std::span<const ClassId> labels, std::span<const double> class_weight) {
  if (static_cast<std::size_t>(design.rows()) != labels.size()) {
    fail(ErrorKind::Alignment, "design rows and labels differ in length");
  }
  const Eigen::MatrixXd logits = design * weights.transpose();
  Eigen::MatrixXd residual(logits.rows(), logits.cols());
  double loss = 0.0, total_weight = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp().matrix();
    const double sum = e.sum();
    const int y = semantic_index(labels[static_cast<std::size_t>(i)]);
    const double w = class_weight[static_cast<std::size_t>(y)];
    loss += w * (std::log(sum) + mx - logits(i, y));
    residual.row(i) = w * e / sum;
    residual(i, y) -= w;
    total_weight += w;
  }
  LossGradient out;
  if (total_weight <= 0.0) {
    out.gradient = Eigen::MatrixXd::Zero(weights.rows(), weights.cols());
    return out;
  }
  out.loss = loss / total_weight;
  out.gradient = residual.transpose() * design / total_weight;
  return out;
}

TrainingResult train_baseline(const FeatureMatrix& features, std::span<const ClassId> labels,
                              const FeatureSet& set, const TrainingParams& params,
                              const std::optional<ValidationData>& val,
                              std::span<const std::vector<std::size_t>> blocks) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    fail(ErrorKind::Alignment, "features and labels differ in length");
  }
  if (features.cols() != set.dimension()) {
    fail(ErrorKind::Shape, "feature matrix width does not match feature set " + set.to_string());
  }
  std::array<std::size_t, K> counts{};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == ClassId::Unassigned) {
      fail(ErrorKind::Validation, "training label at index " + std::to_string(i) + " is Unassigned");
    }
    counts[semantic_index(labels[i])]++;
  }
  if (std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) < 2) {
    fail(ErrorKind::Degenerate, "training needs at least two classes");
  }
  if (params.epochs < 0 || !(params.learning_rate > 0.0)) {
    fail(ErrorKind::Argument, "epochs must be >= 0 and learning rate positive");
  }

  TrainingResult result;
  BaselineModel model(set, static_cast<int>(features.cols()));
  model.feature_mean() = features.colwise().mean().transpose();
  Eigen::VectorXd sd = ((features.rowwise() - model.feature_mean().transpose()).array().square().colwise().mean())
                           .sqrt()
                           .transpose();
  for (Eigen::Index c = 0; c < sd.size(); ++c) {
    if (!(sd[c] > 1e-12)) sd[c] = 1.0;
  }
  model.feature_scale() = sd;
  model.class_weight() = params.class_weights ? inverse_frequency(labels) : std::vector<double>(K, 1.0);

  const Eigen::MatrixXd design = model.design(features);
  std::vector<std::vector<std::size_t>> whole;
  if (blocks.empty()) {
    whole.emplace_back(labels.size());
    std::iota(whole.back().begin(), whole.back().end(), std::size_t{0});
    blocks = whole;
  }

  Eigen::MatrixXd m1 = Eigen::MatrixXd::Zero(model.weights().rows(), model.weights().cols());
  Eigen::MatrixXd m2 = m1;
  long step = 0;
  constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

  result.model = model;
  result.best_epoch = 0;
  double best_val = -1.0;

  for (int epoch = 1; epoch <= params.epochs; ++epoch) {
    const auto batches = sample_batches(blocks, params.max_points, params.batch_size,
                                        params.seed * 1000003ULL + static_cast<std::uint64_t>(epoch));
    for (const auto& batch : batches) {
      std::vector<Eigen::Index> rows;
      for (const auto& element : batch) {
        for (auto i : element) rows.push_back(static_cast<Eigen::Index>(i));
      }
      std::vector<ClassId> batch_labels(rows.size());
      for (std::size_t t = 0; t < rows.size(); ++t) batch_labels[t] = labels[static_cast<std::size_t>(rows[t])];
      const Eigen::MatrixXd sub = design(rows, Eigen::all);
      const auto lg = loss_and_gradient(model.weights(), sub, batch_labels, model.class_weight());
      ++step;
      if (params.optimizer == Optimizer::Sgd) {
        model.weights() -= params.learning_rate * lg.gradient;
      } else {
        m1 = beta1 * m1 + (1.0 - beta1) * lg.gradient;
        m2 = beta2 * m2 + (1.0 - beta2) * lg.gradient.cwiseProduct(lg.gradient);
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        model.weights().array() -=
            params.learning_rate * (m1.array() / c1) / ((m2.array() / c2).sqrt() + adam_eps);
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_and_gradient(model.weights(), design, labels, model.class_weight()).loss;
    if (val) {
      rec.val_miou = validation_miou(model, *val);
      if (*rec.val_miou > best_val) {
        best_val = *rec.val_miou;
        result.model = model;
        result.best_epoch = epoch;
      }
    } else {
      result.model = model;
      result.best_epoch = epoch;
    }
    result.history.push_back(rec);
  }
  return result;
}

void BaselineModel::save(const std::filesystem::path& path) const {
  detail::ByteWriter out;
  out.put_bytes(kModelMagic, 8);
  out.put(kModelVersion);
  out.put(static_cast<std::uint32_t>(K));
  out.put(static_cast<std::uint32_t>(dimension()));
  out.put(static_cast<std::uint8_t>(set_.base));
  out.put(static_cast<std::uint8_t>(set_.engineered));
  out.put(std::uint16_t{0});
  out.put(std::uint64_t{0});
  for (Eigen::Index d = 0; d < mean_.size(); ++d) out.put(mean_[d]);
  for (Eigen::Index d = 0; d < scale_.size(); ++d) out.put(scale_[d]);
  for (Eigen::Index c = 0; c < weights_.rows(); ++c) {
    for (Eigen::Index d = 0; d < weights_.cols(); ++d) out.put(weights_(c, d));
  }
  for (double w : class_weight_) out.put(w);
  detail::write_file(path, out.bytes());
}

BaselineModel BaselineModel::load(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  if (bytes.size() < kModelHeaderSize ||
      std::string_view(reinterpret_cast<const char*>(bytes.data()), 8) != kModelMagic) {
    fail(ErrorKind::Format, path.string() + " is not a model checkpoint");
  }
  const std::uint8_t* p = bytes.data();
  if (detail::get_le<std::uint32_t>(p + 8) != kModelVersion) {
    fail(ErrorKind::Format, path.string() + ": unsupported checkpoint version");
  }
  const auto classes = detail::get_le<std::uint32_t>(p + 12);
  const auto dim = detail::get_le<std::uint32_t>(p + 16);
  if (classes != static_cast<std::uint32_t>(K)) fail(ErrorKind::Format, "checkpoint class count is not 6");
  FeatureSet set;
  set.base = static_cast<FeatureSet::Base>(p[20]);
  set.engineered = p[21] != 0;
  if (set.dimension() != static_cast<int>(dim)) fail(ErrorKind::Corruption, "checkpoint dimension disagrees with its feature set");
  const std::size_t expected = kModelHeaderSize + 8 * (2 * dim + classes * (dim + 1) + classes);
  if (bytes.size() != expected) fail(ErrorKind::Corruption, path.string() + ": unexpected checkpoint size");

  BaselineModel m(set, static_cast<int>(dim));
  const std::uint8_t* q = p + kModelHeaderSize;
  auto next = [&] {
    const double v = detail::get_le<double>(q);
    q += 8;
    return v;
  };
  for (Eigen::Index d = 0; d < m.mean_.size(); ++d) m.mean_[d] = next();
  for (Eigen::Index d = 0; d < m.scale_.size(); ++d) m.scale_[d] = next();
  for (Eigen::Index c = 0; c < m.weights_.rows(); ++c) {
    for (Eigen::Index d = 0; d < m.weights_.cols(); ++d) m.weights_(c, d) = next();
  }
  for (double& w : m.class_weight_) w = next();
  if (!m.weights_.allFinite()) fail(ErrorKind::Corruption, path.string() + ": non-finite weights");
  return m;
}

std::unique_ptr<TrainedModel> BaselineClassifier::train(const FeatureMatrix& features,
                                                        std::span<const ClassId> labels, const FeatureSet& set,
                                                        const std::optional<ValidationData>& val,
                                                        std::uint64_t seed,
                                                        std::span<const std::vector<std::size_t>> blocks) const {
  TrainingParams p = params_;
  p.seed = seed;
  return std::make_unique<BaselineTrainedModel>(train_baseline(features, labels, set, p, val, blocks));
}

PredictionSet BaselineTrainedModel::predict(const FeatureMatrix& features) const {
  return urbanseg::predict(result_.model, features);
}

std::string BaselineTrainedModel::save(const std::filesystem::path& path) const {
  result_.model.save(path);
  return sha256_file(path).substr(0, 16);
}

}  // namespace urbanseg
