#include "urbanseg/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "urbanseg/errors.hpp"
#include "urbanseg/hashing.hpp"
#include "urbanseg/las_io.hpp"
#include "urbanseg/prediction_io.hpp"
#include "urbanseg/rng.hpp"
#include "urbanseg/tiling.hpp"

namespace urbanseg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int K = kNumSemanticClasses;
constexpr std::uint64_t kBootstrapStream = 0xB0075ULL;

json optional_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json overrides_to_json(const std::map<ClassId, double>& o) {
  json j = json::object();
  for (const auto& [c, v] : o) j[std::string(class_name(c))] = v;
  return j;
}

std::map<ClassId, double> overrides_from_json(const json& j) {
  std::map<ClassId, double> out;
  for (const auto& [name, v] : j.items()) out[parse_class_name(name)] = v.get<double>();
  return out;
}

json training_to_json(const TrainingParams& p) {
  return {{"learning_rate", p.learning_rate},
          {"epochs", p.epochs},
          {"max_points", p.max_points},
          {"batch_size", p.batch_size},
          {"class_weights", p.class_weights},
          {"optimizer", p.optimizer == Optimizer::Adam ? "adam" : "sgd"}};
}

TrainingParams training_from_json(const json& j) {
  TrainingParams p;
  p.learning_rate = j.value("learning_rate", p.learning_rate);
  p.epochs = j.value("epochs", p.epochs);
  p.max_points = j.value("max_points", p.max_points);
  p.batch_size = j.value("batch_size", p.batch_size);
  p.class_weights = j.value("class_weights", p.class_weights);
  const std::string opt = j.value("optimizer", std::string("adam"));
  if (opt == "adam") {
    p.optimizer = Optimizer::Adam;
  } else if (opt == "sgd") {
    p.optimizer = Optimizer::Sgd;
  } else {
    fail(ErrorKind::Validation, "unknown optimizer '" + opt + "'");
  }
  if (p.epochs < 0 || p.max_points == 0 || p.batch_size == 0 || !(p.learning_rate > 0.0)) {
    fail(ErrorKind::Validation, "training parameters out of range");
  }
  return p;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

json counts_to_json(const std::array<std::size_t, K>& counts) {
  json j = json::object();
  for (int c = 0; c < K; ++c) j[std::string(class_name(semantic_class(c)))] = counts[c];
  return j;
}

std::array<std::size_t, K> counts_from_json(const json& j) {
  std::array<std::size_t, K> out{};
  for (const auto& [name, v] : j.items()) out[semantic_index(parse_class_name(name))] = v.get<std::size_t>();
  return out;
}

json tau_to_json(const std::array<std::optional<double>, K>& tau) {
  json j = json::object();
  for (int c = 0; c < K; ++c) j[std::string(class_name(semantic_class(c)))] = optional_to_json(tau[c]);
  return j;
}

std::array<std::optional<double>, K> tau_from_json(const json& j) {
  std::array<std::optional<double>, K> out{};
  for (const auto& [name, v] : j.items()) out[semantic_index(parse_class_name(name))] = optional_from_json(v);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::Io, "short write to " + path.string());
}

/// Writes through `writer` into a temporary file, then renames it to
/// `<dir>/<sha256 prefix><ext>`. Returns (id, path relative to run_dir).
template <typename Writer>
std::pair<std::string, std::string> persist_hashed(const fs::path& run_dir, const std::string& dir,
                                                   const std::string& ext, Writer&& writer) {
  const fs::path tmp = run_dir / dir / (".pending" + ext);
  writer(tmp);
  const std::string id = sha256_file(tmp).substr(0, 16);
  const std::string rel = dir + "/" + id + ext;
  std::error_code ec;
  fs::rename(tmp, run_dir / rel, ec);
  if (ec) fail(ErrorKind::Io, "cannot move artifact into " + (run_dir / rel).string());
  return {id, rel};
}

FeatureMatrix select_rows(const FeatureMatrix& m, const std::vector<std::size_t>& rows) {
  FeatureMatrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

LasClassMap class_map_for(const PipelineConfig& config) {
  if (!config.label_mapping) return LasClassMap{};
  return LasClassMap(load_mapping(*config.label_mapping));
}

PointCloud load_labeled(const fs::path& path, const LasClassMap& map, const char* role) {
  auto cloud = read_las(path, LasReadOptions{map}).first;
  if (!cloud.label) fail(ErrorKind::State, std::string(role) + " cloud " + path.string() + " carries no labels");
  return cloud;
}

MetricsReport score(const TrainedModel& model, const FeatureMatrix& features, const PointCloud& cloud) {
  const auto pred = model.predict(features).hard_labels();
  return evaluate_labels(*cloud.label, pred);
}

std::string join_classes(const std::vector<ClassId>& classes) {
  std::string out;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (i) out += ", ";
    out += class_name(classes[i]);
  }
  return out.empty() ? "none" : out;
}

std::uint64_t iteration_seed(std::uint64_t seed, int iteration) {
  return mix64(seed ^ mix64(static_cast<std::uint64_t>(iteration)));
}

}  // namespace

const char* to_string(Strategy s) noexcept { return s == Strategy::Fixed ? "fixed" : "adaptive"; }

Strategy parse_strategy(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (t == "fixed") return Strategy::Fixed;
  if (t == "adaptive") return Strategy::Adaptive;
  fail(ErrorKind::Validation, "unknown strategy '" + text + "' (expected fixed or adaptive)");
}

void PipelineConfig::validate() const {
  if (iterations < 1) fail(ErrorKind::Validation, "iterations must be at least 1");
  if (!(block_area > 0.0)) fail(ErrorKind::Validation, "block_area must be positive");
  adjust_thresholds(ThresholdTable{}, initial_overrides);
  if (!iteration_overrides.empty() && strategy == Strategy::Fixed) {
    fail(ErrorKind::Validation, "per-iteration overrides require the adaptive strategy");
  }
  for (const auto& [k, o] : iteration_overrides) {
    if (k < 2 || k > iterations) {
      fail(ErrorKind::Validation, "iteration override key " + std::to_string(k) + " outside 2.." +
                                      std::to_string(iterations));
    }
    adjust_thresholds(ThresholdTable{}, o);
  }
  const int sources = static_cast<int>(bootstrap.predictions.has_value()) +
                      static_cast<int>(bootstrap.model.has_value()) +
                      static_cast<int>(bootstrap.source.has_value());
  if (sources != 1) fail(ErrorKind::Validation, "bootstrap must name exactly one of predictions, model, source");
}

json PipelineConfig::to_json() const {
  json j;
  j["strategy"] = urbanseg::to_string(strategy);
  j["iterations"] = iterations;
  j["initial_overrides"] = overrides_to_json(initial_overrides);
  json io = json::object();
  for (const auto& [k, o] : iteration_overrides) io[std::to_string(k)] = overrides_to_json(o);
  j["iteration_overrides"] = io;
  j["features"] = features.to_string();
  j["seed"] = seed;
  j["block_area"] = block_area;
  json data = {{"train", train.generic_string()}, {"val", val.generic_string()}, {"test", test.generic_string()}};
  if (label_mapping) data["label_mapping"] = label_mapping->generic_string();
  j["data"] = data;
  json b = json::object();
  if (bootstrap.predictions) b["predictions"] = bootstrap.predictions->generic_string();
  if (bootstrap.model) b["model"] = bootstrap.model->generic_string();
  if (bootstrap.source) {
    b["source"] = bootstrap.source->generic_string();
    b["features"] = bootstrap.source_features.to_string();
    b["training"] = training_to_json(bootstrap.source_training);
  }
  j["bootstrap"] = b;
  j["training"] = training_to_json(training);
  if (run_id) j["run_id"] = *run_id;
  return j;
}

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base_dir) {
  PipelineConfig c;
  try {
    c.strategy = parse_strategy(j.value("strategy", std::string("adaptive")));
    c.iterations = j.value("iterations", c.iterations);
    if (j.contains("initial_overrides")) c.initial_overrides = overrides_from_json(j.at("initial_overrides"));
    if (j.contains("iteration_overrides")) {
      for (const auto& [k, o] : j.at("iteration_overrides").items()) {
        c.iteration_overrides[std::stoi(k)] = overrides_from_json(o);
      }
    }
    c.features = FeatureSet::parse(j.value("features", c.features.to_string()));
    c.seed = j.value("seed", c.seed);
    c.block_area = j.value("block_area", c.block_area);
    const json& data = j.at("data");
    c.train = resolve(base_dir, data.at("train").get<std::string>());
    c.val = resolve(base_dir, data.at("val").get<std::string>());
    c.test = resolve(base_dir, data.at("test").get<std::string>());
    if (data.contains("label_mapping")) c.label_mapping = resolve(base_dir, data.at("label_mapping").get<std::string>());
    const json& b = j.at("bootstrap");
    if (b.contains("predictions")) c.bootstrap.predictions = resolve(base_dir, b.at("predictions").get<std::string>());
    if (b.contains("model")) c.bootstrap.model = resolve(base_dir, b.at("model").get<std::string>());
    if (b.contains("source")) c.bootstrap.source = resolve(base_dir, b.at("source").get<std::string>());
    if (b.contains("features")) c.bootstrap.source_features = FeatureSet::parse(b.at("features").get<std::string>());
    if (b.contains("training")) c.bootstrap.source_training = training_from_json(b.at("training"));
    if (j.contains("training")) c.training = training_from_json(j.at("training"));
    if (j.contains("run_id")) c.run_id = j.at("run_id").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("pipeline config: ") + e.what());
  } catch (const std::invalid_argument&) {
    fail(ErrorKind::Parse, "pipeline config: iteration override keys must be integers");
  }
  c.validate();
  return c;
}

std::string PipelineConfig::hash() const { return sha256_hex(to_json().dump()); }

PipelineConfig load_pipeline_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  return PipelineConfig::from_json(j, path.parent_path());
}

json IterationRecord::to_json() const {
  json j;
  j["iteration"] = iteration;
  j["source_predictions"] = source_predictions_id;
  j["thresholds"] = {{"id", table_id}, {"path", table_path}, {"tau", tau_to_json(tau)}};
  json vanished_names = json::array();
  for (auto c : vanished) vanished_names.push_back(std::string(class_name(c)));
  j["pseudolabels"] = {{"counts", counts_to_json(pseudo_counts)},
                       {"total", pseudo_total},
                       {"vanished", vanished_names},
                       {"path", pseudolabel_path},
                       {"sidecar", sidecar_path}};
  j["checkpoint"] = {{"id", checkpoint_id},
                     {"path", checkpoint_path},
                     {"best_epoch", best_epoch},
                     {"seed", seed},
                     {"initialization", "fresh"},
                     {"parent", nullptr}};
  j["predictions"] = {{"id", predictions_id}, {"path", predictions_path}};
  j["val"] = val ? urbanseg::to_json(*val) : json(nullptr);
  j["test"] = test ? urbanseg::to_json(*test) : json(nullptr);
  return j;
}

IterationRecord IterationRecord::from_json(const json& j) {
  IterationRecord r;
  r.iteration = j.at("iteration").get<int>();
  r.source_predictions_id = j.at("source_predictions").get<std::string>();
  const json& t = j.at("thresholds");
  r.table_id = t.at("id").get<std::string>();
  r.table_path = t.at("path").get<std::string>();
  r.tau = tau_from_json(t.at("tau"));
  const json& p = j.at("pseudolabels");
  r.pseudo_counts = counts_from_json(p.at("counts"));
  r.pseudo_total = p.at("total").get<std::size_t>();
  for (const auto& v : p.at("vanished")) r.vanished.push_back(parse_class_name(v.get<std::string>()));
  r.pseudolabel_path = p.at("path").get<std::string>();
  r.sidecar_path = p.at("sidecar").get<std::string>();
  const json& c = j.at("checkpoint");
  r.checkpoint_id = c.at("id").get<std::string>();
  r.checkpoint_path = c.at("path").get<std::string>();
  r.best_epoch = c.at("best_epoch").get<int>();
  r.seed = c.at("seed").get<std::uint64_t>();
  r.predictions_id = j.at("predictions").at("id").get<std::string>();
  r.predictions_path = j.at("predictions").at("path").get<std::string>();
  if (!j.at("val").is_null()) r.val = report_from_json(j.at("val"));
  if (!j.at("test").is_null()) r.test = report_from_json(j.at("test"));
  return r;
}

json BootstrapRecord::to_json() const {
  json j;
  j["source"] = source;
  j["predictions"] = {{"id", predictions_id}, {"path", predictions_path}};
  j["checkpoint"] = checkpoint_id ? json{{"id", *checkpoint_id}, {"path", *checkpoint_path}} : json(nullptr);
  j["test"] = test ? urbanseg::to_json(*test) : json(nullptr);
  return j;
}

BootstrapRecord BootstrapRecord::from_json(const json& j) {
  BootstrapRecord r;
  r.source = j.at("source").get<std::string>();
  r.predictions_id = j.at("predictions").at("id").get<std::string>();
  r.predictions_path = j.at("predictions").at("path").get<std::string>();
  if (!j.at("checkpoint").is_null()) {
    r.checkpoint_id = j.at("checkpoint").at("id").get<std::string>();
    r.checkpoint_path = j.at("checkpoint").at("path").get<std::string>();
  }
  if (!j.at("test").is_null()) r.test = report_from_json(j.at("test"));
  return r;
}

json RunManifest::to_json() const {
  json j;
  j["run_id"] = run_id;
  j["config_hash"] = config_hash;
  j["strategy"] = strategy;
  j["classifier"] = classifier;
  j["status"] = status;
  j["diagnostic"] = diagnostic;
  j["bootstrap"] = bootstrap ? bootstrap->to_json() : json(nullptr);
  json its = json::array();
  for (const auto& r : iterations) its.push_back(r.to_json());
  j["iterations"] = its;
  json seeds = json::array();
  for (const auto& r : iterations) seeds.push_back({{"iteration", r.iteration}, {"seed", r.seed}});
  j["seeds"] = seeds;
  return j;
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  try {
    m.run_id = j.at("run_id").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.strategy = j.at("strategy").get<std::string>();
    m.classifier = j.at("classifier").get<std::string>();
    m.status = j.at("status").get<std::string>();
    m.diagnostic = j.at("diagnostic").get<std::string>();
    if (!j.at("bootstrap").is_null()) m.bootstrap = BootstrapRecord::from_json(j.at("bootstrap"));
    for (const auto& r : j.at("iterations")) m.iterations.push_back(IterationRecord::from_json(r));
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("run manifest: ") + e.what());
  }
  for (std::size_t i = 0; i < m.iterations.size(); ++i) {
    if (m.iterations[i].iteration != static_cast<int>(i) + 1) {
      fail(ErrorKind::Validation, "run manifest iterations are not contiguous from 1");
    }
  }
  return m;
}

void save_manifest(const RunManifest& m, const fs::path& path) { write_text(path, m.to_json().dump(2) + "\n"); }

RunManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  return RunManifest::from_json(j);
}

PredictionSet aggregate_predictions(const PredictionSet& source, const LabelMapping& mapping) {
  validate_mapping(mapping);
  if (source.classes() != mapping.universe.size()) {
    fail(ErrorKind::Shape, "prediction file has " + std::to_string(source.classes()) +
                               " columns but the mapping universe has " + std::to_string(mapping.universe.size()) +
                               " ids");
  }
  std::vector<int> target;  // semantic index per source column, -1 for Unassigned
  for (auto id : mapping.universe) {
    const ClassId c = mapping.entries.at(id);
    target.push_back(c == ClassId::Unassigned ? -1 : semantic_index(c));
  }
  PredictionSet out(source.rows(), K);
  for (std::size_t i = 0; i < source.rows(); ++i) {
    std::array<double, K> sum{};
    for (std::size_t s = 0; s < source.classes(); ++s) {
      if (target[s] >= 0) sum[target[s]] += source.at(i, s);
    }
    double total = 0.0;
    for (double v : sum) total += v;
    for (int c = 0; c < K; ++c) out.at(i, c) = total > 0.0 ? sum[c] / total : 1.0 / K;
  }
  return out;
}

MetricsReport run_transfer_eval(const fs::path& pred_file, const PointCloud& gt_cloud,
                                const std::optional<LabelMapping>& mapping,
                                const std::optional<fs::path>& report_path) {
  if (!gt_cloud.label) fail(ErrorKind::State, "ground-truth cloud carries no labels");
  PredictionSet preds = read_predictions(pred_file, gt_cloud.size());
  if (mapping) {
    preds = aggregate_predictions(preds, *mapping);
  } else if (preds.classes() != static_cast<std::size_t>(K)) {
    fail(ErrorKind::Shape, "prediction file has " + std::to_string(preds.classes()) +
                               " columns; a mapping is required for non-canonical columns");
  }
  const MetricsReport report = evaluate_labels(*gt_cloud.label, preds.hard_labels());
  if (report_path) write_text(*report_path, urbanseg::to_json(report).dump(2) + "\n");
  return report;
}

fs::path run_directory(const PipelineConfig& config, const fs::path& run_root) {
  return run_root / (config.run_id ? *config.run_id : "run-" + config.hash().substr(0, 12));
}

SelfTrainInputs prepare_selftrain(const PipelineConfig& config, const fs::path& run_dir) {
  config.validate();
  const LasClassMap map = class_map_for(config);
  SelfTrainInputs in;
  in.train = read_las(config.train, LasReadOptions{map}).first;
  in.train.label.reset();
  in.val = load_labeled(config.val, map, "validation");
  in.test = load_labeled(config.test, map, "test");

  BootstrapRecord rec;
  fs::create_directories(run_dir / "checkpoints");
  if (config.bootstrap.predictions) {
    rec.source = "predictions";
    in.initial = read_predictions(*config.bootstrap.predictions, in.train.size());
    if (in.initial.classes() != static_cast<std::size_t>(K)) {
      fail(ErrorKind::Shape, "bootstrap predictions must have six columns");
    }
  } else {
    BaselineModel model;
    if (config.bootstrap.model) {
      rec.source = "model";
      model = BaselineModel::load(*config.bootstrap.model);
    } else {
      rec.source = "trained";
      PointCloud src = load_labeled(*config.bootstrap.source, map, "bootstrap source");
      const auto keep = mask_unassigned(src);
      src = src.subset(keep);
      const FeatureMatrix f = extract_features(src, config.bootstrap.source_features);
      TrainingParams p = config.bootstrap.source_training;
      p.seed = mix64(config.seed ^ kBootstrapStream);
      model = train_baseline(f, *src.label, config.bootstrap.source_features, p).model;
    }
    const auto [id, rel] = persist_hashed(run_dir, "checkpoints", ".ckpt",
                                          [&](const fs::path& p) { model.save(p); });
    rec.checkpoint_id = id;
    rec.checkpoint_path = rel;
    in.initial = predict(model, extract_features(in.train, model.feature_set()));
    const auto test_pred = predict(model, extract_features(in.test, model.feature_set())).hard_labels();
    rec.test = evaluate_labels(*in.test.label, test_pred);
  }
  in.bootstrap = rec;
  return in;
}

RunManifest run_selftrain(const PipelineConfig& config, const SelfTrainInputs& inputs,
                          const Classifier& classifier, const fs::path& run_dir) {
  config.validate();
  if (!inputs.val.label || !inputs.test.label) fail(ErrorKind::State, "validation and test clouds need labels");
  if (inputs.initial.rows() != inputs.train.size()) {
    fail(ErrorKind::Alignment, "bootstrap predictions have " + std::to_string(inputs.initial.rows()) +
                                   " rows for " + std::to_string(inputs.train.size()) + " train points");
  }
  if (fs::exists(run_dir / "manifest.json")) {
    fail(ErrorKind::State, "run directory " + run_dir.string() + " already holds a manifest");
  }
  for (const char* sub : {"thresholds", "pseudolabels", "checkpoints", "predictions", "reports"}) {
    fs::create_directories(run_dir / sub);
  }
  write_text(run_dir / "config.json", config.to_json().dump(2) + "\n");

  RunManifest manifest;
  manifest.run_id = run_dir.filename().string();
  manifest.config_hash = config.hash();
  manifest.strategy = to_string(config.strategy);
  manifest.classifier = classifier.name();
  manifest.status = "running";
  const fs::path manifest_path = run_dir / "manifest.json";

  PredictionSet current = inputs.initial;
  auto persist_predictions = [&](const PredictionSet& p) {
    return persist_hashed(run_dir, "predictions", ".pred", [&](const fs::path& path) { write_predictions(p, path); });
  };
  auto [current_id, current_path] = persist_predictions(current);
  if (inputs.bootstrap) {
    BootstrapRecord b = *inputs.bootstrap;
    b.predictions_id = current_id;
    b.predictions_path = current_path;
    manifest.bootstrap = b;
  }

  // Features are fixed for the whole run; only the labels change.
  const FeatureMatrix train_features = extract_features(inputs.train, config.features);
  const auto val_rows = mask_unassigned(inputs.val);
  const FeatureMatrix val_features = select_rows(extract_features(inputs.val, config.features), val_rows);
  std::vector<ClassId> val_labels;
  for (auto i : val_rows) val_labels.push_back((*inputs.val.label)[i]);
  const FeatureMatrix test_features = extract_features(inputs.test, config.features);
  const BlockGrid grid = build_blocks(inputs.train, config.block_area);

  std::optional<ThresholdTable> frozen;
  for (int k = 1; k <= config.iterations; ++k) {
    IterationRecord rec;
    rec.iteration = k;
    rec.seed = iteration_seed(config.seed, k);
    rec.source_predictions_id = current_id;

    ThresholdTable table;
    if (k == 1) {
      table = adjust_thresholds(compute_thresholds(current, 1), config.initial_overrides);
      frozen = table;
    } else if (config.strategy == Strategy::Fixed) {
      table = *frozen;
    } else {
      table = compute_thresholds(current, k);
      if (auto it = config.iteration_overrides.find(k); it != config.iteration_overrides.end()) {
        table = adjust_thresholds(table, it->second);
      }
    }
    rec.table_id = table.id();
    rec.table_path = "thresholds/" + rec.table_id + ".json";
    rec.tau = table.tau;
    if (!fs::exists(run_dir / rec.table_path)) save_thresholds(table, run_dir / rec.table_path);

    const PseudoLabelSet pseudo = filter_pseudolabels(current, table);
    rec.pseudo_counts = pseudo.class_counts();
    rec.pseudo_total = pseudo.size();
    rec.vanished = vanished_classes(current, pseudo);

    if (pseudo.size() == 0) {
      manifest.status = "halted";
      manifest.diagnostic = "iteration " + std::to_string(k) +
                            " kept no pseudo-labels; vanished classes: " + join_classes(rec.vanished);
      manifest.iterations.push_back(rec);
      save_manifest(manifest, manifest_path);
      fail(ErrorKind::Degenerate, manifest.diagnostic);
    }

    PointCloud labeled = inputs.train.subset(pseudo.indices);
    labeled.label = pseudo.labels;
    labeled.confidence.reset();
    const auto [las_id, las_rel] = persist_hashed(run_dir, "pseudolabels", ".las", [&](const fs::path& p) {
      write_las(labeled, make_las_header(labeled), p);
    });
    rec.pseudolabel_path = las_rel;
    rec.sidecar_path = "pseudolabels/" + las_id + ".conf";
    ConfidenceColumn conf;
    conf.indices.assign(pseudo.indices.begin(), pseudo.indices.end());
    conf.confidence = pseudo.confidence;
    write_confidence_sidecar(conf, run_dir / rec.sidecar_path);

    // Blocks restated as positions within the pseudo-labelled rows.
    std::vector<std::size_t> position(inputs.train.size(), SIZE_MAX);
    for (std::size_t i = 0; i < pseudo.indices.size(); ++i) position[pseudo.indices[i]] = i;
    std::vector<std::vector<std::size_t>> blocks;
    for (const auto& b : grid.blocks) {
      std::vector<std::size_t> rows;
      for (auto idx : b.indices) {
        if (position[idx] != SIZE_MAX) rows.push_back(position[idx]);
      }
      if (!rows.empty()) blocks.push_back(std::move(rows));
    }

    const FeatureMatrix x = select_rows(train_features, pseudo.indices);
    const ValidationData val{&val_features, val_labels};
    const auto model = classifier.train(x, pseudo.labels, config.features, val, rec.seed, blocks);
    rec.best_epoch = model->best_epoch();
    {
      const fs::path tmp = run_dir / "checkpoints" / ".pending.ckpt";
      rec.checkpoint_id = model->save(tmp);
      rec.checkpoint_path = "checkpoints/" + rec.checkpoint_id + ".ckpt";
      fs::rename(tmp, run_dir / rec.checkpoint_path);
    }

    current = model->predict(train_features);
    std::tie(current_id, current_path) = persist_predictions(current);
    rec.predictions_id = current_id;
    rec.predictions_path = current_path;

    {
      const auto pred = model->predict(val_features).hard_labels();
      rec.val = evaluate_labels(val_labels, pred);
    }
    rec.test = score(*model, test_features, inputs.test);
    write_text(run_dir / "reports" / ("iteration-" + std::to_string(k) + ".json"),
               json{{"val", urbanseg::to_json(*rec.val)}, {"test", urbanseg::to_json(*rec.test)}}.dump(2) + "\n");

    manifest.iterations.push_back(std::move(rec));
    save_manifest(manifest, manifest_path);
  }

  const auto rows = run_report_rows(manifest);
  write_text(run_dir / "reports" / "test.csv", render_csv(rows));
  write_text(run_dir / "reports" / "test.txt", render_text(rows));
  manifest.status = "complete";
  save_manifest(manifest, manifest_path);
  return manifest;
}

RunManifest run_selftrain(const PipelineConfig& config, const Classifier& classifier, const fs::path& run_root) {
  const fs::path dir = run_directory(config, run_root);
  if (fs::exists(dir / "manifest.json")) {
    fail(ErrorKind::State, "run directory " + dir.string() + " already holds a manifest");
  }
  const SelfTrainInputs inputs = prepare_selftrain(config, dir);
  return run_selftrain(config, inputs, classifier, dir);
}

std::vector<ReportRow> run_report_rows(const RunManifest& manifest) {
  std::vector<ReportRow> rows;
  if (manifest.bootstrap && manifest.bootstrap->test) rows.push_back({"0", *manifest.bootstrap->test});
  for (const auto& r : manifest.iterations) {
    if (r.test) rows.push_back({std::to_string(r.iteration), *r.test});
  }
  return rows;
}

}  // namespace urbanseg
