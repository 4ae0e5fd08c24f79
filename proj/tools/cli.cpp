#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "urbanseg/augment.hpp"
#include "urbanseg/csf.hpp"
#include "urbanseg/errors.hpp"
#include "urbanseg/features.hpp"
#include "urbanseg/las_io.hpp"
#include "urbanseg/metrics.hpp"
#include "urbanseg/model.hpp"
#include "urbanseg/parallel.hpp"
#include "urbanseg/pipeline.hpp"
#include "urbanseg/prediction_io.hpp"
#include "urbanseg/pseudolabel.hpp"
#include "urbanseg/taxonomy.hpp"
#include "urbanseg/tiling.hpp"

namespace urbanseg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kRunRootEnv = "URBANSEG_RUN_ROOT";

struct GlobalOptions {
  int verbosity = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  unsigned threads = 0;
  std::string run_root;
  bool json = false;
};

struct Context {
  GlobalOptions global;
  std::ostream& out;
  std::ostream& err;

  void log(int level, const std::string& msg) const {
    if (global.verbosity >= level) err << msg << "\n";
  }

  fs::path run_root() const {
    if (!global.run_root.empty()) return global.run_root;
    if (const char* env = std::getenv(kRunRootEnv); env && *env) return env;
    return "runs";
  }
};

LasClassMap class_map_from(const std::string& mapping_path) {
  if (mapping_path.empty()) return LasClassMap{};
  return LasClassMap(load_mapping(mapping_path));
}

json class_histogram(const std::vector<ClassId>& labels) {
  std::array<std::size_t, kNumClassIds> counts{};
  for (auto l : labels) counts[static_cast<std::size_t>(l)]++;
  json j = json::object();
  for (int c = 0; c < kNumClassIds; ++c) j[std::string(class_name(static_cast<ClassId>(c)))] = counts[c];
  return j;
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  std::string in, mapping, out;
};

int run_ingest(const Context& ctx, const IngestArgs& a) {
  auto [cloud, header] = read_las(a.in, LasReadOptions{class_map_from(a.mapping)});
  cloud.validate();
  json s;
  s["points"] = cloud.size();
  s["point_format"] = header.point_format;
  s["scale"] = header.scale;
  s["offset"] = header.offset;
  s["min"] = header.min;
  s["max"] = header.max;
  s["has_intensity"] = cloud.has_intensity();
  s["labels"] = cloud.label ? class_histogram(*cloud.label) : json(nullptr);
  if (!a.out.empty()) {
    write_las(cloud, make_las_header(cloud, header.scale[0], header.point_format), a.out);
    ctx.log(1, "wrote " + a.out);
  }
  if (ctx.global.json) {
    ctx.out << s.dump(2) << "\n";
  } else {
    ctx.out << "points: " << cloud.size() << "\nformat: " << int(header.point_format)
            << "\nintensity: " << (cloud.has_intensity() ? "yes" : "no")
            << "\nlabels: " << (cloud.label ? "yes" : "no") << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- export

struct ExportArgs {
  std::string in, out, pred;
  int format = 7;
  double scale = 0.001;
};

int run_export(const Context& ctx, const ExportArgs& a) {
  auto cloud = read_las(a.in).first;
  if (!a.pred.empty()) {
    const auto preds = read_predictions(a.pred, cloud.size());
    if (preds.classes() != static_cast<std::size_t>(kNumSemanticClasses)) {
      fail(ErrorKind::Shape, "export needs six-column predictions");
    }
    cloud.label = preds.hard_labels();
  }
  write_las(cloud, make_las_header(cloud, a.scale, static_cast<std::uint8_t>(a.format)), a.out);
  ctx.log(1, "wrote " + a.out);
  return 0;
}

// ---------------------------------------------------------------- remap

struct RemapArgs {
  std::string in, mapping, out;
};

int run_remap(const Context& ctx, const RemapArgs& a) {
  const LabelMapping m = load_mapping(a.mapping);
  auto cloud = read_las(a.in, LasReadOptions{LasClassMap(m)}).first;
  write_las(cloud, make_las_header(cloud), a.out);
  if (ctx.global.json) {
    ctx.out << json{{"source", m.source_name}, {"labels", cloud.label ? class_histogram(*cloud.label) : json(nullptr)}}
                   .dump(2)
            << "\n";
  }
  ctx.log(1, "remapped " + std::to_string(cloud.size()) + " points from '" + m.source_name + "'");
  return 0;
}

// ---------------------------------------------------------------- tile

struct TileArgs {
  std::string in, out;
  double area = 25000.0;
};

int run_tile(const Context& ctx, const TileArgs& a) {
  const auto cloud = read_las(a.in).first;
  const BlockGrid grid = build_blocks(cloud, a.area);
  save_block_grid(grid, a.out);
  ctx.out << grid.blocks.size() << " blocks of side " << grid.cell_side << " m\n";
  return 0;
}

// ---------------------------------------------------------------- split

struct SplitArgs {
  std::string blocks, out, cloud, out_dir;
  std::vector<double> fractions{0.7, 0.1, 0.2};
};

int run_split(const Context& ctx, const SplitArgs& a) {
  const BlockGrid grid = load_block_grid(a.blocks);
  if (a.fractions.size() != 3) fail(ErrorKind::Validation, "--fractions needs three values");
  SplitTargets targets;
  for (int s = 0; s < kNumSplits; ++s) targets.fractions[s] = a.fractions[s];
  const SplitAssignment asg = assign_splits(grid, targets, ctx.global.seed);
  save_split_assignment(grid, asg, targets, ctx.global.seed, a.out);
  if (!a.cloud.empty()) {
    if (a.out_dir.empty()) fail(ErrorKind::Validation, "--cloud requires --out-dir");
    const auto cloud = read_las(a.cloud).first;
    if (cloud.size() != grid.point_count()) {
      fail(ErrorKind::Alignment, "cloud has " + std::to_string(cloud.size()) + " points, block manifest " +
                                     std::to_string(grid.point_count()));
    }
    fs::create_directories(a.out_dir);
    for (int s = 0; s < kNumSplits; ++s) {
      std::vector<std::size_t> idx;
      for (std::size_t b = 0; b < grid.blocks.size(); ++b) {
        if (asg.block_split[b] == static_cast<Split>(s)) {
          idx.insert(idx.end(), grid.blocks[b].indices.begin(), grid.blocks[b].indices.end());
        }
      }
      std::sort(idx.begin(), idx.end());
      const auto part = cloud.subset(idx);
      write_las(part, make_las_header(part), fs::path(a.out_dir) / (std::string(to_string(static_cast<Split>(s))) + ".las"));
    }
  }
  for (int s = 0; s < kNumSplits; ++s) {
    ctx.out << to_string(static_cast<Split>(s)) << ": " << asg.block_counts[s] << " blocks, "
            << asg.point_counts[s] << " points (" << asg.achieved[s] << ")\n";
  }
  return 0;
}

// ---------------------------------------------------------------- augment

struct AugmentArgs {
  std::string in, out, config;
};

int run_augment(const Context& ctx, const AugmentArgs& a) {
  AugmentationConfig cfg = a.config.empty() ? AugmentationConfig{} : load_augmentation_config(a.config);
  if (ctx.global.seed_given) cfg.seed = ctx.global.seed;
  cfg.validate();
  auto [cloud, header] = read_las(a.in);
  const PointCloud aug = augment_cloud(cloud, cfg);
  write_las(aug, make_las_header(aug, header.scale[0], header.point_format), a.out);
  ctx.log(1, "wrote " + a.out);
  return 0;
}

// ---------------------------------------------------------------- csf

struct CsfArgs {
  std::string in, out, out_las;
  ClothParams params;
  bool suggest = false;
  bool accept = false;
};

int run_csf_cmd(const Context& ctx, const CsfArgs& a) {
  auto cloud = read_las(a.in).first;
  const CsfResult r = run_csf(cloud, a.params);
  write_predictions(ground_mask_to_predictions(r.ground), a.out);
  json s{{"points", cloud.size()},
         {"ground", r.ground_count()},
         {"iterations", r.iterations},
         {"converged", r.converged}};
  if (a.suggest) {
    const GroundTypeAdvice advice = suggest_ground_type(cloud, r.ground);
    std::size_t soil = 0, terrain = 0;
    for (auto c : advice.suggestion) {
      soil += c == ClassId::Soil;
      terrain += c == ClassId::Terrain;
    }
    s["advice"] = {{"soil", soil}, {"terrain", terrain}, {"used_intensity", advice.used_intensity},
                   {"warnings", advice.warnings}, {"advisory", GroundTypeAdvice::advisory}};
    for (const auto& w : advice.warnings) ctx.err << "warning: " << w << "\n";
    if (!a.out_las.empty()) {
      apply_ground_advice(cloud, advice, a.accept);
      write_las(cloud, make_las_header(cloud), a.out_las);
    }
  } else if (!a.out_las.empty()) {
    fail(ErrorKind::Validation, "--out-las writes ground-type suggestions and needs --suggest-ground-type");
  }
  if (ctx.global.json) {
    ctx.out << s.dump(2) << "\n";
  } else {
    ctx.out << "ground: " << r.ground_count() << " of " << cloud.size() << " points ("
            << r.iterations << " iterations" << (r.converged ? "" : ", not converged") << ")\n";
  }
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string train, val, out, features = "extended", mapping, optimizer = "adam";
  TrainingParams params;
  bool no_class_weights = false;
  double block_area = 25000.0;
};

int run_train(const Context& ctx, const TrainArgs& a) {
  const LasClassMap map = class_map_from(a.mapping);
  const FeatureSet set = FeatureSet::parse(a.features);
  auto train = read_las(a.train, LasReadOptions{map}).first;
  if (!train.label) fail(ErrorKind::State, "training cloud carries no labels");
  train = train.subset(mask_unassigned(train));
  const FeatureMatrix x = extract_features(train, set);

  TrainingParams p = a.params;
  p.seed = ctx.global.seed;
  p.class_weights = !a.no_class_weights;
  if (a.optimizer == "adam") {
    p.optimizer = Optimizer::Adam;
  } else if (a.optimizer == "sgd") {
    p.optimizer = Optimizer::Sgd;
  } else {
    fail(ErrorKind::Validation, "unknown optimizer '" + a.optimizer + "'");
  }

  std::vector<std::vector<std::size_t>> blocks;
  for (auto& b : build_blocks(train, a.block_area).blocks) blocks.push_back(std::move(b.indices));

  std::optional<ValidationData> val;
  FeatureMatrix vx;
  std::vector<ClassId> vy;
  if (!a.val.empty()) {
    auto vc = read_las(a.val, LasReadOptions{map}).first;
    if (!vc.label) fail(ErrorKind::State, "validation cloud carries no labels");
    vc = vc.subset(mask_unassigned(vc));
    vx = extract_features(vc, set);
    vy = *vc.label;
    val = ValidationData{&vx, vy};
  }
  const TrainingResult r = train_baseline(x, *train.label, set, p, val, blocks);
  r.model.save(a.out);
  json s{{"best_epoch", r.best_epoch}, {"epochs", p.epochs}};
  if (!r.history.empty() && r.best_epoch > 0) {
    const auto& rec = r.history[static_cast<std::size_t>(r.best_epoch - 1)];
    s["train_loss"] = rec.train_loss;
    s["val_miou"] = rec.val_miou ? json(*rec.val_miou) : json(nullptr);
  }
  if (ctx.global.json) {
    ctx.out << s.dump(2) << "\n";
  } else {
    ctx.out << "best epoch " << r.best_epoch << " of " << p.epochs << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
  std::string model, in, out;
};

int run_predict(const Context& ctx, const PredictArgs& a) {
  const BaselineModel model = BaselineModel::load(a.model);
  const auto cloud = read_las(a.in).first;
  const PredictionSet p = predict(model, extract_features(cloud, model.feature_set()));
  write_predictions(p, a.out);
  ctx.log(1, "wrote " + a.out);
  return 0;
}

// ---------------------------------------------------------------- pseudolabel

struct PseudoArgs {
  std::string pred, cloud, out, thresholds_in, thresholds_out, overrides;
  int iteration = 1;
};

int run_pseudolabel(const Context& ctx, const PseudoArgs& a) {
  const auto cloud = read_las(a.cloud).first;
  const PredictionSet preds = read_predictions(a.pred, cloud.size());
  ThresholdTable table =
      a.thresholds_in.empty() ? compute_thresholds(preds, a.iteration) : load_thresholds(a.thresholds_in);
  if (!a.overrides.empty()) table = adjust_thresholds(table, parse_overrides(a.overrides));
  if (!a.thresholds_out.empty()) save_thresholds(table, a.thresholds_out);

  const PseudoLabelSet kept = filter_pseudolabels(preds, table);
  const auto vanished = vanished_classes(preds, kept);
  for (auto c : vanished) ctx.err << "warning: class " << class_name(c) << " kept no pseudo-labels\n";
  if (kept.size() == 0) fail(ErrorKind::Degenerate, "no point exceeds its class threshold");

  PointCloud out = cloud.subset(kept.indices);
  out.label = kept.labels;
  write_las(out, make_las_header(out), a.out);
  ConfidenceColumn conf{{kept.indices.begin(), kept.indices.end()}, kept.confidence};
  write_confidence_sidecar(conf, a.out + ".conf");

  json s{{"kept", kept.size()}, {"points", cloud.size()}, {"thresholds", table.to_json()}};
  if (ctx.global.json) {
    ctx.out << s.dump(2) << "\n";
  } else {
    ctx.out << "kept " << kept.size() << " of " << cloud.size() << " points\n";
    for (int c = 0; c < kNumSemanticClasses; ++c) {
      const auto t = table.tau[c];
      ctx.out << "  " << class_name(semantic_class(c)) << ": tau "
              << (t ? std::to_string(*t) : std::string("absent")) << ", kept " << kept.class_counts()[c] << "\n";
    }
  }
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string gt, pred, mapping, report, gt_mapping;
};

int run_evaluate(const Context& ctx, const EvaluateArgs& a) {
  const auto gt = read_las(a.gt, LasReadOptions{class_map_from(a.gt_mapping)}).first;
  std::optional<LabelMapping> mapping;
  if (!a.mapping.empty()) mapping = load_mapping(a.mapping);
  std::optional<fs::path> report;
  if (!a.report.empty()) report = a.report;
  const MetricsReport r = run_transfer_eval(a.pred, gt, mapping, report);
  if (ctx.global.json) {
    ctx.out << to_json(r).dump(2) << "\n";
  } else {
    const std::vector<ReportRow> rows{{"eval", r}};
    ctx.out << render_text(rows, "Run");
  }
  return 0;
}

// ---------------------------------------------------------------- selftrain

struct SelftrainArgs {
  std::string config, strategy;
};

int run_selftrain_cmd(const Context& ctx, const SelftrainArgs& a) {
  PipelineConfig cfg = load_pipeline_config(a.config);
  if (!a.strategy.empty()) cfg.strategy = parse_strategy(a.strategy);
  if (ctx.global.seed_given) cfg.seed = ctx.global.seed;
  cfg.validate();
  const BaselineClassifier classifier(cfg.training);
  const fs::path dir = run_directory(cfg, ctx.run_root());
  ctx.log(1, "run directory " + dir.string());
  const RunManifest m = run_selftrain(cfg, classifier, ctx.run_root());
  if (ctx.global.json) {
    ctx.out << m.to_json().dump(2) << "\n";
  } else {
    ctx.out << "run " << m.run_id << " " << m.status << "\n" << render_text(run_report_rows(m));
  }
  return 0;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::string run;
  bool csv = false;
};

int run_report(const Context& ctx, const ReportArgs& a) {
  fs::path dir = a.run;
  if (!fs::exists(dir / "manifest.json")) dir = ctx.run_root() / a.run;
  const RunManifest m = load_manifest(dir / "manifest.json");
  const auto rows = run_report_rows(m);
  if (ctx.global.json) {
    json j = json::array();
    for (const auto& r : rows) j.push_back({{"iteration", r.key}, {"report", to_json(r.report)}});
    ctx.out << json{{"run_id", m.run_id}, {"strategy", m.strategy}, {"status", m.status}, {"rows", j}}.dump(2)
            << "\n";
  } else if (a.csv) {
    ctx.out << render_csv(rows);
  } else {
    ctx.out << "run " << m.run_id << " (" << m.strategy << ", " << m.status << ")\n" << render_text(rows);
    if (!m.diagnostic.empty()) ctx.out << m.diagnostic << "\n";
  }
  return 0;
}

/// First argument that is neither an option nor the value of a global option.
std::string first_positional(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--seed" || a == "--threads" || a == "--run-root") {
      ++i;
    } else if (!a.empty() && a[0] != '-') {
      return a;
    }
  }
  return {};
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semi-supervised urban aerial LiDAR segmentation toolkit", "urbanseg"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_flag("-v,--verbose", g.verbosity, "Increase log verbosity (repeatable)");
  auto* seed_opt = app.add_option("--seed", g.seed, "Global seed for every random draw");
  app.add_option("--threads", g.threads, "Cap on worker threads (0: hardware concurrency)");
  app.add_option("--run-root", g.run_root, std::string("Run directory root (default: $") + kRunRootEnv + " or ./runs)");
  app.add_flag("--json", g.json, "Machine-readable JSON output");

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Read and validate a LAS 1.4 file, print a summary");
  c_ingest->add_option("--in,--input", ingest.in, "Input LAS")->required();
  c_ingest->add_option("--mapping,--class-map", ingest.mapping, "Label mapping for classification bytes");
  c_ingest->add_option("--out,--output", ingest.out, "Re-encode the validated cloud here");

  ExportArgs exp;
  auto* c_export = app.add_subcommand("export", "Write a LAS file, optionally labelled from predictions");
  c_export->add_option("--in,--input", exp.in, "Input LAS")->required();
  c_export->add_option("--out,--output", exp.out, "Output LAS")->required();
  c_export->add_option("--pred", exp.pred, "Six-column .pred file whose argmax becomes the label");
  c_export->add_option("--format", exp.format, "Point data format")->check(CLI::IsMember({7, 8}));
  c_export->add_option("--scale", exp.scale, "Coordinate scale")->check(CLI::PositiveNumber);

  RemapArgs remap;
  auto* c_remap = app.add_subcommand("remap", "Translate source classification bytes into the taxonomy");
  c_remap->add_option("--in,--input", remap.in, "Input LAS in the source taxonomy")->required();
  c_remap->add_option("--mapping", remap.mapping, "Mapping file")->required();
  c_remap->add_option("--out,--output", remap.out, "Output LAS")->required();

  TileArgs tile;
  auto* c_tile = app.add_subcommand("tile", "Partition a cloud into square blocks");
  c_tile->add_option("--in,--input", tile.in, "Input LAS")->required();
  c_tile->add_option("--area", tile.area, "Target block area in square meters")->check(CLI::PositiveNumber);
  c_tile->add_option("--out,--output", tile.out, "Block manifest (JSON)")->required();

  SplitArgs split;
  auto* c_split = app.add_subcommand("split", "Assign blocks to train/val/test");
  c_split->add_option("--blocks", split.blocks, "Block manifest from `tile`")->required();
  c_split->add_option("--out,--output", split.out, "Split manifest (JSON)")->required();
  c_split->add_option("--targets,--fractions", split.fractions, "Train, val and test fractions")->expected(3)->delimiter(',');
  c_split->add_option("--cloud", split.cloud, "Cloud the block manifest was built from");
  c_split->add_option("--out-dir", split.out_dir, "Write train.las, val.las and test.las here");

  AugmentArgs aug;
  auto* c_aug = app.add_subcommand("augment", "Apply the random augmentation chain");
  c_aug->add_option("--in,--input", aug.in, "Input LAS")->required();
  c_aug->add_option("--out,--output", aug.out, "Output LAS")->required();
  c_aug->add_option("--config", aug.config, "Augmentation config (JSON)");

  CsfArgs csf;
  auto* c_csf = app.add_subcommand("csf", "Cloth simulation ground filter");
  c_csf->add_option("--in,--input", csf.in, "Input LAS")->required();
  c_csf->add_option("--out,--output", csf.out, "Two-column ground mask (.pred)")->required();
  c_csf->add_option("--resolution", csf.params.grid_resolution, "Cloth grid resolution (m)");
  c_csf->add_option("--rigidness", csf.params.rigidness, "Constraint passes per step (1-3)");
  c_csf->add_option("--threshold", csf.params.class_threshold, "Ground distance threshold (m)");
  c_csf->add_option("--max-iterations", csf.params.max_iterations, "Simulation step limit");
  c_csf->add_option("--time-step", csf.params.time_step, "Simulation time step");
  c_csf->add_flag("--suggest-ground-type", csf.suggest, "Print advisory Soil/Terrain suggestions");
  c_csf->add_option("--out-las", csf.out_las, "Write suggestions as labels (requires --accept)");
  c_csf->add_flag("--accept", csf.accept, "Accept the advisory suggestions");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train the baseline classifier");
  c_train->add_option("--train", train.train, "Labeled training LAS")->required();
  c_train->add_option("--val", train.val, "Labeled validation LAS for checkpoint selection");
  c_train->add_option("--out,--output", train.out, "Checkpoint path")->required();
  c_train->add_option("--features", train.features, "basic, extended, basic+eng or extended+eng");
  c_train->add_option("--mapping", train.mapping, "Label mapping for classification bytes");
  c_train->add_option("--lr", train.params.learning_rate, "Learning rate")->check(CLI::PositiveNumber);
  c_train->add_option("--epochs", train.params.epochs, "Epochs")->check(CLI::NonNegativeNumber);
  c_train->add_option("--batch-size", train.params.batch_size, "Elements per step")->check(CLI::PositiveNumber);
  c_train->add_option("--max-points", train.params.max_points, "Points per element")->check(CLI::PositiveNumber);
  c_train->add_option("--optimizer", train.optimizer, "adam or sgd");
  c_train->add_flag("--no-class-weights", train.no_class_weights, "Disable inverse-frequency weighting");
  c_train->add_option("--block-area", train.block_area, "Block area for batch sampling")->check(CLI::PositiveNumber);

  PredictArgs pred;
  auto* c_pred = app.add_subcommand("predict", "Run a checkpoint on a cloud");
  c_pred->add_option("--model", pred.model, "Checkpoint")->required();
  c_pred->add_option("--in,--input", pred.in, "Input LAS")->required();
  c_pred->add_option("--out,--output", pred.out, "Output .pred")->required();

  PseudoArgs pseudo;
  auto* c_pseudo = app.add_subcommand("pseudolabel", "Threshold predictions into pseudo-labels");
  c_pseudo->add_option("--pred", pseudo.pred, "Predictions for --cloud")->required();
  c_pseudo->add_option("--cloud", pseudo.cloud, "Unlabeled LAS")->required();
  c_pseudo->add_option("--out,--output", pseudo.out, "Pseudo-labelled LAS (a .conf sidecar is written next to it)")
      ->required();
  c_pseudo->add_option("--thresholds-in", pseudo.thresholds_in, "Reuse a saved threshold table");
  c_pseudo->add_option("--thresholds-out", pseudo.thresholds_out, "Save the table used");
  c_pseudo->add_option("--override", pseudo.overrides, "Manual thresholds, e.g. Soil=0.1,Water=0.9");
  c_pseudo->add_option("--iteration", pseudo.iteration, "Iteration number recorded in the table")
      ->check(CLI::PositiveNumber);

  EvaluateArgs eval;
  auto* c_eval = app.add_subcommand("evaluate", "Score predictions against a labeled cloud");
  c_eval->add_option("--gt", eval.gt, "Labeled LAS")->required();
  c_eval->add_option("--pred", eval.pred, "Prediction file")->required();
  c_eval->add_option("--mapping", eval.mapping, "Mapping for source-taxonomy prediction columns");
  c_eval->add_option("--gt-mapping", eval.gt_mapping, "Mapping for the ground-truth classification bytes");
  c_eval->add_option("--report", eval.report, "Write the report (JSON) here");

  SelftrainArgs st;
  auto* c_st = app.add_subcommand("selftrain", "Run the iterative self-training loop");
  c_st->add_option("--config", st.config, "Pipeline config (JSON)")->required();
  c_st->add_option("--strategy", st.strategy, "Override the config strategy (fixed or adaptive)");

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "Render the per-iteration table of a run");
  c_rep->add_option("--run", rep.run, "Run id under the run root, or a run directory")->required();
  c_rep->add_flag("--csv", rep.csv, "CSV instead of text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    if (app.get_subcommands().empty()) {
      const std::string unknown = first_positional(argc, argv);
      if (!unknown.empty()) {
        err << "error: unknown subcommand '" << unknown << "'\n" << app.help();
      } else {
        err << "error: " << e.what() << "\n" << app.help();
      }
    } else {
      err << "error: " << e.what() << "\n" << app.get_subcommands().front()->help();
    }
    return kExitUsage;
  }
  g.seed_given = seed_opt->count() > 0;
  if (g.threads > 0) set_thread_cap(g.threads);

  const Context ctx{g, out, err};
  CLI::App* sub = app.get_subcommands().front();
  try {
    if (sub == c_ingest) return run_ingest(ctx, ingest);
    if (sub == c_export) return run_export(ctx, exp);
    if (sub == c_remap) return run_remap(ctx, remap);
    if (sub == c_tile) return run_tile(ctx, tile);
    if (sub == c_split) return run_split(ctx, split);
    if (sub == c_aug) return run_augment(ctx, aug);
    if (sub == c_csf) return run_csf_cmd(ctx, csf);
    if (sub == c_train) return run_train(ctx, train);
    if (sub == c_pred) return run_predict(ctx, pred);
    if (sub == c_pseudo) return run_pseudolabel(ctx, pseudo);
    if (sub == c_eval) return run_evaluate(ctx, eval);
    if (sub == c_st) return run_selftrain_cmd(ctx, st);
    if (sub == c_rep) return run_report(ctx, rep);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error (io): " << e.what() << "\n";
    return exit_code_for(ErrorKind::Io);
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace urbanseg::cli
