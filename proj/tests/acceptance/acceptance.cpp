// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails. Run with a criterion number to execute only that one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "support/las_fixture.hpp"
#include "support/scenes.hpp"
#include "support/scripted.hpp"
#include "urbanseg/augment.hpp"
#include "urbanseg/csf.hpp"
#include "urbanseg/errors.hpp"
#include "urbanseg/las_io.hpp"
#include "urbanseg/metrics.hpp"
#include "urbanseg/model.hpp"
#include "urbanseg/pipeline.hpp"
#include "urbanseg/prediction_io.hpp"
#include "urbanseg/pseudolabel.hpp"
#include "urbanseg/rng.hpp"
#include "urbanseg/tiling.hpp"

using namespace urbanseg;
namespace ut = urbanseg::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Collects failed checks of one criterion; the first few are reported.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures_.size() < 5) failures_.push_back(what);
    ++count_;
  }
  bool ok() const { return count_ == 0; }
  std::string summary() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < failures_.size(); ++i) os << (i ? "; " : "") << failures_[i];
    if (count_ > failures_.size()) os << " (+" << count_ - failures_.size() << " more)";
    return os.str();
  }

 private:
  std::vector<std::string> failures_;
  std::size_t count_ = 0;
};

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

struct Outcome {
  bool pass;
  std::string detail;
};

// ------------------------------------------------------------------ 1

/// Rows as normalized random positives, so the per-class maxima spread over
/// the whole (1/6, 1) range.
PredictionSet random_rows(std::size_t n, Rng& rng) {
  PredictionSet p(n, kNumSemanticClasses);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < kNumSemanticClasses; ++k) sum += (p.at(i, k) = rng.uniform() + 1e-9);
    for (std::size_t k = 0; k < kNumSemanticClasses; ++k) p.at(i, k) /= sum;
  }
  return p;
}

Outcome criterion_1() {
  Rng rng(1);
  Check check;
  double elapsed = 0.0;
  std::size_t rows = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.index(100000);
    const PredictionSet p = random_rows(n, rng);
    rows += n;
    const auto t0 = Clock::now();
    const ThresholdTable t = compute_thresholds(p);
    elapsed += seconds_since(t0);
    // Oracle: plain per-class mean of max-probabilities, extended precision.
    std::array<long double, kNumSemanticClasses> sum{};
    std::array<std::size_t, kNumSemanticClasses> count{};
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < kNumSemanticClasses; ++k)
        if (p.at(i, k) > p.at(i, best)) best = k;
      sum[best] += p.at(i, best);
      ++count[best];
    }
    for (std::size_t k = 0; k < kNumSemanticClasses; ++k) {
      if (!count[k]) {
        check.expect(!t.tau[k], "trial " + std::to_string(trial) + " class " + std::to_string(k) + " not Absent");
        continue;
      }
      const double oracle = static_cast<double>(sum[k] / static_cast<long double>(count[k]));
      check.expect(t.tau[k] && std::abs(*t.tau[k] - oracle) <= 1e-12,
                   "trial " + std::to_string(trial) + " class " + std::to_string(k) + " off by " +
                       (t.tau[k] ? fmt(std::abs(*t.tau[k] - oracle)) : "absent"));
    }
  }
  check.expect(elapsed < 10.0, "compute_thresholds took " + fmt(elapsed) + " s");
  return {check.ok(), check.ok() ? "1000 sets, " + std::to_string(rows) + " rows, " + fmt(elapsed, 3) + " s"
                                 : check.summary()};
}

// ------------------------------------------------------------------ 2

Outcome criterion_2() {
  ThresholdTable t;
  t.tau[semantic_index(ClassId::Soil)] = 0.4;
  t.tau[semantic_index(ClassId::Water)] = 0.6;
  const auto adjusted = adjust_thresholds(t, {{ClassId::Soil, 0.1}, {ClassId::Water, 0.9}});
  const double soil = *adjusted.get(ClassId::Soil), water = *adjusted.get(ClassId::Water);
  const bool ok = soil == 0.1 && water == 0.9 && adjusted.overrides.size() == 2 &&
                  *adjusted.overrides[0].previous == 0.4 && *adjusted.overrides[1].previous == 0.6;
  return {ok, "Soil 0.4 -> " + fmt(soil, 17) + ", Water 0.6 -> " + fmt(water, 17)};
}

// ------------------------------------------------------------------ 3

Outcome criterion_3() {
  Check check;
  PredictionSet fixture(4, kNumSemanticClasses);
  const double conf[] = {0.5, 0.5, 0.9, 0.9};
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t k = 0; k < kNumSemanticClasses; ++k) fixture.at(i, k) = (1.0 - conf[i]) / 5.0;
    fixture.at(i, 2) = conf[i];
  }
  const auto table = compute_thresholds(fixture);
  check.expect(std::abs(*table.tau[2] - 0.7) < 1e-15, "fixture tau " + fmt(*table.tau[2], 17));
  const auto kept = filter_pseudolabels(fixture, table);
  check.expect(kept.indices == std::vector<std::size_t>{2, 3}, "fixture kept " + std::to_string(kept.size()));

  Rng rng(3);
  const PredictionSet p = ut::random_predictions(5000, 3);
  for (int trial = 0; trial < 500; ++trial) {
    ThresholdTable lo, hi;
    for (std::size_t k = 0; k < kNumSemanticClasses; ++k) {
      const double a = rng.uniform(), b = rng.uniform();
      lo.tau[k] = std::min(a, b);
      hi.tau[k] = std::max(a, b);
    }
    const auto small = filter_pseudolabels(p, hi), large = filter_pseudolabels(p, lo);
    check.expect(small.size() <= large.size() && std::includes(large.indices.begin(), large.indices.end(),
                                                               small.indices.begin(), small.indices.end()),
                 "table " + std::to_string(trial) + " grew the set");
  }
  return {check.ok(), check.ok() ? "fixture keeps 2 of 4; 500 raised tables never grow the set" : check.summary()};
}

// ------------------------------------------------------------------ 4

Outcome criterion_4() {
  ut::TempDir dir;
  const auto classifier = ut::dropout_classifier();
  const auto fixed =
      run_selftrain(ut::water_config(Strategy::Fixed, 2), ut::water_inputs(11), classifier, dir / "fixed");
  const auto adaptive =
      run_selftrain(ut::water_config(Strategy::Adaptive, 2), ut::water_inputs(11), classifier, dir / "adaptive");
  const auto w = static_cast<std::size_t>(semantic_index(ClassId::Water));
  const auto& f2 = fixed.iterations.at(1);
  const auto& a2 = adaptive.iterations.at(1);
  const std::size_t f_pseudo = f2.pseudo_counts[w], a_pseudo = a2.pseudo_counts[w];
  const auto f_iou = f2.test->iou[w], a_iou = a2.test->iou[w];
  const bool ok = fixed.iterations[0].pseudo_counts[w] > 0 && f_pseudo == 0 && f_iou && *f_iou == 0.0 &&
                  a_pseudo > 0;
  return {ok, "iteration 2 Water: fixed " + std::to_string(f_pseudo) + " pseudo-labels (tau " +
                  fmt(*f2.tau[w], 3) + "), test IoU " + (f_iou ? fmt(*f_iou, 4) : "absent") + "; adaptive " +
                  std::to_string(a_pseudo) + " (tau " + fmt(*a2.tau[w], 3) + "), test IoU " +
                  (a_iou ? fmt(*a_iou, 4) : "absent")};
}

// ------------------------------------------------------------------ 5

std::string iteration_one_section(const fs::path& manifest) {
  std::ifstream in(manifest);
  const auto j = nlohmann::json::parse(in);
  return j.at("iterations").at(0).dump();
}

Outcome criterion_5() {
  ut::TempDir dir;
  TrainingParams params;
  params.epochs = 8;
  params.learning_rate = 0.05;
  params.max_points = 4096;
  const BaselineClassifier classifier(params);
  Check check;
  int halted = 0;
  for (int iterations : {1, 2}) {
    const std::string tag = std::to_string(iterations);
    auto fixed_cfg = ut::water_config(Strategy::Fixed, iterations, 5);
    auto adaptive_cfg = ut::water_config(Strategy::Adaptive, iterations, 5);
    fixed_cfg.training = adaptive_cfg.training = params;
    // A later Fixed iteration may halt; the halted manifest still carries
    // the iteration-1 record.
    for (const auto& [cfg, name] : {std::pair{fixed_cfg, "fixed-"}, std::pair{adaptive_cfg, "adaptive-"}}) {
      try {
        run_selftrain(cfg, ut::water_inputs(31), classifier, dir / (name + tag));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Degenerate) throw;
        ++halted;
      }
    }
    check.expect(iteration_one_section(dir / ("fixed-" + tag) / "manifest.json") ==
                     iteration_one_section(dir / ("adaptive-" + tag) / "manifest.json"),
                 "iteration-1 records differ with " + tag + " iteration(s)");
  }
  return {check.ok(), check.ok() ? "iteration-1 manifest records byte-identical (1- and 2-iteration runs, " +
                                       std::to_string(halted) + " halted later)"
                                 : check.summary()};
}

// ------------------------------------------------------------------ 6

Outcome criterion_6() {
  Check check;
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.index(1000);
    const std::size_t k = 1 + rng.index(6);
    std::vector<ClassId> gt(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      gt[i] = semantic_class(static_cast<int>(rng.index(k)));
      pred[i] = rng.uniform() < 0.5 ? gt[i] : semantic_class(static_cast<int>(rng.index(6)));
    }
    const auto r = evaluate_labels(gt, pred);
    // Brute force over per-point index sets.
    double sum_iou = 0.0, sum_f1 = 0.0;
    int used = 0;
    for (int c = 0; c < kNumSemanticClasses; ++c) {
      std::set<std::size_t> g, p;
      for (std::size_t i = 0; i < n; ++i) {
        if (semantic_index(gt[i]) == c) g.insert(i);
        if (semantic_index(pred[i]) == c) p.insert(i);
      }
      std::size_t inter = 0;
      for (auto i : g) inter += p.count(i);
      const std::size_t uni = g.size() + p.size() - inter;
      if (uni == 0) {
        check.expect(!r.iou[c], "absent class scored");
        continue;
      }
      const double iou = static_cast<double>(inter) / static_cast<double>(uni);
      const double f1 = 2.0 * static_cast<double>(inter) / static_cast<double>(g.size() + p.size());
      check.expect(r.iou[c] && std::abs(*r.iou[c] - iou) <= 1e-12, "IoU mismatch in trial " + std::to_string(trial));
      check.expect(r.f1[c] && std::abs(*r.f1[c] - f1) <= 1e-12, "F1 mismatch in trial " + std::to_string(trial));
      sum_iou += iou;
      sum_f1 += f1;
      ++used;
    }
    check.expect(std::abs(r.miou - sum_iou / used) <= 1e-12, "mIoU mismatch in trial " + std::to_string(trial));
    check.expect(std::abs(r.macro_f1 - sum_f1 / used) <= 1e-12, "F1 mismatch in trial " + std::to_string(trial));
  }
  ConfusionMatrix m{};
  m[0][0] = 50;
  m[0][1] = 10;
  m[1][0] = 20;
  m[1][1] = 20;
  const auto fixture = make_report(m);
  check.expect(std::abs(fixture.miou - 0.5125) <= 1e-12, "fixture mIoU " + fmt(fixture.miou, 17));
  check.expect(std::abs(fixture.macro_f1 - 0.67033) <= 5e-6, "fixture macro-F1 " + fmt(fixture.macro_f1, 17));
  return {check.ok(), check.ok() ? "200 instances match the set oracle; fixture mIoU " + fmt(fixture.miou) +
                                       ", macro-F1 " + fmt(fixture.macro_f1)
                                 : check.summary()};
}

// ------------------------------------------------------------------ 7

Outcome criterion_7() {
  const auto t0 = Clock::now();
  ut::TempDir dir;
  const PointCloud train = ut::urban_scene(330.0, 0.9, 71);
  const PointCloud val = ut::urban_scene(100.0, 0.9, 72);
  const PointCloud test = ut::urban_scene(120.0, 0.9, 73);
  const PointCloud source = ut::urban_scene(100.0, 0.5, 74);
  write_las(train, make_las_header(train), dir / "train.las");
  write_las(val, make_las_header(val), dir / "val.las");
  write_las(test, make_las_header(test), dir / "test.las");
  write_las(source, make_las_header(source), dir / "source.las");

  PipelineConfig cfg;
  cfg.strategy = Strategy::Adaptive;
  cfg.iterations = 3;
  cfg.seed = 2024;
  cfg.block_area = 2500.0;
  cfg.features = FeatureSet{FeatureSet::Base::Extended, true};
  cfg.train = dir / "train.las";
  cfg.val = dir / "val.las";
  cfg.test = dir / "test.las";
  // Weakened bootstrap: colors and raw coordinates only, barely trained on a
  // small separate scene.
  cfg.bootstrap.source = dir / "source.las";
  cfg.bootstrap.source_features = FeatureSet{FeatureSet::Base::Basic, false};
  cfg.bootstrap.source_training.epochs = 1;
  cfg.bootstrap.source_training.learning_rate = 0.002;
  cfg.bootstrap.source_training.max_points = 2048;
  cfg.training.epochs = 15;
  cfg.training.learning_rate = 0.02;
  cfg.training.max_points = 4096;
  cfg.run_id = "desk-scale";

  const RunManifest m = run_selftrain(cfg, BaselineClassifier(cfg.training), dir / "runs");
  const double elapsed = seconds_since(t0);
  const double boot = m.bootstrap->test->miou;
  std::ostringstream os;
  os << train.size() << " train points; test mIoU bootstrap " << fmt(boot, 4);
  for (const auto& r : m.iterations) os << ", it" << r.iteration << " " << fmt(r.test->miou, 4);
  os << "; " << fmt(elapsed, 3) << " s";
  const double final_miou = m.iterations.back().test->miou;
  return {m.status == "complete" && m.iterations.size() == 3 && final_miou >= boot && elapsed < 300.0, os.str()};
}

// ------------------------------------------------------------------ 8

Outcome criterion_8() {
  ut::TempDir dir;
  Check check;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const PointCloud c = ut::random_cloud(1000, seed);
    const double scale = seed % 2 ? 0.001 : 0.01;
    write_las(c, make_las_header(c, scale), dir / "r.las");
    const auto diff = ut::cloud_difference(c, read_las(dir / "r.las").first, scale);
    check.expect(diff.empty(), "seed " + std::to_string(seed) + ": " + diff);
  }
  ut::dump(dir / "f.las", ut::hand_encode(ut::kFixture));
  const PointCloud f = read_las(dir / "f.las").first;
  check.expect(f.size() == 3, "fixture size");
  for (std::size_t i = 0; i < std::min<std::size_t>(3, f.size()); ++i) {
    const auto& raw = ut::kFixture[i];
    const std::string at = "fixture point " + std::to_string(i);
    check.expect(f.x[i] == raw.x * 0.01 + 1000.0 && f.y[i] == raw.y * 0.01 + 2000.0 && f.z[i] == raw.z * 0.01,
                 at + " coordinates");
    check.expect((*f.intensity)[i] == raw.intensity && f.return_number[i] == raw.ret &&
                     f.num_returns[i] == raw.nret && f.scan_direction[i] == raw.scan_dir,
                 at + " integer fields");
    check.expect(static_cast<int>((*f.label)[i]) == raw.cls, at + " class");
    check.expect(std::abs(f.scan_angle[i] - raw.angle * 0.006) < 1e-12 && f.gps_time[i] == raw.gps, at + " angle/time");
    check.expect(f.r[i] == raw.r && f.g[i] == raw.g && f.b[i] == raw.b, at + " color");
  }
  return {check.ok(), check.ok() ? "10 random 1000-point clouds round-trip; 3-point byte fixture decodes" : check.summary()};
}

// ------------------------------------------------------------------ 9

Outcome criterion_9() {
  Check check;
  Rng rng(9);
  Coords pts(300);
  for (auto& p : pts) p = Vec3(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(0, 30));
  Colors colors(2000);
  for (auto& c : colors) c = Vec3(rng.uniform(), rng.uniform(), rng.uniform());

  auto max_distance_change = [&](const Coords& a, const Coords& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = i + 1; j < a.size(); ++j)
        worst = std::max(worst, std::abs((a[i] - a[j]).norm() - (b[i] - b[j]).norm()));
    return worst;
  };
  AugmentationConfig cfg;
  double rigid = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    cfg.seed = s;
    rigid = std::max(rigid, max_distance_change(pts, random_rotation(pts, cfg, s)));
    rigid = std::max(rigid, max_distance_change(pts, random_flip(pts, cfg, s)));
    const auto d = draw_rotation(cfg, s);
    check.expect(std::abs(rotation_xyz(d.angles_deg[0], d.angles_deg[1], d.angles_deg[2]).determinant() - 1.0) < 1e-12,
                 "rotation determinant");
  }
  check.expect(rigid <= 1e-9, "rigid ops moved a distance by " + fmt(rigid));

  double involution = 0.0;
  const FlipDraw both{true, true};
  const Coords twice = apply_flip(apply_flip(pts, both), both);
  for (std::size_t i = 0; i < pts.size(); ++i) involution = std::max(involution, (twice[i] - pts[i]).norm());
  check.expect(involution <= 1e-9, "double flip error " + fmt(involution));

  auto max_diff = [](const Colors& a, const Colors& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, (a[i] - b[i]).cwiseAbs().maxCoeff());
    return worst;
  };
  AugmentationConfig neutral;
  neutral.jitter_std = 0.0;
  neutral.autocontrast_prob = 0.0;
  const double chroma = std::max({max_diff(apply_auto_contrast(colors, 0.0), colors),
                                  max_diff(chromatic_auto_contrast(colors, neutral, 1), colors),
                                  max_diff(chromatic_jitter(colors, neutral, 1), colors),
                                  max_diff(apply_hue_saturation(colors, HueSatDraw{0.0, 1.0}), colors)});
  check.expect(chroma <= 1e-7, "neutral chromatic ops moved a channel by " + fmt(chroma));

  const Vec3 green = apply_hue_saturation({Vec3(1, 0, 0)}, HueSatDraw{1.0 / 3.0, 1.0})[0];
  check.expect((green - Vec3(0, 1, 0)).cwiseAbs().maxCoeff() <= 1e-7, "red + 1/3 hue gave (" + fmt(green.x()) + "," +
                                                                          fmt(green.y()) + "," + fmt(green.z()) + ")");
  return {check.ok(), check.ok() ? "rigid error " + fmt(rigid, 3) + ", double flip " + fmt(involution, 3) +
                                       ", neutral chroma " + fmt(chroma, 3) + ", red+1/3 -> green"
                                 : check.summary()};
}

// ------------------------------------------------------------------ 10

Outcome criterion_10() {
  Check check;
  std::ostringstream os;
  {
    const PointCloud plane = ut::plane_scene(100.0, 1.0, 0.0, 10);
    const auto t0 = Clock::now();
    const auto r = run_csf(plane);
    const double s = seconds_since(t0);
    check.expect(r.ground_count() == plane.size(), "flat plane ground " + std::to_string(r.ground_count()) + "/" +
                                                       std::to_string(plane.size()));
    check.expect(s < 30.0, "flat plane took " + fmt(s) + " s");
    os << "flat " << r.ground_count() << "/" << plane.size() << " (" << fmt(s, 2) << " s)";
  }
  {
    const auto scene = ut::box_scene(100.0, 1.0, 45.0, 45.0, 10.0, 5.0, 11);
    const auto t0 = Clock::now();
    const auto r = run_csf(scene.cloud);
    const double s = seconds_since(t0);
    std::size_t roof = 0, roof_ground = 0, plane = 0, plane_ground = 0;
    for (std::size_t i = 0; i < scene.cloud.size(); ++i) {
      (scene.is_roof[i] ? roof : plane)++;
      (scene.is_roof[i] ? roof_ground : plane_ground) += r.ground[i];
    }
    const double frac = static_cast<double>(plane_ground) / static_cast<double>(plane);
    check.expect(roof > 0 && roof_ground == 0, std::to_string(roof_ground) + " roof points labeled ground");
    check.expect(frac >= 0.99, "box-scene plane ground fraction " + fmt(frac));
    check.expect(s < 30.0, "box scene took " + fmt(s) + " s");
    os << "; box roof ground " << roof_ground << "/" << roof << ", plane " << fmt(100.0 * frac, 4) << "% ("
       << fmt(s, 2) << " s)";
  }
  {
    const PointCloud slope = ut::plane_scene(100.0, 1.0, 10.0, 12);
    const auto t0 = Clock::now();
    const auto r = run_csf(slope);
    const double s = seconds_since(t0);
    const double frac = static_cast<double>(r.ground_count()) / static_cast<double>(slope.size());
    check.expect(frac >= 0.99, "10 degree slope ground fraction " + fmt(frac));
    check.expect(s < 30.0, "slope took " + fmt(s) + " s");
    os << "; slope " << fmt(100.0 * frac, 4) << "% (" << fmt(s, 2) << " s)";
  }
  return {check.ok(), check.ok() ? os.str() : check.summary()};
}

// ------------------------------------------------------------------ 11

double exhaustive_optimum(const std::vector<std::size_t>& sizes) {
  const std::size_t k = sizes.size();
  std::size_t combos = 1;
  for (std::size_t i = 0; i < k; ++i) combos *= 3;
  double best = 1e300;
  std::vector<Split> a(k);
  for (std::size_t code = 0; code < combos; ++code) {
    std::size_t c = code;
    std::array<int, 3> used{};
    for (std::size_t i = 0; i < k; ++i) {
      a[i] = static_cast<Split>(c % 3);
      used[c % 3]++;
      c /= 3;
    }
    if (!used[0] || !used[1] || !used[2]) continue;
    best = std::min(best, split_deviation(sizes, a, {}));
  }
  return best;
}

Outcome criterion_11() {
  Check check;
  Rng rng(11);
  double worst57 = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::vector<std::size_t> sizes(57);
    for (auto& s : sizes) s = static_cast<std::size_t>(std::exp(11.0 + 0.8 * rng.normal()));
    const auto a = assign_splits(sizes, {}, seed);
    worst57 = std::max(worst57, a.max_deviation);
  }
  check.expect(worst57 <= 0.05, "57-block deviation " + fmt(worst57));
  double worst_ratio = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t k = 3 + rng.index(10);  // 3..12
    std::vector<std::size_t> sizes(k);
    for (auto& s : sizes) s = static_cast<std::size_t>(std::exp(9.0 + rng.normal()));
    const auto a = assign_splits(sizes, {}, static_cast<std::uint64_t>(trial));
    const double opt = exhaustive_optimum(sizes);
    check.expect(a.max_deviation <= 2.0 * opt + 1e-12,
                 "k=" + std::to_string(k) + ": " + fmt(a.max_deviation) + " vs optimum " + fmt(opt));
    if (opt > 0) worst_ratio = std::max(worst_ratio, a.max_deviation / opt);
  }
  return {check.ok(), check.ok() ? "57 blocks worst deviation " + fmt(100.0 * worst57, 3) +
                                       " pp; small instances worst ratio to optimum " + fmt(worst_ratio, 4)
                                 : check.summary()};
}

// ------------------------------------------------------------------ 12

Outcome criterion_12() {
  Rng rng(12);
  const int d = 10, n = 80;
  Eigen::MatrixXd design(n, d + 1);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) design(i, k) = rng.uniform(-2, 2);
    design(i, d) = 1.0;
  }
  std::vector<ClassId> labels(n);
  for (auto& l : labels) l = semantic_class(static_cast<int>(rng.index(6)));
  std::vector<double> cw(6);
  for (auto& w : cw) w = rng.uniform(0.5, 2.0);
  Eigen::MatrixXd w(6, d + 1);
  for (int c = 0; c < 6; ++c)
    for (int k = 0; k <= d; ++k) w(c, k) = rng.uniform(-1, 1);
  const auto lg = loss_and_gradient(w, design, labels, cw);
  const double h = 1e-5;
  double worst = 0.0;
  for (int probe = 0; probe < 20; ++probe) {
    const auto c = static_cast<Eigen::Index>(rng.index(6));
    const auto k = static_cast<Eigen::Index>(rng.index(d + 1));
    Eigen::MatrixXd wp = w, wm = w;
    wp(c, k) += h;
    wm(c, k) -= h;
    const double numeric =
        (loss_and_gradient(wp, design, labels, cw).loss - loss_and_gradient(wm, design, labels, cw).loss) / (2 * h);
    const double analytic = lg.gradient(c, k);
    worst = std::max(worst, std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8}));
  }
  return {worst < 1e-5, "20 probes, worst relative error " + fmt(worst, 3)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"threshold oracle", criterion_1},          {"fixture overrides", criterion_2},
      {"filter boundary and monotonicity", criterion_3}, {"fixed-threshold class dropout", criterion_4},
      {"iteration-1 equivalence", criterion_5},   {"metrics oracle", criterion_6},
      {"desk-scale self-training", criterion_7},  {"LAS round trip", criterion_8},
      {"augmentation invariants", criterion_9},   {"CSF scenes", criterion_10},
      {"split targets", criterion_11},            {"gradient check", criterion_12},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first << "): " << o.detail
              << std::endl;
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
