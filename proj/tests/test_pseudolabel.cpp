#include <gtest/gtest.h>

#include <algorithm>

#include "support/scenes.hpp"
#include "urbanseg/errors.hpp"
#include "urbanseg/pseudolabel.hpp"
#include "urbanseg/rng.hpp"

using namespace urbanseg;
namespace ut = urbanseg::testing;

namespace {

/// Rows whose argmax is class `c` with the given max probability; the rest
/// of the mass is spread evenly.
PredictionSet rows_for(ClassId c, const std::vector<double>& confidences) {
  PredictionSet p(confidences.size(), kNumSemanticClasses);
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    for (std::size_t k = 0; k < kNumSemanticClasses; ++k) p.at(i, k) = (1.0 - confidences[i]) / 5.0;
    p.at(i, static_cast<std::size_t>(semantic_index(c))) = confidences[i];
  }
  return p;
}

/// Brute force: accumulate max-probabilities per argmax class in index order.
std::array<std::optional<double>, kNumSemanticClasses> brute_mean(const PredictionSet& p) {
  std::array<long double, kNumSemanticClasses> sum{};
  std::array<std::size_t, kNumSemanticClasses> n{};
  for (std::size_t i = 0; i < p.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < p.classes(); ++k)
      if (p.at(i, k) > p.at(i, best)) best = k;
    sum[best] += p.at(i, best);
    n[best]++;
  }
  std::array<std::optional<double>, kNumSemanticClasses> out{};
  for (std::size_t k = 0; k < kNumSemanticClasses; ++k)
    if (n[k]) out[k] = static_cast<double>(sum[k] / static_cast<long double>(n[k]));
  return out;
}

}  // namespace

TEST(Thresholds, HandExample) {
  const auto t = compute_thresholds(rows_for(ClassId::Building, {0.5, 0.5, 0.9, 0.9}));
  EXPECT_NEAR(*t.get(ClassId::Building), 0.7, 1e-15);
  EXPECT_FALSE(t.get(ClassId::Soil).has_value());
  EXPECT_EQ(t.iteration, 1);
}

TEST(Thresholds, AllEqualConfidences) {
  const auto t = compute_thresholds(rows_for(ClassId::Water, std::vector<double>(37, 0.6180339887)));
  EXPECT_NEAR(*t.get(ClassId::Water), 0.6180339887, 1e-15);
}

TEST(Thresholds, EmptyIsArgumentError) {
  try {
    compute_thresholds(PredictionSet(0, 6));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Argument);
  }
}

TEST(Thresholds, MatchesBruteForceMean) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PredictionSet p = ut::random_predictions(10000, seed, 1.0 + static_cast<double>(seed % 5));
    const auto t = compute_thresholds(p);
    const auto oracle = brute_mean(p);
    const auto weighted = thresholds_unique_weighted(p);
    for (std::size_t k = 0; k < kNumSemanticClasses; ++k) {
      ASSERT_EQ(t.tau[k].has_value(), oracle[k].has_value());
      if (!oracle[k]) continue;
      EXPECT_NEAR(*t.tau[k], *oracle[k], 1e-12);
      EXPECT_NEAR(*weighted[k], *oracle[k], 1e-12);
    }
  }
}

TEST(Thresholds, QuantizedConfidencesExerciseUniqueWeights) {
  // Many repeated confidence values: the weighted unique-value form matters.
  Rng rng(3);
  std::vector<double> conf(5000);
  for (auto& c : conf) c = 0.3 + 0.1 * static_cast<double>(rng.index(7));
  const auto p = rows_for(ClassId::Terrain, conf);
  const auto oracle = brute_mean(p);
  EXPECT_NEAR(*compute_thresholds(p).get(ClassId::Terrain), *oracle[1], 1e-12);
}

TEST(Thresholds, SoilWaterOverrides) {
  ThresholdTable t;
  t.tau[semantic_index(ClassId::Soil)] = 0.4;
  t.tau[semantic_index(ClassId::Water)] = 0.6;
  t.tau[semantic_index(ClassId::Building)] = 0.8;
  const auto adjusted = adjust_thresholds(t, {{ClassId::Soil, 0.1}, {ClassId::Water, 0.9}});
  EXPECT_EQ(*adjusted.get(ClassId::Soil), 0.1);
  EXPECT_EQ(*adjusted.get(ClassId::Water), 0.9);
  EXPECT_EQ(*adjusted.get(ClassId::Building), 0.8);
  ASSERT_EQ(adjusted.overrides.size(), 2u);
  EXPECT_EQ(adjusted.overrides[0].cls, ClassId::Soil);
  EXPECT_EQ(*adjusted.overrides[0].previous, 0.4);
  EXPECT_EQ(*adjusted.overrides[1].previous, 0.6);
}

TEST(Thresholds, EmptyOverrideMapIsIdentity) {
  const auto t = compute_thresholds(ut::random_predictions(100, 1));
  EXPECT_EQ(adjust_thresholds(t, {}).to_json(), t.to_json());
}

TEST(Thresholds, OverrideErrors) {
  ThresholdTable t;
  try {
    adjust_thresholds(t, {{ClassId::Unassigned, 0.5}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Domain);
  }
  EXPECT_THROW(adjust_thresholds(t, {{ClassId::Soil, 1.5}}), Error);
}

TEST(Thresholds, ParseOverrides) {
  const auto m = parse_overrides("Soil=0.1,Water=0.9");
  EXPECT_EQ(m.at(ClassId::Soil), 0.1);
  EXPECT_EQ(m.at(ClassId::Water), 0.9);
  EXPECT_THROW(parse_overrides("Soil"), Error);
  EXPECT_THROW(parse_overrides("Lava=0.3"), Error);
  EXPECT_THROW(parse_overrides("Soil=abc"), Error);
}

TEST(Thresholds, JsonRoundTripAndId) {
  auto t = adjust_thresholds(compute_thresholds(ut::random_predictions(500, 2), 2), {{ClassId::Soil, 0.1}});
  const auto back = ThresholdTable::from_json(t.to_json());
  EXPECT_EQ(back.to_json(), t.to_json());
  EXPECT_EQ(back.id(), t.id());
  ut::TempDir dir;
  save_thresholds(t, dir / "t.json");
  EXPECT_EQ(load_thresholds(dir / "t.json").id(), t.id());
  t.iteration = 3;
  EXPECT_NE(t.id(), back.id());
}

TEST(Filter, StrictExceed) {
  const auto p = rows_for(ClassId::Building, {0.5, 0.5, 0.9, 0.9});
  const auto kept = filter_pseudolabels(p, compute_thresholds(p));
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept.indices, (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(kept.labels[0], ClassId::Building);
  EXPECT_EQ(kept.confidence[1], 0.9);
}

TEST(Filter, AllEqualConfidencesKeepNothing) {
  const auto p = rows_for(ClassId::Water, std::vector<double>(10, 0.55));
  const auto t = compute_thresholds(p);
  const auto kept = filter_pseudolabels(p, t);
  EXPECT_EQ(kept.size(), 0u);
  EXPECT_EQ(vanished_classes(p, kept), (std::vector<ClassId>{ClassId::Water}));
  EXPECT_EQ(kept.table_id, t.id());
}

TEST(Filter, ZeroThresholdsKeepEverything) {
  const auto p = ut::random_predictions(2000, 5);
  ThresholdTable t;
  for (auto& v : t.tau) v = 0.0;
  const auto kept = filter_pseudolabels(p, t);
  EXPECT_EQ(kept.size(), p.rows());
  const auto counts = kept.class_counts();
  std::size_t total = 0;
  for (auto c : counts) total += c;
  EXPECT_EQ(total, p.rows());
}

TEST(Filter, AbsentClassContributesNothing) {
  const auto p = rows_for(ClassId::Soil, {0.9, 0.95});
  ThresholdTable t;  // every class Absent
  EXPECT_EQ(filter_pseudolabels(p, t).size(), 0u);
}

TEST(Filter, RaisingThresholdNeverGrowsTheSet) {
  Rng rng(9);
  const auto p = ut::random_predictions(3000, 6);
  for (int trial = 0; trial < 200; ++trial) {
    ThresholdTable lo, hi;
    for (std::size_t k = 0; k < kNumSemanticClasses; ++k) {
      const double a = rng.uniform(), b = rng.uniform();
      lo.tau[k] = std::min(a, b);
      hi.tau[k] = std::max(a, b);
    }
    const auto small = filter_pseudolabels(p, hi);
    const auto large = filter_pseudolabels(p, lo);
    ASSERT_LE(small.size(), large.size());
    ASSERT_TRUE(std::includes(large.indices.begin(), large.indices.end(), small.indices.begin(),
                              small.indices.end()));
  }
}
