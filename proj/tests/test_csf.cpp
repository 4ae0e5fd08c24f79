#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "support/scenes.hpp"
#include "urbanseg/csf.hpp"
#include "urbanseg/errors.hpp"
#include "urbanseg/rng.hpp"

using namespace urbanseg;
using urbanseg::testing::box_scene;
using urbanseg::testing::plane_scene;

namespace {

double ground_fraction(const std::vector<std::uint8_t>& g) {
  std::size_t n = 0;
  for (auto v : g) n += v;
  return static_cast<double>(n) / static_cast<double>(g.size());
}

}  // namespace

TEST(Csf, FlatPlaneIsAllGround) {
  const PointCloud cloud = plane_scene(60.0, 0.5, 0.0, 1);
  const CsfResult r = run_csf(cloud);
  EXPECT_EQ(r.ground_count(), cloud.size());
}

TEST(Csf, BoxRoofIsNonGround) {
  const auto scene = box_scene(60.0, 0.5, 25.0, 25.0, 10.0, 5.0, 2);
  const CsfResult r = run_csf(scene.cloud);
  std::size_t roof = 0, roof_ground = 0, plane = 0, plane_ground = 0;
  for (std::size_t i = 0; i < scene.cloud.size(); ++i) {
    if (scene.is_roof[i]) {
      ++roof;
      roof_ground += r.ground[i];
    } else {
      ++plane;
      plane_ground += r.ground[i];
    }
  }
  ASSERT_GT(roof, 0u);
  EXPECT_EQ(roof_ground, 0u);
  EXPECT_GE(static_cast<double>(plane_ground) / static_cast<double>(plane), 0.99);
}

TEST(Csf, GentleSlopeStaysGround) {
  const PointCloud cloud = plane_scene(60.0, 0.5, 10.0, 3);
  EXPECT_GE(ground_fraction(run_csf(cloud).ground), 0.99);
}

TEST(Csf, TranslationInvariant) {
  const auto scene = box_scene(50.0, 0.5, 20.0, 20.0, 10.0, 6.0, 4);
  PointCloud moved = scene.cloud;
  for (std::size_t i = 0; i < moved.size(); ++i) {
    moved.x[i] += 500000.0;
    moved.y[i] += 4000000.0;
    moved.z[i] += 250.0;
  }
  EXPECT_EQ(run_csf(scene.cloud).ground, run_csf(moved).ground);
}

TEST(Csf, ThresholdIsMonotone) {
  const auto scene = box_scene(50.0, 0.5, 15.0, 15.0, 12.0, 3.0, 5);
  const CsfResult r = run_csf(scene.cloud);
  std::size_t prev = 0;
  for (double t : {0.05, 0.2, 0.5, 1.0, 2.0, 4.0}) {
    const auto g = classify_against_cloth(scene.cloud, r.cloth, t);
    std::size_t n = 0;
    for (auto v : g) n += v;
    EXPECT_GE(n, prev) << "threshold " << t;
    prev = n;
  }
}

TEST(Csf, ClothNeverPenetratesCollisionHeights) {
  const auto scene = box_scene(50.0, 0.5, 15.0, 15.0, 12.0, 5.0, 6);
  const CsfResult r = run_csf(scene.cloud);
  for (std::size_t i = 0; i < r.cloth.height.size(); ++i) {
    if (std::isfinite(r.cloth.collision[i])) EXPECT_GE(r.cloth.height[i], r.cloth.collision[i] - 1e-9);
  }
}

TEST(Csf, ParamsValidated) {
  ClothParams p;
  p.rigidness = 4;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.grid_resolution = 0.0;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.class_threshold = -1.0;
  EXPECT_THROW(p.validate(), Error);
  EXPECT_THROW(run_csf(PointCloud{}), Error);
}

TEST(Csf, MaskExchangeColumns) {
  const PredictionSet p = ground_mask_to_predictions({1, 0, 1});
  ASSERT_EQ(p.classes(), 2u);
  EXPECT_EQ(p.at(0, 1), 1.0);
  EXPECT_EQ(p.at(1, 0), 1.0);
  EXPECT_EQ(p.at(2, 0), 0.0);
}

TEST(Csf, GroundTypeRules) {
  PointCloud c(4);
  // green vegetation-like ground -> Soil
  c.r[0] = 10000; c.g[0] = 50000; c.b[0] = 10000; (*c.intensity)[0] = 30000;
  // gray, bright -> Terrain
  c.r[1] = 30000; c.g[1] = 30000; c.b[1] = 30000; (*c.intensity)[1] = 30000;
  // gray, dark intensity -> Soil
  c.r[2] = 30000; c.g[2] = 30000; c.b[2] = 30000; (*c.intensity)[2] = 1000;
  // non-ground point
  const std::vector<std::uint8_t> ground{1, 1, 1, 0};
  const auto advice = suggest_ground_type(c, ground);
  EXPECT_EQ(advice.suggestion[0], ClassId::Soil);
  EXPECT_EQ(advice.suggestion[1], ClassId::Terrain);
  EXPECT_EQ(advice.suggestion[2], ClassId::Soil);
  EXPECT_EQ(advice.suggestion[3], ClassId::Unassigned);
  EXPECT_TRUE(advice.used_intensity);
  EXPECT_TRUE(advice.warnings.empty());
  EXPECT_TRUE(GroundTypeAdvice::advisory);
}

TEST(Csf, GroundTypeWithoutIntensityWarns) {
  PointCloud c(2, false);
  c.r[0] = 30000; c.g[0] = 30000; c.b[0] = 30000;
  const auto advice = suggest_ground_type(c, {1, 1});
  EXPECT_FALSE(advice.used_intensity);
  EXPECT_FALSE(advice.warnings.empty());
  EXPECT_EQ(advice.suggestion[0], ClassId::Terrain);
}

TEST(Csf, AdviceRequiresAcceptance) {
  PointCloud c(2);
  const auto advice = suggest_ground_type(c, {1, 0});
  EXPECT_THROW(apply_ground_advice(c, advice, false), Error);
  EXPECT_FALSE(c.label.has_value());
  apply_ground_advice(c, advice, true);
  ASSERT_TRUE(c.label.has_value());
  EXPECT_EQ((*c.label)[0], advice.suggestion[0]);
}

TEST(Csf, LawnAsphaltScene) {
  // Planted types: lawn patches in varied greens, asphalt in dark-to-mid grays.
  Rng rng(17);
  PointCloud c(4000);
  std::vector<ClassId> planted(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const bool lawn = rng.uniform() < 0.5;
    planted[i] = lawn ? ClassId::Soil : ClassId::Terrain;
    if (lawn) {
      const double g = rng.uniform(0.45, 0.9);
      const double r = rng.uniform(0.1, 0.35), b = rng.uniform(0.05, 0.3);
      c.r[i] = static_cast<std::uint16_t>(r * 65535);
      c.g[i] = static_cast<std::uint16_t>(g * 65535);
      c.b[i] = static_cast<std::uint16_t>(b * 65535);
      (*c.intensity)[i] = static_cast<std::uint16_t>(rng.uniform(0.1, 0.5) * 65535);
    } else {
      const double v = rng.uniform(0.2, 0.6);
      c.r[i] = static_cast<std::uint16_t>(std::clamp(v + rng.uniform(-0.02, 0.02), 0.0, 1.0) * 65535);
      c.g[i] = static_cast<std::uint16_t>(v * 65535);
      c.b[i] = static_cast<std::uint16_t>(std::clamp(v + rng.uniform(-0.02, 0.02), 0.0, 1.0) * 65535);
      (*c.intensity)[i] = static_cast<std::uint16_t>(rng.uniform(0.1, 0.6) * 65535);
    }
  }
  const auto advice = suggest_ground_type(c, std::vector<std::uint8_t>(c.size(), 1));
  std::size_t agree = 0;
  for (std::size_t i = 0; i < c.size(); ++i) agree += advice.suggestion[i] == planted[i];
  EXPECT_GE(static_cast<double>(agree) / static_cast<double>(c.size()), 0.95);
}
