#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "urbanseg/point_cloud.hpp"
#include "urbanseg/prediction_set.hpp"

namespace urbanseg {

struct ClothParams {
  double grid_resolution = 2.0;     // meters between cloth particles
  int rigidness = 3;                // constraint passes per step, 1..3
  double time_step = 0.65;
  double class_threshold = 0.5;     // meters
  int max_iterations = 500;
  double displacement_epsilon = 0.005;  // meters
  double gravity = 0.2;

  /// Throws Argument when a field is non-positive or rigidness is not 1..3.
  void validate() const;
};

/// Cloth over the inverted cloud. Heights are in inverted space (-z), so the
/// cloth falls from above toward the per-particle collision height.
struct ClothState {
  double origin_x = 0.0, origin_y = 0.0;
  double resolution = 1.0;
  std::size_t nx = 0, ny = 0;
  std::vector<double> height;
  std::vector<double> collision;
  std::vector<std::uint8_t> movable;

  std::size_t index(std::size_t ix, std::size_t iy) const { return iy * nx + ix; }
  /// Bilinear cloth height at (x, y), reported in original (non-inverted) z.
  double surface_z(double x, double y) const;
};

struct CsfResult {
  std::vector<std::uint8_t> ground;  // 1 = ground
  ClothState cloth;
  int iterations = 0;
  bool converged = false;

  std::size_t ground_count() const;
};

/// Throws Argument for an empty cloud or non-finite coordinates.
CsfResult run_csf(const PointCloud& cloud, const ClothParams& params = {});

/// Reclassifies points against an already-simulated cloth.
std::vector<std::uint8_t> classify_against_cloth(const PointCloud& cloud, const ClothState& cloth,
                                                 double class_threshold);

/// Two-column exchange form of a mask: column 0 non-ground, column 1 ground.
PredictionSet ground_mask_to_predictions(const std::vector<std::uint8_t>& ground);

struct GroundTypeRule {
  double excess_green_threshold = 0.1;  // 2g - r - b on [0,1] channels
  double intensity_threshold = 0.05;    // intensity / 65535
};

/// Annotation-assist Soil/Terrain suggestion for ground points. Advisory
/// only: apply_ground_advice refuses to label a cloud without `accept`.
struct GroundTypeAdvice {
  std::vector<ClassId> suggestion;  // Unassigned for non-ground points
  bool used_intensity = true;
  std::vector<std::string> warnings;
  static constexpr bool advisory = true;
};

/// Soil when excess green > threshold or intensity < threshold, else Terrain.
/// Without intensity the rule falls back to excess green and warns.
GroundTypeAdvice suggest_ground_type(const PointCloud& cloud, const std::vector<std::uint8_t>& ground,
                                     const GroundTypeRule& rule = {});

/// Writes suggestions into the label column of ground points. Throws State
/// unless `accept` is set.
void apply_ground_advice(PointCloud& cloud, const GroundTypeAdvice& advice, bool accept);

}  // namespace urbanseg
