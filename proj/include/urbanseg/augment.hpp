#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "urbanseg/point_cloud.hpp"

namespace urbanseg {

using Vec3 = Eigen::Vector3d;
using Coords = std::vector<Vec3>;
/// Colors normalized to [0,1] per channel.
using Colors = std::vector<Vec3>;

struct AugmentationConfig {
  double max_rotation_deg = 30.0;
  bool flip_x = true;
  bool flip_y = true;
  bool flip_z = false;  // always rejected; present so configs can ask and be told no
  double flip_prob = 0.5;
  double jitter_std = 0.05;
  double autocontrast_prob = 0.2;
  double hue_shift_max = 0.5;
  std::array<double, 2> sat_scale_range{0.5, 1.5};
  std::uint64_t seed = 0;

  /// Throws Validation on out-of-range fields or a requested z flip.
  void validate() const;
};

AugmentationConfig load_augmentation_config(const std::filesystem::path& path);

Coords coords_of(const PointCloud& cloud);
void set_coords(PointCloud& cloud, const Coords& coords);
Colors colors_of(const PointCloud& cloud);
/// Re-quantizes [0,1] colors to 16 bits.
void set_colors(PointCloud& cloud, const Colors& colors);

struct Normalization {
  Vec3 centroid = Vec3::Zero();
  double scale = 1.0;

  Coords apply(const Coords& coords) const;
  Coords invert(const Coords& normalized) const;
};

/// Subtracts the centroid, then divides by the largest point norm so the
/// cloud fits the unit ball. Coincident points get scale 1. Throws Argument
/// for an empty input.
std::pair<Coords, Normalization> recenter_normalize(const Coords& coords);

/// Rotation about x, then y, then z (R = Rz * Ry * Rx), angles in degrees.
Eigen::Matrix3d rotation_xyz(double ax_deg, double ay_deg, double az_deg);
Coords rotate(const Coords& coords, const Eigen::Matrix3d& rotation);

/// Per-application draws. `draw_*` functions sample these from the config's
/// seed and the given stream so whole-cloud decisions are reproducible.
struct RotationDraw {
  std::array<double, 3> angles_deg{};
};
struct FlipDraw {
  bool x = false, y = false;
};
struct AutoContrastDraw {
  bool apply = false;
  double beta = 0.0;
};
struct HueSatDraw {
  double hue_offset = 0.0;
  double sat_scale = 1.0;
};

RotationDraw draw_rotation(const AugmentationConfig& cfg, std::uint64_t stream);
FlipDraw draw_flip(const AugmentationConfig& cfg, std::uint64_t stream);
AutoContrastDraw draw_auto_contrast(const AugmentationConfig& cfg, std::uint64_t stream);
HueSatDraw draw_hue_saturation(const AugmentationConfig& cfg, std::uint64_t stream);

Coords random_rotation(const Coords& coords, const AugmentationConfig& cfg, std::uint64_t stream);
Coords apply_rotation(const Coords& coords, const RotationDraw& draw);

/// Negates the selected axes about the centroid; z is never touched.
Coords random_flip(const Coords& coords, const AugmentationConfig& cfg, std::uint64_t stream);
Coords apply_flip(const Coords& coords, const FlipDraw& draw);

Colors chromatic_auto_contrast(const Colors& colors, const AugmentationConfig& cfg, std::uint64_t stream);
/// out = (1 - beta) * c + beta * (c - min) / (max - min) per channel;
/// constant channels pass through.
Colors apply_auto_contrast(const Colors& colors, double beta);

/// Per-point, per-channel N(0, std) noise keyed by (seed, stream, point
/// index), clamped to [0,1].
Colors chromatic_jitter(const Colors& colors, const AugmentationConfig& cfg, std::uint64_t stream);

Colors hue_saturation_translation(const Colors& colors, const AugmentationConfig& cfg, std::uint64_t stream);
Colors apply_hue_saturation(const Colors& colors, const HueSatDraw& draw);

Vec3 rgb_to_hsv(const Vec3& rgb);
Vec3 hsv_to_rgb(const Vec3& hsv);

/// Rotation (about the cloud centroid), flip and the three color transforms,
/// in that order, on a copy of `cloud`.
PointCloud augment_cloud(const PointCloud& cloud, const AugmentationConfig& cfg);

}  // namespace urbanseg
