#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "urbanseg/taxonomy.hpp"

namespace urbanseg {

/// Columnar point records. Coordinates are meters after scale/offset; color
/// and intensity keep their 16-bit LAS encoding.
class PointCloud {
 public:
  std::vector<double> x, y, z;
  std::optional<std::vector<std::uint16_t>> intensity;
  std::vector<std::uint8_t> return_number;
  std::vector<std::uint8_t> num_returns;
  std::vector<std::uint8_t> scan_direction;
  std::vector<double> scan_angle;  // degrees
  std::vector<double> gps_time;    // seconds
  std::vector<std::uint16_t> r, g, b;
  std::optional<std::vector<ClassId>> label;
  std::optional<std::vector<double>> confidence;

  PointCloud() = default;
  /// N default points: single return, zero color, no label.
  explicit PointCloud(std::size_t n, bool with_intensity = true);

  std::size_t size() const noexcept { return x.size(); }
  bool empty() const noexcept { return x.empty(); }
  bool has_intensity() const noexcept { return intensity.has_value(); }

  void resize(std::size_t n);

  /// New cloud holding rows `indices` in the given order.
  PointCloud subset(std::span<const std::size_t> indices) const;

  /// Throws Alignment for ragged columns and Validation for broken per-point
  /// invariants (returns, confidence range).
  void validate() const;
};

struct Bounds2 {
  double min_x, min_y, max_x, max_y;
};

Bounds2 xy_bounds(const PointCloud& cloud);

}  // namespace urbanseg
