#include "urbanseg/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "urbanseg/errors.hpp"

namespace urbanseg {

PointCloud::PointCloud(std::size_t n, bool with_intensity) {
  if (with_intensity) intensity.emplace();
  resize(n);
}

void PointCloud::resize(std::size_t n) {
  x.resize(n);
  y.resize(n);
  z.resize(n);
  if (intensity) intensity->resize(n);
  return_number.resize(n, 1);
  num_returns.resize(n, 1);
  scan_direction.resize(n);
  scan_angle.resize(n);
  gps_time.resize(n);
  r.resize(n);
  g.resize(n);
  b.resize(n);
  if (label) label->resize(n, ClassId::Unassigned);
  if (confidence) confidence->resize(n);
}

PointCloud PointCloud::subset(std::span<const std::size_t> indices) const {
  auto pick = [&](const auto& col) {
    std::remove_cvref_t<decltype(col)> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(col[i]);
    return out;
  };
  PointCloud out;
  out.x = pick(x);
  out.y = pick(y);
  out.z = pick(z);
  if (intensity) out.intensity = pick(*intensity);
  out.return_number = pick(return_number);
  out.num_returns = pick(num_returns);
  out.scan_direction = pick(scan_direction);
  out.scan_angle = pick(scan_angle);
  out.gps_time = pick(gps_time);
  out.r = pick(r);
  out.g = pick(g);
  out.b = pick(b);
  if (label) out.label = pick(*label);
  if (confidence) out.confidence = pick(*confidence);
  return out;
}

void PointCloud::validate() const {
  const std::size_t n = size();
  auto check = [n](std::size_t len, const char* name) {
    if (len != n) {
      fail(ErrorKind::Alignment, std::string("column '") + name + "' has " + std::to_string(len) +
                                     " rows, expected " + std::to_string(n));
    }
  };
  check(y.size(), "y");
  check(z.size(), "z");
  if (intensity) check(intensity->size(), "intensity");
  check(return_number.size(), "return_number");
  check(num_returns.size(), "num_returns");
  check(scan_direction.size(), "scan_direction");
  check(scan_angle.size(), "scan_angle");
  check(gps_time.size(), "gps_time");
  check(r.size(), "r");
  check(g.size(), "g");
  check(b.size(), "b");
  if (label) check(label->size(), "label");
  if (confidence) check(confidence->size(), "confidence");

  for (std::size_t i = 0; i < n; ++i) {
    if (return_number[i] < 1 || num_returns[i] < return_number[i]) {
      fail(ErrorKind::Validation, "point " + std::to_string(i) + ": return " +
                                      std::to_string(return_number[i]) + " of " +
                                      std::to_string(num_returns[i]));
    }
    if (label && !is_valid_class_id(static_cast<int>((*label)[i]))) {
      fail(ErrorKind::Validation, "point " + std::to_string(i) + ": invalid class id");
    }
    if (confidence) {
      double c = (*confidence)[i];
      if (!(c >= 0.0 && c <= 1.0)) {
        fail(ErrorKind::Validation, "point " + std::to_string(i) + ": confidence out of [0,1]");
      }
    }
  }
}

Bounds2 xy_bounds(const PointCloud& cloud) {
  Bounds2 b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    b.min_x = std::min(b.min_x, cloud.x[i]);
    b.max_x = std::max(b.max_x, cloud.x[i]);
    b.min_y = std::min(b.min_y, cloud.y[i]);
    b.max_y = std::max(b.max_y, cloud.y[i]);
  }
  return b;
}

}  // namespace urbanseg
