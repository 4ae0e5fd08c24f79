#include "urbanseg/csf.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "urbanseg/errors.hpp"
#include "urbanseg/parallel.hpp"

namespace urbanseg {

namespace {

constexpr double kDamping = 0.01;
// Fraction of the height gap closed per constraint pass by each movable end.
constexpr double kConstraintStep = 0.3;

// Multi-source BFS: particles without points inherit the collision height of
// the nearest particle that has one.
void fill_missing_collision(ClothState& c, const std::vector<std::uint8_t>& has_points) {
  std::deque<std::size_t> queue;
  std::vector<std::uint8_t> seen = has_points;
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (seen[i]) queue.push_back(i);
  }
  while (!queue.empty()) {
    const std::size_t cur = queue.front();
    queue.pop_front();
    const std::size_t ix = cur % c.nx, iy = cur / c.nx;
    auto visit = [&](std::size_t jx, std::size_t jy) {
      const std::size_t j = c.index(jx, jy);
      if (seen[j]) return;
      seen[j] = 1;
      c.collision[j] = c.collision[cur];
      queue.push_back(j);
    };
    if (ix > 0) visit(ix - 1, iy);
    if (ix + 1 < c.nx) visit(ix + 1, iy);
    if (iy > 0) visit(ix, iy - 1);
    if (iy + 1 < c.ny) visit(ix, iy + 1);
  }
}

void relax_edge(ClothState& c, std::size_t a, std::size_t b) {
  const double gap = c.height[b] - c.height[a];
  if (gap == 0.0) return;
  const bool ma = c.movable[a], mb = c.movable[b];
  if (ma && mb) {
    c.height[a] += kConstraintStep * gap;
    c.height[b] -= kConstraintStep * gap;
  } else if (ma) {
    c.height[a] += kConstraintStep * gap;
  } else if (mb) {
    c.height[b] -= kConstraintStep * gap;
  }
}

}  // namespace

void ClothParams::validate() const {
  if (!(grid_resolution > 0.0) || !(time_step > 0.0) || !(class_threshold > 0.0) || max_iterations <= 0 ||
      !(displacement_epsilon > 0.0) || !(gravity > 0.0)) {
    fail(ErrorKind::Argument, "cloth parameters must be positive");
  }
  if (rigidness < 1 || rigidness > 3) fail(ErrorKind::Argument, "rigidness must be 1, 2 or 3");
}

double ClothState::surface_z(double x, double y) const {
  const double fx = std::clamp((x - origin_x) / resolution, 0.0, static_cast<double>(nx - 1));
  const double fy = std::clamp((y - origin_y) / resolution, 0.0, static_cast<double>(ny - 1));
  const auto ix = std::min(static_cast<std::size_t>(fx), nx - 2);
  const auto iy = std::min(static_cast<std::size_t>(fy), ny - 2);
  const double tx = fx - static_cast<double>(ix), ty = fy - static_cast<double>(iy);
  const double h00 = height[index(ix, iy)], h10 = height[index(ix + 1, iy)];
  const double h01 = height[index(ix, iy + 1)], h11 = height[index(ix + 1, iy + 1)];
  const double h = (1 - ty) * ((1 - tx) * h00 + tx * h10) + ty * ((1 - tx) * h01 + tx * h11);
  return -h;
}

std::size_t CsfResult::ground_count() const {
  return static_cast<std::size_t>(std::count(ground.begin(), ground.end(), std::uint8_t{1}));
}

std::vector<std::uint8_t> classify_against_cloth(const PointCloud& cloud, const ClothState& cloth,
                                                 double class_threshold) {
  std::vector<std::uint8_t> ground(cloud.size());
  parallel_chunks(cloud.size(), [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t i = begin; i < end; ++i) {
      ground[i] = std::abs(cloud.z[i] - cloth.surface_z(cloud.x[i], cloud.y[i])) < class_threshold;
    }
  });
  return ground;
}

CsfResult run_csf(const PointCloud& cloud, const ClothParams& params) {
  params.validate();
  if (cloud.empty()) fail(ErrorKind::Argument, "CSF needs at least one point");
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!std::isfinite(cloud.x[i]) || !std::isfinite(cloud.y[i]) || !std::isfinite(cloud.z[i])) {
      fail(ErrorKind::Argument, "point " + std::to_string(i) + " has non-finite coordinates");
    }
  }

  const Bounds2 bb = xy_bounds(cloud);
  const double res = params.grid_resolution;
  ClothState c;
  c.resolution = res;
  c.origin_x = bb.min_x - res;
  c.origin_y = bb.min_y - res;
  c.nx = static_cast<std::size_t>(std::ceil((bb.max_x - bb.min_x) / res)) + 3;
  c.ny = static_cast<std::size_t>(std::ceil((bb.max_y - bb.min_y) / res)) + 3;
  const std::size_t count = c.nx * c.ny;
  c.collision.assign(count, -std::numeric_limits<double>::infinity());
  std::vector<std::uint8_t> has_points(count, 0);

  // Each point lands on its nearest particle; the collision surface is the
  // highest inverted point there, i.e. the lowest original point.
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto ix = static_cast<std::size_t>(std::lround((cloud.x[i] - c.origin_x) / res));
    const auto iy = static_cast<std::size_t>(std::lround((cloud.y[i] - c.origin_y) / res));
    const std::size_t k = c.index(ix, iy);
    c.collision[k] = std::max(c.collision[k], -cloud.z[i]);
    has_points[k] = 1;
  }
  fill_missing_collision(c, has_points);

  const double top = *std::max_element(c.collision.begin(), c.collision.end());
  c.height.assign(count, top + res);
  c.movable.assign(count, 1);
  std::vector<double> previous = c.height;
  std::vector<double> before_step(count);
  const double gravity_step = params.gravity * params.time_step * params.time_step;

  CsfResult result;
  for (int it = 1; it <= params.max_iterations; ++it) {
    before_step = c.height;
    for (std::size_t k = 0; k < count; ++k) {
      if (!c.movable[k]) continue;
      const double velocity = c.height[k] - previous[k];
      previous[k] = c.height[k];
      c.height[k] += velocity * (1.0 - kDamping) - gravity_step;
    }
    for (int pass = 0; pass < params.rigidness; ++pass) {
      for (std::size_t iy = 0; iy < c.ny; ++iy) {
        for (std::size_t ix = 0; ix < c.nx; ++ix) {
          const std::size_t k = c.index(ix, iy);
          if (ix + 1 < c.nx) relax_edge(c, k, k + 1);
          if (iy + 1 < c.ny) relax_edge(c, k, k + c.nx);
        }
      }
    }
    double max_move = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      if (c.movable[k] && c.height[k] <= c.collision[k]) {
        c.height[k] = c.collision[k];
        c.movable[k] = 0;
      }
      max_move = std::max(max_move, std::abs(c.height[k] - before_step[k]));
    }
    result.iterations = it;
    if (max_move < params.displacement_epsilon) {
      result.converged = true;
      break;
    }
  }

  result.ground = classify_against_cloth(cloud, c, params.class_threshold);
  result.cloth = std::move(c);
  return result;
}

PredictionSet ground_mask_to_predictions(const std::vector<std::uint8_t>& ground) {
  PredictionSet p(ground.size(), 2);
  for (std::size_t i = 0; i < ground.size(); ++i) {
    p.at(i, ground[i] ? 1 : 0) = 1.0;
  }
  return p;
}

GroundTypeAdvice suggest_ground_type(const PointCloud& cloud, const std::vector<std::uint8_t>& ground,
                                     const GroundTypeRule& rule) {
  if (ground.size() != cloud.size()) fail(ErrorKind::Alignment, "ground mask does not match the cloud");
  GroundTypeAdvice advice;
  advice.suggestion.assign(cloud.size(), ClassId::Unassigned);
  advice.used_intensity = cloud.has_intensity();
  if (!advice.used_intensity) {
    advice.warnings.push_back("cloud has no intensity column; Soil/Terrain suggestion uses RGB only");
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!ground[i]) continue;
    const double r = cloud.r[i] / 65535.0, g = cloud.g[i] / 65535.0, b = cloud.b[i] / 65535.0;
    const double excess_green = 2.0 * g - r - b;
    bool soil = excess_green > rule.excess_green_threshold;
    if (advice.used_intensity) soil = soil || (*cloud.intensity)[i] / 65535.0 < rule.intensity_threshold;
    advice.suggestion[i] = soil ? ClassId::Soil : ClassId::Terrain;
  }
  return advice;
}

void apply_ground_advice(PointCloud& cloud, const GroundTypeAdvice& advice, bool accept) {
  if (!accept) {
    fail(ErrorKind::State, "ground-type suggestions are advisory; pass an explicit accept flag to write them");
  }
  if (advice.suggestion.size() != cloud.size()) fail(ErrorKind::Alignment, "advice does not match the cloud");
  if (!cloud.label) cloud.label.emplace(cloud.size(), ClassId::Unassigned);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (advice.suggestion[i] != ClassId::Unassigned) (*cloud.label)[i] = advice.suggestion[i];
  }
}

}  // namespace urbanseg
