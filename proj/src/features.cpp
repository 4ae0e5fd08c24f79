#include "urbanseg/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "urbanseg/augment.hpp"
#include "urbanseg/errors.hpp"
#include "urbanseg/parallel.hpp"
#include "urbanseg/rng.hpp"

namespace urbanseg {

std::vector<std::string> FeatureSet::column_names() const {
  std::vector<std::string> names{"x", "y", "z", "R", "G", "B"};
  if (base == Base::Extended) names.emplace_back("Intensity");
  if (engineered) {
    names.emplace_back("height_above_local_min");
    names.emplace_back("planarity");
    names.emplace_back("linearity");
  }
  return names;
}

std::string FeatureSet::to_string() const {
  return std::string(base == Base::Basic ? "basic" : "extended") + (engineered ? "+eng" : "");
}

FeatureSet FeatureSet::parse(const std::string& text) {
  FeatureSet fs;
  std::string head = text;
  if (auto plus = text.find('+'); plus != std::string::npos) {
    if (text.substr(plus + 1) != "eng") fail(ErrorKind::Parse, "unknown feature block '" + text.substr(plus + 1) + "'");
    fs.engineered = true;
    head = text.substr(0, plus);
  }
  if (head == "basic") fs.base = Base::Basic;
  else if (head == "extended") fs.base = Base::Extended;
  else fail(ErrorKind::Parse, "unknown feature set '" + text + "'");
  return fs;
}

std::vector<double> height_above_local_min(const PointCloud& cloud, const EngineeredParams& eng) {
  std::vector<double> out(cloud.size());
  if (cloud.empty()) return out;
  const Bounds2 bb = xy_bounds(cloud);
  const double cell = eng.cell_size;
  const auto nx = static_cast<std::size_t>(std::floor((bb.max_x - bb.min_x) / cell)) + 1;
  const auto ny = static_cast<std::size_t>(std::floor((bb.max_y - bb.min_y) / cell)) + 1;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cell_min(nx * ny, inf);
  std::vector<std::size_t> cell_of(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto cx = std::min(nx - 1, static_cast<std::size_t>((cloud.x[i] - bb.min_x) / cell));
    const auto cy = std::min(ny - 1, static_cast<std::size_t>((cloud.y[i] - bb.min_y) / cell));
    cell_of[i] = cy * nx + cx;
    cell_min[cell_of[i]] = std::min(cell_min[cell_of[i]], cloud.z[i]);
  }
  // Separable window minimum: along x, then along y.
  const auto w = static_cast<std::size_t>(std::max(0, eng.window_cells));
  std::vector<double> tmp(nx * ny, inf), win(nx * ny, inf);
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t x = 0; x < nx; ++x) {
      double m = inf;
      for (std::size_t k = x >= w ? x - w : 0; k <= std::min(nx - 1, x + w); ++k) m = std::min(m, cell_min[y * nx + k]);
      tmp[y * nx + x] = m;
    }
  }
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t x = 0; x < nx; ++x) {
      double m = inf;
      for (std::size_t k = y >= w ? y - w : 0; k <= std::min(ny - 1, y + w); ++k) m = std::min(m, tmp[k * nx + x]);
      win[y * nx + x] = m;
    }
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) out[i] = cloud.z[i] - win[cell_of[i]];
  return out;
}

namespace {

struct VoxelIndex {
  double size;
  double ox, oy, oz;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells;

  static std::uint64_t key(std::int64_t x, std::int64_t y, std::int64_t z) {
    auto u = [](std::int64_t v) { return static_cast<std::uint64_t>(v + (1 << 20)) & 0x1FFFFF; };
    return (u(x) << 42) | (u(y) << 21) | u(z);
  }
  std::int64_t cell(double v, double o) const { return static_cast<std::int64_t>(std::floor((v - o) / size)); }
};

}  // namespace

std::vector<std::pair<double, double>> eigen_shape_features(const PointCloud& cloud, int k) {
  const std::size_t n = cloud.size();
  std::vector<std::pair<double, double>> out(n, {0.0, 0.0});
  if (n < 3 || k < 3) return out;
  const auto kk = std::min<std::size_t>(static_cast<std::size_t>(k), n);

  const Bounds2 bb = xy_bounds(cloud);
  // Cell side from the xy density, or from the longer extent when the
  // footprint is (nearly) a line.
  const double span = std::max(bb.max_x - bb.min_x, bb.max_y - bb.min_y);
  const double area = (bb.max_x - bb.min_x) * (bb.max_y - bb.min_y);
  const double share = static_cast<double>(kk) / static_cast<double>(n);
  VoxelIndex index;
  index.size = std::max({std::sqrt(area * share), span * share, 1e-3});
  index.ox = bb.min_x;
  index.oy = bb.min_y;
  index.oz = *std::min_element(cloud.z.begin(), cloud.z.end());
  for (std::size_t i = 0; i < n; ++i) {
    index.cells[VoxelIndex::key(index.cell(cloud.x[i], index.ox), index.cell(cloud.y[i], index.oy),
                                index.cell(cloud.z[i], index.oz))]
        .push_back(static_cast<std::uint32_t>(i));
  }

  parallel_chunks(n, [&](std::size_t begin, std::size_t end, std::size_t) {
    std::vector<std::pair<double, std::uint32_t>> found;
    for (std::size_t i = begin; i < end; ++i) {
      const Eigen::Vector3d p(cloud.x[i], cloud.y[i], cloud.z[i]);
      const auto cx = index.cell(p.x(), index.ox), cy = index.cell(p.y(), index.oy), cz = index.cell(p.z(), index.oz);
      found.clear();
      // Grow the cube shell by shell; stop once the k-th distance is inside
      // the region already scanned.
      for (std::int64_t r = 0;; ++r) {
        for (std::int64_t dx = -r; dx <= r; ++dx) {
          for (std::int64_t dy = -r; dy <= r; ++dy) {
            for (std::int64_t dz = -r; dz <= r; ++dz) {
              if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) continue;
              auto it = index.cells.find(VoxelIndex::key(cx + dx, cy + dy, cz + dz));
              if (it == index.cells.end()) continue;
              for (auto j : it->second) {
                const Eigen::Vector3d q(cloud.x[j], cloud.y[j], cloud.z[j]);
                found.emplace_back((q - p).squaredNorm(), j);
              }
            }
          }
        }
        if (found.size() >= kk) {
          std::nth_element(found.begin(), found.begin() + static_cast<std::ptrdiff_t>(kk - 1), found.end());
          const double reach = static_cast<double>(r) * index.size;
          if (found[kk - 1].first <= reach * reach) break;
        }
        if (r > 64) break;
      }
      if (found.size() < 3) continue;
      const std::size_t m = std::min(kk, found.size());
      Eigen::Vector3d mean = Eigen::Vector3d::Zero();
      for (std::size_t t = 0; t < m; ++t) {
        const auto j = found[t].second;
        mean += Eigen::Vector3d(cloud.x[j], cloud.y[j], cloud.z[j]);
      }
      mean /= static_cast<double>(m);
      Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
      for (std::size_t t = 0; t < m; ++t) {
        const auto j = found[t].second;
        const Eigen::Vector3d d = Eigen::Vector3d(cloud.x[j], cloud.y[j], cloud.z[j]) - mean;
        cov += d * d.transpose();
      }
      cov /= static_cast<double>(m);
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov, Eigen::EigenvaluesOnly);
      const Eigen::Vector3d ev = solver.eigenvalues();  // ascending
      const double l1 = ev[2], l2 = ev[1], l3 = std::max(ev[0], 0.0);
      if (l1 <= 1e-12) continue;
      out[i] = {(l2 - l3) / l1, (l1 - l2) / l1};
    }
  });
  return out;
}

FeatureMatrix extract_features(const PointCloud& cloud, const FeatureSet& set, const EngineeredParams& eng) {
  if (set.base == FeatureSet::Base::Extended && !cloud.has_intensity()) {
    fail(ErrorKind::State, "extended feature set requires an intensity column");
  }
  const std::size_t n = cloud.size();
  FeatureMatrix f(static_cast<Eigen::Index>(n), set.dimension());
  if (n == 0) return f;

  const auto normalized = recenter_normalize(coords_of(cloud)).first;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    f(r, 0) = normalized[i].x();
    f(r, 1) = normalized[i].y();
    f(r, 2) = normalized[i].z();
    f(r, 3) = cloud.r[i] / 65535.0;
    f(r, 4) = cloud.g[i] / 65535.0;
    f(r, 5) = cloud.b[i] / 65535.0;
  }
  Eigen::Index col = 6;
  if (set.base == FeatureSet::Base::Extended) {
    for (std::size_t i = 0; i < n; ++i) f(static_cast<Eigen::Index>(i), col) = (*cloud.intensity)[i] / 65535.0;
    ++col;
  }
  if (set.engineered) {
    const auto hag = height_above_local_min(cloud, eng);
    const auto shape = eigen_shape_features(cloud, eng.neighbors);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      f(r, col) = hag[i];
      f(r, col + 1) = shape[i].first;
      f(r, col + 2) = shape[i].second;
    }
  }
  return f;
}

std::vector<IndexBatch> sample_batches(std::span<const std::vector<std::size_t>> blocks, std::size_t max_points,
                                       std::size_t batch_size, std::uint64_t seed) {
  if (max_points == 0) fail(ErrorKind::Argument, "max_points must be at least 1");
  if (batch_size == 0) fail(ErrorKind::Argument, "batch_size must be at least 1");
  Rng rng(seed);
  std::vector<std::size_t> order(blocks.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order.begin(), order.end());

  std::vector<IndexBatch> batches;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const auto& block = blocks[order[pos]];
    if (block.empty()) continue;
    std::vector<std::size_t> element;
    if (block.size() <= max_points) {
      element = block;
    } else {
      // Partial Fisher-Yates: the first max_points slots become the sample.
      element = block;
      for (std::size_t t = 0; t < max_points; ++t) {
        std::swap(element[t], element[t + rng.index(element.size() - t)]);
      }
      element.resize(max_points);
    }
    if (batches.empty() || batches.back().size() == batch_size) batches.emplace_back();
    batches.back().push_back(std::move(element));
  }
  return batches;
}

}  // namespace urbanseg
