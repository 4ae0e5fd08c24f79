#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "urbanseg/point_cloud.hpp"

namespace urbanseg {

using FeatureMatrix = Eigen::MatrixXd;  // rows = points

/// Column layout:
///   Basic:    x y z R G B
///   Extended: x y z R G B I
///   + engineered block (either base): height_above_local_min planarity linearity
/// Coordinates are recentered and scaled into the unit ball; color and
/// intensity are divided by 65535.
struct FeatureSet {
  enum class Base : std::uint8_t { Basic = 0, Extended = 1 };
  Base base = Base::Extended;
  bool engineered = false;

  int dimension() const { return (base == Base::Basic ? 6 : 7) + (engineered ? 3 : 0); }
  std::vector<std::string> column_names() const;
  std::string to_string() const;
  static FeatureSet parse(const std::string& text);  // "basic", "extended", "extended+eng", ...

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

/// Engineered-block parameters. Local minimum = lowest z among the 2 m cells
/// within `window_cells` of the point's cell.
struct EngineeredParams {
  double cell_size = 2.0;
  int window_cells = 6;
  int neighbors = 16;
};

/// Throws State when Extended is requested on a cloud without intensity.
FeatureMatrix extract_features(const PointCloud& cloud, const FeatureSet& set, const EngineeredParams& eng = {});

/// z minus the minimum z over the surrounding cell window, in meters.
std::vector<double> height_above_local_min(const PointCloud& cloud, const EngineeredParams& eng = {});

/// (planarity, linearity) from the covariance eigenvalues of the k nearest
/// neighbors (including the point itself).
std::vector<std::pair<double, double>> eigen_shape_features(const PointCloud& cloud, int k);

using IndexBatch = std::vector<std::vector<std::size_t>>;  // batch of elements

/// One element per block per epoch, shuffled, grouped into batches of
/// `batch_size`. Each element is a uniform random subset (without
/// replacement) of at most `max_points` indices of its block; smaller blocks
/// are taken whole.
std::vector<IndexBatch> sample_batches(std::span<const std::vector<std::size_t>> blocks,
                                       std::size_t max_points, std::size_t batch_size, std::uint64_t seed);

}  // namespace urbanseg
