#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>

#include "urbanseg/point_cloud.hpp"
#include "urbanseg/taxonomy.hpp"

namespace urbanseg {

/// Subset of the LAS 1.4 public header this toolkit reads and writes.
struct LasHeaderInfo {
  std::uint8_t version_major = 1;
  std::uint8_t version_minor = 4;
  std::uint8_t point_format = 7;  // 7 or 8
  std::uint16_t point_record_length = 36;
  std::array<double, 3> scale{0.001, 0.001, 0.001};
  std::array<double, 3> offset{0.0, 0.0, 0.0};
  std::uint64_t point_count = 0;
  std::array<double, 3> min{0.0, 0.0, 0.0};
  std::array<double, 3> max{0.0, 0.0, 0.0};
};

inline constexpr std::size_t kLas14HeaderSize = 375;

/// Record size of the supported formats (7: 36 bytes, 8: 38 bytes).
std::uint16_t las_record_length(std::uint8_t point_format);

/// Header for writing `cloud` at the given scale, with the offset snapped to
/// a multiple of 1000 scale quanta below the minimum coordinate.
LasHeaderInfo make_las_header(const PointCloud& cloud, double scale = 0.001,
                              std::uint8_t point_format = 7);

/// Classification byte <-> ClassId translation. The forward table is built
/// from a LabelMapping whose universe is the set of byte values; writing uses
/// the smallest byte that maps to each class.
class LasClassMap {
 public:
  /// Bytes 0..6 <-> ClassId 0..6.
  LasClassMap();
  explicit LasClassMap(const LabelMapping& mapping);

  ClassId decode(std::uint8_t byte, std::size_t point_index) const;
  std::uint8_t encode(ClassId c) const;

 private:
  std::array<std::optional<ClassId>, 256> forward_{};
  std::array<std::optional<std::uint8_t>, kNumClassIds> inverse_{};
};

struct LasReadOptions {
  LasClassMap class_map;
};

/// Reads formats 7/8 of LAS 1.4. The label column is present iff at least
/// one record decodes to a class other than Unassigned.
std::pair<PointCloud, LasHeaderInfo> read_las(const std::filesystem::path& path,
                                              const LasReadOptions& options = {});

/// Writes `cloud` with the scale, offset and point format from `header`;
/// point count and bounds are recomputed. Throws Range naming the first
/// point whose coordinate does not fit a 32-bit record.
void write_las(const PointCloud& cloud, const LasHeaderInfo& header,
               const std::filesystem::path& path, const LasClassMap& class_map = {});

}  // namespace urbanseg
