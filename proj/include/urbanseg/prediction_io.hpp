#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "urbanseg/prediction_set.hpp"

namespace urbanseg {

/// `.pred` layout, all little-endian:
///
///   offset  size  field
///        0     8  magic "USEGPRED"
///        8     4  u32 format version (1)
///       12     4  u32 class count K
///       16     8  u64 row count N
///       24     8  reserved, zero
///       32  8*N*K column-major f64 probabilities: column 0 rows 0..N-1, then column 1 ...
inline constexpr std::size_t kPredHeaderSize = 32;
inline constexpr std::uint32_t kPredVersion = 1;

void write_predictions(const PredictionSet& set, const std::filesystem::path& path);

/// Throws Alignment when `expected_rows` is given and differs from the stored
/// N, Validation for rows outside [0,1] or not summing to 1 +- 1e-6.
PredictionSet read_predictions(const std::filesystem::path& path,
                               std::optional<std::size_t> expected_rows = std::nullopt);

/// Sidecar for pseudo-labelled LAS files: (source point index, confidence)
/// per written record.
///
///   offset  size  field
///        0     8  magic "USEGCONF"
///        8     4  u32 format version (1)
///       12     4  reserved
///       16     8  u64 row count N
///       24     8  reserved
///       32  16*N  rows of (u64 index, f64 confidence)
struct ConfidenceColumn {
  std::vector<std::uint64_t> indices;
  std::vector<double> confidence;
};

void write_confidence_sidecar(const ConfidenceColumn& column, const std::filesystem::path& path);
ConfidenceColumn read_confidence_sidecar(const std::filesystem::path& path);

}  // namespace urbanseg
