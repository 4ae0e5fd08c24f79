#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "urbanseg/point_cloud.hpp"

namespace urbanseg {

struct Rect {
  double min_x, min_y, max_x, max_y;
  double area() const { return (max_x - min_x) * (max_y - min_y); }
};

struct Block {
  std::uint32_t id;
  Rect rect;
  std::vector<std::size_t> indices;
};

/// Square cells anchored at the cloud's minimum x/y corner; empty cells are
/// dropped. Blocks are numbered row-major (y then x).
struct BlockGrid {
  double cell_side = 0.0;
  double origin_x = 0.0, origin_y = 0.0;
  std::vector<Block> blocks;

  std::size_t point_count() const;
};

/// Throws Argument for non-positive area or an empty cloud.
BlockGrid build_blocks(const PointCloud& cloud, double target_area);

enum class Split : std::uint8_t { Train = 0, Val = 1, Test = 2 };
inline constexpr int kNumSplits = 3;
const char* to_string(Split s) noexcept;
Split parse_split(const std::string& name);

struct SplitTargets {
  std::array<double, kNumSplits> fractions{0.7, 0.1, 0.2};
};

struct SplitAssignment {
  std::vector<Split> block_split;  // indexed like BlockGrid::blocks
  std::array<double, kNumSplits> achieved{};
  std::array<std::size_t, kNumSplits> block_counts{};
  std::array<std::size_t, kNumSplits> point_counts{};
  double max_deviation = 0.0;
};

/// Optional secondary objective: keep each split's class histogram close to
/// the global one. Only usable when every block has labels.
inline constexpr std::size_t kExactSplitBlocks = 12;

struct ClassBalance {
  double weight = 0.0;
  std::vector<std::array<std::size_t, 6>> block_histograms;  // per block, Soil..Water
};

/// Greedy largest-deficit assignment over blocks sorted by point count
/// (descending; the seed orders equal-count blocks and breaks equal-deficit
/// ties), followed by single-block moves and two-block swaps while any of
/// them strictly lowers the objective. Up to kExactSplitBlocks blocks, every
/// assignment that leaves no split empty is then enumerated and a strictly
/// better one replaces the local optimum. Throws Infeasible for fewer blocks
/// than splits, Argument for invalid targets.
SplitAssignment assign_splits(const BlockGrid& grid, const SplitTargets& targets, std::uint64_t seed,
                              const std::optional<ClassBalance>& balance = std::nullopt);

/// Same algorithm on bare block sizes.
SplitAssignment assign_splits(const std::vector<std::size_t>& block_sizes, const SplitTargets& targets,
                              std::uint64_t seed, const std::optional<ClassBalance>& balance = std::nullopt);

/// Max over splits of |achieved - target| for an arbitrary assignment.
double split_deviation(const std::vector<std::size_t>& block_sizes, const std::vector<Split>& assignment,
                       const SplitTargets& targets);

/// Block-manifest and split-manifest persistence (JSON text).
void save_block_grid(const BlockGrid& grid, const std::filesystem::path& path);
BlockGrid load_block_grid(const std::filesystem::path& path);
void save_split_assignment(const BlockGrid& grid, const SplitAssignment& a, const SplitTargets& targets,
                           std::uint64_t seed, const std::filesystem::path& path);

}  // namespace urbanseg
