#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace urbanseg {

class PointCloud;

/// Urban class set. Unassigned marks noise and unclassifiable fragments; it is
/// never a training target and never an evaluation class.
enum class ClassId : std::uint8_t {
  Unassigned = 0,
  Soil = 1,
  Terrain = 2,
  Vegetation = 3,
  Building = 4,
  StreetElements = 5,
  Water = 6,
};

inline constexpr int kNumClassIds = 7;
/// Semantic classes Soil..Water.
inline constexpr int kNumSemanticClasses = 6;

inline constexpr std::array<ClassId, kNumSemanticClasses> kSemanticClasses = {
    ClassId::Soil,     ClassId::Terrain,        ClassId::Vegetation,
    ClassId::Building, ClassId::StreetElements, ClassId::Water};

/// Column index (0..5) of a semantic class in prediction and confusion layouts.
constexpr int semantic_index(ClassId c) { return static_cast<int>(c) - 1; }
constexpr ClassId semantic_class(int index) { return static_cast<ClassId>(index + 1); }

bool is_valid_class_id(int value) noexcept;

/// Display name, e.g. "Street Elements".
std::string_view class_name(ClassId c) noexcept;

/// Accepts display names and common spellings, case-insensitive
/// ("StreetElements", "street_elements", "street elements"). Throws Parse.
ClassId parse_class_name(std::string_view name);

/// Total map from a source dataset's class ids onto ClassId.
struct LabelMapping {
  std::string source_name;
  std::set<std::int32_t> universe;
  std::map<std::int32_t, ClassId> entries;
};

/// Mapping file grammar (one statement per line, '#' starts a comment):
///
///   source   = <name>
///   universe = <id-list>      id-list: comma separated ids or ranges "a..b"
///   <id>     = <class name>
///
/// Assigning the same id twice is a Parse error.
LabelMapping parse_mapping(std::string_view text);
LabelMapping load_mapping(const std::filesystem::path& path);
std::string format_mapping(const LabelMapping& m);

/// Identity mapping over ClassId values 0..6.
LabelMapping identity_mapping();

/// Throws Incomplete listing every universe id without an entry, and
/// Validation for entries outside the universe.
void validate_mapping(const LabelMapping& m);

/// output[i] = m.entries[labels[i]]. Throws Domain naming the id and index
/// for labels outside the universe.
std::vector<ClassId> remap_labels(std::span<const std::int32_t> labels, const LabelMapping& m);

/// Indices with label != Unassigned, ascending. Throws State when the cloud
/// has no label column.
std::vector<std::size_t> mask_unassigned(const PointCloud& cloud);

}  // namespace urbanseg
