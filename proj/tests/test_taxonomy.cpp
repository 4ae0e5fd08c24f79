#include <filesystem>

#include <gtest/gtest.h>

#include "urbanseg/errors.hpp"
#include "urbanseg/point_cloud.hpp"
#include "urbanseg/rng.hpp"
#include "urbanseg/taxonomy.hpp"

using namespace urbanseg;

namespace {

LabelMapping make(std::set<std::int32_t> universe, std::map<std::int32_t, ClassId> entries) {
  LabelMapping m;
  m.source_name = "toy";
  m.universe = std::move(universe);
  m.entries = std::move(entries);
  return m;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::State;
}

}  // namespace

TEST(Taxonomy, SevenClassesWithCanonicalNames) {
  EXPECT_EQ(kNumClassIds, 7);
  EXPECT_EQ(kNumSemanticClasses, 6);
  EXPECT_EQ(class_name(ClassId::StreetElements), "Street Elements");
  EXPECT_EQ(parse_class_name("street_elements"), ClassId::StreetElements);
  EXPECT_EQ(parse_class_name("WATER"), ClassId::Water);
  for (int i = 0; i < kNumSemanticClasses; ++i) EXPECT_EQ(semantic_index(semantic_class(i)), i);
  EXPECT_EQ(kind_of([] { parse_class_name("Road"); }), ErrorKind::Parse);
}

TEST(Taxonomy, TotalMappingValidates) {
  EXPECT_NO_THROW(validate_mapping(make({0, 1, 2}, {{0, ClassId::Soil}, {1, ClassId::Vegetation}, {2, ClassId::Building}})));
}

TEST(Taxonomy, MissingIdIsListed) {
  try {
    validate_mapping(make({0, 1, 2}, {{0, ClassId::Soil}, {2, ClassId::Building}}));
    FAIL() << "expected incompleteness";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Incomplete);
    EXPECT_NE(std::string(e.what()).find("{1}"), std::string::npos) << e.what();
  }
}

TEST(Taxonomy, DuplicateIdInFileIsParseError) {
  const char* text = "source = toy\nuniverse = 0..6\n5 = Soil\n5 = Water\n";
  EXPECT_EQ(kind_of([&] { parse_mapping(text); }), ErrorKind::Parse);
}

TEST(Taxonomy, MissingUniverseIsParseError) {
  EXPECT_EQ(kind_of([] { parse_mapping("0 = Soil\n"); }), ErrorKind::Parse);
}

TEST(Taxonomy, MappingTextRoundTrips) {
  const char* text =
      "# comment\nsource = demo\nuniverse = 0..3, 7\n0 = Unassigned\n1 = Soil # trailing\n2 = terrain\n"
      "3 = Street Elements\n7 = Water\n";
  const LabelMapping m = parse_mapping(text);
  EXPECT_EQ(m.source_name, "demo");
  EXPECT_EQ(m.universe, (std::set<std::int32_t>{0, 1, 2, 3, 7}));
  EXPECT_EQ(m.entries.at(3), ClassId::StreetElements);
  validate_mapping(m);
  const LabelMapping again = parse_mapping(format_mapping(m));
  EXPECT_EQ(again.universe, m.universe);
  EXPECT_EQ(again.entries, m.entries);
  EXPECT_EQ(again.source_name, m.source_name);
}

TEST(Taxonomy, EntryOutsideUniverseRejected) {
  EXPECT_EQ(kind_of([] { validate_mapping(make({0}, {{0, ClassId::Soil}, {9, ClassId::Water}})); }),
            ErrorKind::Validation);
}

TEST(Taxonomy, RemapAppliesEntries) {
  const auto m = make({0, 1, 2}, {{0, ClassId::Soil}, {1, ClassId::Vegetation}, {2, ClassId::Water}});
  const std::vector<std::int32_t> in{0, 1, 1, 2};
  EXPECT_EQ(remap_labels(in, m),
            (std::vector<ClassId>{ClassId::Soil, ClassId::Vegetation, ClassId::Vegetation, ClassId::Water}));
}

TEST(Taxonomy, IdentityMappingLeavesLabelsUnchanged) {
  const std::vector<std::int32_t> in{0, 1, 2, 3, 4, 5, 6, 6, 0};
  const auto out = remap_labels(in, identity_mapping());
  for (std::size_t i = 0; i < in.size(); ++i) EXPECT_EQ(static_cast<int>(out[i]), in[i]);
}

TEST(Taxonomy, ManyToOneCollapsePreservesCounts) {
  // Six source classes where 2 and 3 (low and high vegetation) collapse.
  const auto m = make({0, 1, 2, 3, 4, 5},
                      {{0, ClassId::Terrain}, {1, ClassId::Building}, {2, ClassId::Vegetation},
                       {3, ClassId::Vegetation}, {4, ClassId::StreetElements}, {5, ClassId::Water}});
  Rng rng(4);
  std::vector<std::int32_t> in(5000);
  std::array<std::size_t, 6> src{};
  for (auto& v : in) src[static_cast<std::size_t>(v = static_cast<std::int32_t>(rng.index(6)))]++;
  const auto out = remap_labels(in, m);
  ASSERT_EQ(out.size(), in.size());
  EXPECT_EQ(std::count(out.begin(), out.end(), ClassId::Vegetation), static_cast<std::ptrdiff_t>(src[2] + src[3]));
  EXPECT_EQ(std::count(out.begin(), out.end(), ClassId::Terrain), static_cast<std::ptrdiff_t>(src[0]));
}

TEST(Taxonomy, RemapOutsideUniverseNamesIdAndIndex) {
  const auto m = make({0, 1}, {{0, ClassId::Soil}, {1, ClassId::Water}});
  try {
    remap_labels(std::vector<std::int32_t>{0, 1, 42}, m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Domain);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("42"), std::string::npos);
    EXPECT_NE(msg.find("index 2"), std::string::npos) << msg;
  }
}

TEST(Taxonomy, RemapOutputAlwaysInTaxonomy) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    LabelMapping m;
    const int k = 1 + static_cast<int>(rng.index(20));
    for (int id = 0; id < k; ++id) {
      m.universe.insert(id * 3);
      m.entries[id * 3] = static_cast<ClassId>(rng.index(7));
    }
    std::vector<std::int32_t> in(200);
    for (auto& v : in) v = static_cast<std::int32_t>(rng.index(static_cast<std::uint64_t>(k))) * 3;
    const auto a = remap_labels(in, m);
    const auto b = remap_labels(in, m);
    ASSERT_EQ(a, b);
    for (auto c : a) EXPECT_TRUE(is_valid_class_id(static_cast<int>(c)));
  }
}

TEST(Taxonomy, MaskUnassignedExamples) {
  PointCloud c(4);
  c.label = std::vector<ClassId>{ClassId::Unassigned, ClassId::Vegetation, ClassId::Unassigned, ClassId::Building};
  EXPECT_EQ(mask_unassigned(c), (std::vector<std::size_t>{1, 3}));
  c.label->assign(4, ClassId::Unassigned);
  EXPECT_TRUE(mask_unassigned(c).empty());
  c.label.reset();
  EXPECT_EQ(kind_of([&] { mask_unassigned(c); }), ErrorKind::State);
}

TEST(Taxonomy, MaskUnassignedMatchesLinearCount) {
  Rng rng(99);
  PointCloud c(100000, false);
  c.label.emplace(c.size());
  std::size_t nonzero = 0;
  for (auto& l : *c.label) {
    l = static_cast<ClassId>(rng.index(7));
    nonzero += l != ClassId::Unassigned;
  }
  const auto kept = mask_unassigned(c);
  EXPECT_EQ(kept.size(), nonzero);
  std::vector<bool> seen(c.size(), false);
  for (auto i : kept) {
    ASSERT_NE((*c.label)[i], ClassId::Unassigned);
    seen[i] = true;
  }
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!seen[i]) EXPECT_EQ((*c.label)[i], ClassId::Unassigned);
  }
}

TEST(Errors, ExitCodesPerFamily) {
  EXPECT_EQ(exit_code_for(ErrorKind::Io), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::Validation), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::Incomplete), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::Degenerate), 4);
  EXPECT_EQ(exit_code_for(ErrorKind::UndefinedMetric), 4);
}

TEST(LabelMapping, ShippedTemplatesLoadAndValidate) {
  const std::filesystem::path dir = URBANSEG_MAPPINGS_DIR;
  const std::map<std::string, std::size_t> expected = {
      {"sensaturban.map", 13}, {"sum.map", 6},     {"toronto3d.map", 8},   {"fractal.map", 7},
      {"stpls3d.map", 6},      {"swiss3d.map", 5}, {"hessigheim.map", 11},
  };
  for (const auto& [file, classes] : expected) {
    SCOPED_TRACE(file);
    const LabelMapping m = load_mapping(dir / file);
    EXPECT_FALSE(m.source_name.empty());
    EXPECT_EQ(m.universe.size(), classes);
    EXPECT_NO_THROW(validate_mapping(m));
  }
}
