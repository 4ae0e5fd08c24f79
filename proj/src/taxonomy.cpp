#include "urbanseg/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "urbanseg/errors.hpp"
#include "urbanseg/point_cloud.hpp"

namespace urbanseg {

namespace {

constexpr std::array<std::string_view, kNumClassIds> kNames = {
    "Unassigned", "Soil", "Terrain", "Vegetation", "Building", "Street Elements", "Water"};

std::string normalize_name(std::string_view s) {
  std::string out;
  for (char ch : s) {
    if (ch == ' ' || ch == '_' || ch == '-') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::int32_t parse_id(std::string_view s, int line_no) {
  s = trim(s);
  std::int32_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": invalid class id '" +
                               std::string(s) + "'");
  }
  return v;
}

std::set<std::int32_t> parse_id_list(std::string_view s, int line_no) {
  std::set<std::int32_t> ids;
  while (!s.empty()) {
    auto comma = s.find(',');
    std::string_view item = trim(s.substr(0, comma));
    s = comma == std::string_view::npos ? std::string_view{} : s.substr(comma + 1);
    if (item.empty()) continue;
    if (auto dots = item.find(".."); dots != std::string_view::npos) {
      std::int32_t lo = parse_id(item.substr(0, dots), line_no);
      std::int32_t hi = parse_id(item.substr(dots + 2), line_no);
      if (hi < lo) {
        fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": empty range '" +
                                   std::string(item) + "'");
      }
      for (std::int32_t v = lo; v <= hi; ++v) ids.insert(v);
    } else {
      ids.insert(parse_id(item, line_no));
    }
  }
  return ids;
}

}  // namespace

bool is_valid_class_id(int value) noexcept { return value >= 0 && value < kNumClassIds; }

std::string_view class_name(ClassId c) noexcept {
  auto i = static_cast<std::size_t>(c);
  return i < kNames.size() ? kNames[i] : std::string_view{"?"};
}

ClassId parse_class_name(std::string_view name) {
  const std::string key = normalize_name(name);
  for (int i = 0; i < kNumClassIds; ++i) {
    if (normalize_name(kNames[static_cast<std::size_t>(i)]) == key) return static_cast<ClassId>(i);
  }
  fail(ErrorKind::Parse, "unknown class name '" + std::string(name) + "'");
}

LabelMapping parse_mapping(std::string_view text) {
  LabelMapping m;
  bool have_universe = false;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string_view key = trim(line.substr(0, eq));
    std::string_view value = trim(line.substr(eq + 1));
    if (key == "source") {
      m.source_name = std::string(value);
    } else if (key == "universe") {
      if (have_universe) {
        fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": universe declared twice");
      }
      m.universe = parse_id_list(value, line_no);
      have_universe = true;
    } else {
      std::int32_t id = parse_id(key, line_no);
      ClassId target = parse_class_name(value);
      if (!m.entries.emplace(id, target).second) {
        fail(ErrorKind::Parse, "line " + std::to_string(line_no) + ": source id " +
                                   std::to_string(id) + " assigned twice");
      }
    }
  }
  if (!have_universe) fail(ErrorKind::Parse, "mapping declares no universe");
  return m;
}

LabelMapping load_mapping(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open mapping file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_mapping(ss.str());
}

std::string format_mapping(const LabelMapping& m) {
  std::ostringstream out;
  if (!m.source_name.empty()) out << "source = " << m.source_name << "\n";
  out << "universe = ";
  bool first = true;
  for (auto id : m.universe) {
    out << (first ? "" : ", ") << id;
    first = false;
  }
  out << "\n";
  for (const auto& [id, c] : m.entries) out << id << " = " << class_name(c) << "\n";
  return out.str();
}

LabelMapping identity_mapping() {
  LabelMapping m;
  m.source_name = "identity";
  for (int i = 0; i < kNumClassIds; ++i) {
    m.universe.insert(i);
    m.entries.emplace(i, static_cast<ClassId>(i));
  }
  return m;
}

void validate_mapping(const LabelMapping& m) {
  std::vector<std::int32_t> missing;
  for (auto id : m.universe) {
    if (!m.entries.contains(id)) missing.push_back(id);
  }
  if (!missing.empty()) {
    std::string list;
    for (auto id : missing) list += (list.empty() ? "" : ", ") + std::to_string(id);
    fail(ErrorKind::Incomplete, "mapping '" + m.source_name + "' has no entry for ids {" + list + "}");
  }
  for (const auto& [id, c] : m.entries) {
    if (!m.universe.contains(id)) {
      fail(ErrorKind::Validation, "mapping '" + m.source_name + "' maps id " + std::to_string(id) +
                                      " which is outside the declared universe");
    }
  }
}

std::vector<ClassId> remap_labels(std::span<const std::int32_t> labels, const LabelMapping& m) {
  std::vector<ClassId> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = m.entries.find(labels[i]);
    if (it == m.entries.end() || !m.universe.contains(labels[i])) {
      fail(ErrorKind::Domain, "label " + std::to_string(labels[i]) + " at index " +
                                  std::to_string(i) + " is outside the universe of '" +
                                  m.source_name + "'");
    }
    out[i] = it->second;
  }
  return out;
}

std::vector<std::size_t> mask_unassigned(const PointCloud& cloud) {
  if (!cloud.label) fail(ErrorKind::State, "cloud has no label column");
  std::vector<std::size_t> idx;
  const auto& labels = *cloud.label;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != ClassId::Unassigned) idx.push_back(i);
  }
  return idx;
}

}  // namespace urbanseg
