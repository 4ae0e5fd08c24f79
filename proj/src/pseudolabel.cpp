#include "urbanseg/pseudolabel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "urbanseg/errors.hpp"
#include "urbanseg/hashing.hpp"

namespace urbanseg {

namespace {

constexpr int K = kNumSemanticClasses;
constexpr double kCrossCheckTolerance = 1e-12;

// Pairwise summation: fixed association order for a given length.
double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

std::array<std::vector<double>, K> confidences_by_class(const PredictionSet& preds) {
  if (preds.classes() != static_cast<std::size_t>(K)) {
    fail(ErrorKind::Shape, "threshold computation needs six-class predictions");
  }
  std::array<std::vector<double>, K> by_class;
  for (std::size_t i = 0; i < preds.rows(); ++i) {
    const std::size_t c = preds.argmax_column(i);
    by_class[c].push_back(preds.at(i, c));
  }
  return by_class;
}

}  // namespace

std::array<std::optional<double>, K> thresholds_plain_mean(const PredictionSet& preds) {
  const auto by_class = confidences_by_class(preds);
  std::array<std::optional<double>, K> out{};
  for (int c = 0; c < K; ++c) {
    const auto& v = by_class[c];
    if (v.empty()) continue;
    out[c] = pairwise_sum(v.data(), v.size()) / static_cast<double>(v.size());
  }
  return out;
}

std::array<std::optional<double>, K> thresholds_unique_weighted(const PredictionSet& preds) {
  auto by_class = confidences_by_class(preds);
  std::array<std::optional<double>, K> out{};
  for (int c = 0; c < K; ++c) {
    auto& v = by_class[c];
    if (v.empty()) continue;
    std::sort(v.begin(), v.end());
    const double total = static_cast<double>(v.size());
    std::vector<double> terms;
    for (std::size_t i = 0; i < v.size();) {
      std::size_t j = i;
      while (j < v.size() && v[j] == v[i]) ++j;
      const double u = v[i];
      const double n_u = static_cast<double>(j - i);
      terms.push_back(u * (n_u / total));
      i = j;
    }
    out[c] = pairwise_sum(terms.data(), terms.size());
  }
  return out;
}

ThresholdTable compute_thresholds(const PredictionSet& preds, int iteration) {
  if (preds.empty()) fail(ErrorKind::Argument, "cannot compute thresholds from an empty prediction set");
  const auto weighted = thresholds_unique_weighted(preds);
  const auto mean = thresholds_plain_mean(preds);
  ThresholdTable t;
  t.iteration = iteration;
  for (int c = 0; c < K; ++c) {
    if (weighted[c].has_value() != mean[c].has_value() ||
        (weighted[c] && std::abs(*weighted[c] - *mean[c]) > kCrossCheckTolerance)) {
      fail(ErrorKind::State, "threshold cross-check failed for " + std::string(class_name(semantic_class(c))));
    }
    t.tau[c] = weighted[c];
  }
  return t;
}

ThresholdTable adjust_thresholds(const ThresholdTable& table, const std::map<ClassId, double>& overrides) {
  ThresholdTable out = table;
  for (const auto& [cls, value] : overrides) {
    if (cls == ClassId::Unassigned) fail(ErrorKind::Domain, "Unassigned has no confidence threshold");
    if (!(value >= 0.0 && value <= 1.0)) {
      fail(ErrorKind::Validation, "threshold override for " + std::string(class_name(cls)) + " must lie in [0,1]");
    }
    auto& slot = out.tau[semantic_index(cls)];
    out.overrides.push_back({cls, slot, value});
    slot = value;
  }
  return out;
}

std::map<ClassId, double> parse_overrides(const std::string& text) {
  std::map<ClassId, double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) fail(ErrorKind::Parse, "override '" + item + "' is not Class=value");
    const ClassId c = parse_class_name(item.substr(0, eq));
    try {
      std::size_t used = 0;
      const std::string num = item.substr(eq + 1);
      const double v = std::stod(num, &used);
      if (used != num.size()) throw std::invalid_argument(num);
      out[c] = v;
    } catch (const std::logic_error&) {
      fail(ErrorKind::Parse, "override '" + item + "' has no numeric value");
    }
  }
  return out;
}

nlohmann::json ThresholdTable::to_json() const {
  nlohmann::json j;
  j["iteration"] = iteration;
  nlohmann::json th = nlohmann::json::array();
  for (int c = 0; c < K; ++c) {
    th.push_back({{"class", std::string(class_name(semantic_class(c)))},
                  {"tau", tau[c] ? nlohmann::json(*tau[c]) : nlohmann::json(nullptr)}});
  }
  j["thresholds"] = th;
  nlohmann::json ov = nlohmann::json::array();
  for (const auto& o : overrides) {
    ov.push_back({{"class", std::string(class_name(o.cls))},
                  {"previous", o.previous ? nlohmann::json(*o.previous) : nlohmann::json(nullptr)},
                  {"value", o.value}});
  }
  j["overrides"] = ov;
  return j;
}

ThresholdTable ThresholdTable::from_json(const nlohmann::json& j) {
  ThresholdTable t;
  try {
    t.iteration = j.at("iteration").get<int>();
    for (const auto& e : j.at("thresholds")) {
      const ClassId c = parse_class_name(e.at("class").get<std::string>());
      if (c == ClassId::Unassigned) fail(ErrorKind::Domain, "threshold table lists Unassigned");
      if (!e.at("tau").is_null()) {
        const double v = e.at("tau").get<double>();
        if (!(v >= 0.0 && v <= 1.0)) fail(ErrorKind::Validation, "threshold outside [0,1]");
        t.tau[semantic_index(c)] = v;
      }
    }
    for (const auto& e : j.at("overrides")) {
      ThresholdOverride o{parse_class_name(e.at("class").get<std::string>()), std::nullopt, e.at("value").get<double>()};
      if (!e.at("previous").is_null()) o.previous = e.at("previous").get<double>();
      t.overrides.push_back(o);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("threshold table: ") + e.what());
  }
  return t;
}

std::string ThresholdTable::id() const { return short_hash(to_json().dump()); }

void save_thresholds(const ThresholdTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << table.to_json().dump(2) << "\n";
}

ThresholdTable load_thresholds(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  return ThresholdTable::from_json(j);
}

std::array<std::size_t, K> PseudoLabelSet::class_counts() const {
  std::array<std::size_t, K> counts{};
  for (auto l : labels) counts[semantic_index(l)]++;
  return counts;
}

PseudoLabelSet filter_pseudolabels(const PredictionSet& preds, const ThresholdTable& table) {
  if (preds.classes() != static_cast<std::size_t>(K)) {
    fail(ErrorKind::Shape, "pseudo-labelling needs six-class predictions");
  }
  PseudoLabelSet out;
  out.iteration = table.iteration;
  out.table_id = table.id();
  for (std::size_t i = 0; i < preds.rows(); ++i) {
    const std::size_t c = preds.argmax_column(i);
    const auto& tau = table.tau[c];
    if (!tau) continue;
    const double conf = preds.at(i, c);
    if (conf > *tau) {
      out.indices.push_back(i);
      out.labels.push_back(semantic_class(static_cast<int>(c)));
      out.confidence.push_back(conf);
    }
  }
  return out;
}

std::vector<ClassId> vanished_classes(const PredictionSet& preds, const PseudoLabelSet& kept) {
  std::array<bool, K> predicted{};
  for (std::size_t i = 0; i < preds.rows(); ++i) predicted[preds.argmax_column(i)] = true;
  const auto counts = kept.class_counts();
  std::vector<ClassId> out;
  for (int c = 0; c < K; ++c) {
    if (predicted[c] && counts[c] == 0) out.push_back(semantic_class(c));
  }
  return out;
}

}  // namespace urbanseg
