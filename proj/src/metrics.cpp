#include "urbanseg/metrics.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "urbanseg/errors.hpp"

namespace urbanseg {

namespace {

constexpr int K = kNumSemanticClasses;

struct Counts {
  double tp, fp, fn;
};

Counts counts_for(const ConfusionMatrix& m, int c) {
  double row = 0.0, col = 0.0;
  for (int j = 0; j < K; ++j) {
    row += static_cast<double>(m[c][j]);
    col += static_cast<double>(m[j][c]);
  }
  const double tp = static_cast<double>(m[c][c]);
  return {tp, col - tp, row - tp};
}

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) fail(ErrorKind::Parse, "invalid number '" + s + "'");
  return v;
}

}  // namespace

ConfusionMatrix confusion(std::span<const ClassId> gt, std::span<const ClassId> pred) {
  if (gt.size() != pred.size()) {
    fail(ErrorKind::Alignment, "ground truth has " + std::to_string(gt.size()) + " labels, prediction has " +
                                   std::to_string(pred.size()));
  }
  ConfusionMatrix m{};
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] == ClassId::Unassigned || pred[i] == ClassId::Unassigned) {
      fail(ErrorKind::Validation, "Unassigned label at index " + std::to_string(i) + " reached the confusion matrix");
    }
    m[semantic_index(gt[i])][semantic_index(pred[i])]++;
  }
  return m;
}

IouScores iou_miou(const ConfusionMatrix& m) {
  IouScores s;
  double sum = 0.0;
  int used = 0;
  for (int c = 0; c < K; ++c) {
    const auto [tp, fp, fn] = counts_for(m, c);
    const double denom = tp + fp + fn;
    if (denom == 0.0) continue;
    s.iou[c] = tp / denom;
    sum += *s.iou[c];
    ++used;
  }
  if (used == 0) fail(ErrorKind::UndefinedMetric, "no class occurs in ground truth or prediction");
  s.miou = sum / used;
  return s;
}

F1Scores f1_scores(const ConfusionMatrix& m) {
  F1Scores s;
  double sum = 0.0;
  int used = 0;
  for (int c = 0; c < K; ++c) {
    const auto [tp, fp, fn] = counts_for(m, c);
    const double denom = 2.0 * tp + fp + fn;
    if (denom == 0.0) continue;
    s.f1[c] = 2.0 * tp / denom;
    sum += *s.f1[c];
    ++used;
  }
  if (used == 0) fail(ErrorKind::UndefinedMetric, "no class occurs in ground truth or prediction");
  s.macro = sum / used;
  return s;
}

MetricsReport make_report(const ConfusionMatrix& m, std::uint64_t excluded) {
  MetricsReport r;
  r.confusion = m;
  const auto iou = iou_miou(m);
  const auto f1 = f1_scores(m);
  r.iou = iou.iou;
  r.miou = iou.miou;
  r.f1 = f1.f1;
  r.macro_f1 = f1.macro;
  for (const auto& row : m) {
    for (auto v : row) r.evaluated += v;
  }
  r.excluded = excluded;
  return r;
}

MetricsReport evaluate_labels(std::span<const ClassId> gt, std::span<const ClassId> pred) {
  if (gt.size() != pred.size()) {
    fail(ErrorKind::Alignment, "ground truth has " + std::to_string(gt.size()) + " labels, prediction has " +
                                   std::to_string(pred.size()));
  }
  ConfusionMatrix m{};
  std::uint64_t excluded = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] == ClassId::Unassigned) {
      ++excluded;
      continue;
    }
    if (pred[i] == ClassId::Unassigned) {
      fail(ErrorKind::Validation, "prediction at index " + std::to_string(i) + " is Unassigned");
    }
    m[semantic_index(gt[i])][semantic_index(pred[i])]++;
  }
  return make_report(m, excluded);
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["confusion"] = r.confusion;
  nlohmann::json iou = nlohmann::json::object(), f1 = nlohmann::json::object();
  for (int c = 0; c < K; ++c) {
    const std::string name(class_name(semantic_class(c)));
    iou[name] = r.iou[c] ? nlohmann::json(*r.iou[c]) : nlohmann::json(nullptr);
    f1[name] = r.f1[c] ? nlohmann::json(*r.f1[c]) : nlohmann::json(nullptr);
  }
  j["iou"] = iou;
  j["f1"] = f1;
  j["miou"] = r.miou;
  j["macro_f1"] = r.macro_f1;
  j["evaluated"] = r.evaluated;
  j["excluded"] = r.excluded;
  return j;
}

MetricsReport report_from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.confusion = j.at("confusion").get<ConfusionMatrix>();
  for (int c = 0; c < K; ++c) {
    const std::string name(class_name(semantic_class(c)));
    if (!j.at("iou").at(name).is_null()) r.iou[c] = j.at("iou").at(name).get<double>();
    if (!j.at("f1").at(name).is_null()) r.f1[c] = j.at("f1").at(name).get<double>();
  }
  r.miou = j.at("miou").get<double>();
  r.macro_f1 = j.at("macro_f1").get<double>();
  r.evaluated = j.at("evaluated").get<std::uint64_t>();
  r.excluded = j.at("excluded").get<std::uint64_t>();
  return r;
}

std::string render_text(std::span<const ReportRow> rows, const std::string& key_header) {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-10s", key_header.c_str());
  out << buf;
  for (int c = 0; c < K; ++c) {
    std::snprintf(buf, sizeof(buf), " %16s", std::string(class_name(semantic_class(c))).c_str());
    out << buf;
  }
  out << "          mIoU            F1\n";
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%-10s", row.key.c_str());
    out << buf;
    for (int c = 0; c < K; ++c) {
      if (row.report.iou[c]) std::snprintf(buf, sizeof(buf), " %16.2f", 100.0 * *row.report.iou[c]);
      else std::snprintf(buf, sizeof(buf), " %16s", "-");
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), " %13.2f %13.2f\n", 100.0 * row.report.miou, 100.0 * row.report.macro_f1);
    out << buf;
  }
  return out.str();
}

std::string render_csv(std::span<const ReportRow> rows, const std::string& key_header) {
  std::ostringstream out;
  out << key_header;
  for (int c = 0; c < K; ++c) out << "," << class_name(semantic_class(c));
  out << ",mIoU,F1\n";
  for (const auto& row : rows) {
    out << row.key;
    for (int c = 0; c < K; ++c) {
      out << ",";
      if (row.report.iou[c]) out << shortest(*row.report.iou[c]);
    }
    out << "," << shortest(row.report.miou) << "," << shortest(row.report.macro_f1) << "\n";
  }
  return out.str();
}

std::vector<CsvRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<CsvRow> rows;
  if (!std::getline(in, line)) fail(ErrorKind::Parse, "empty CSV");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != static_cast<std::size_t>(K + 3)) {
      fail(ErrorKind::Parse, "CSV row has " + std::to_string(fields.size()) + " fields, expected " +
                                 std::to_string(K + 3));
    }
    CsvRow row;
    row.key = fields[0];
    for (int c = 0; c < K; ++c) {
      if (!fields[c + 1].empty()) row.iou[c] = parse_double(fields[c + 1]);
    }
    row.miou = parse_double(fields[K + 1]);
    row.f1 = parse_double(fields[K + 2]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace urbanseg
