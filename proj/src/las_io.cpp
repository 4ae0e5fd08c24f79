#include "urbanseg/las_io.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "byte_io.hpp"
#include "urbanseg/errors.hpp"

namespace urbanseg {

using detail::ByteWriter;
using detail::get_le;

namespace {

constexpr double kScanAngleUnit = 0.006;  // degrees per raw unit, formats 6-10

// Header field offsets of the LAS 1.4 public header block.
constexpr std::size_t kOffVersionMajor = 24;
constexpr std::size_t kOffHeaderSize = 94;
constexpr std::size_t kOffPointData = 96;
constexpr std::size_t kOffPointFormat = 104;
constexpr std::size_t kOffRecordLength = 105;
constexpr std::size_t kOffLegacyCount = 107;
constexpr std::size_t kOffScale = 131;
constexpr std::size_t kOffOffset = 155;
constexpr std::size_t kOffMaxX = 179;
constexpr std::size_t kOffEvlrCount = 243;
constexpr std::size_t kOffPointCount = 247;

}  // namespace

std::uint16_t las_record_length(std::uint8_t point_format) {
  switch (point_format) {
    case 7: return 36;
    case 8: return 38;
    default:
      fail(ErrorKind::Format, "unsupported LAS point record format " + std::to_string(point_format) +
                                  " (supported: 7, 8)");
  }
}

LasHeaderInfo make_las_header(const PointCloud& cloud, double scale, std::uint8_t point_format) {
  LasHeaderInfo h;
  h.point_format = point_format;
  h.point_record_length = las_record_length(point_format);
  h.scale = {scale, scale, scale};
  if (!cloud.empty()) {
    const std::vector<double>* cols[3] = {&cloud.x, &cloud.y, &cloud.z};
    const double snap = 1000.0 * scale;
    for (int a = 0; a < 3; ++a) {
      double lo = std::numeric_limits<double>::infinity();
      for (double v : *cols[a]) lo = std::min(lo, v);
      h.offset[static_cast<std::size_t>(a)] = std::isfinite(lo) ? std::floor(lo / snap) * snap : 0.0;
    }
  }
  return h;
}

LasClassMap::LasClassMap() {
  for (int i = 0; i < kNumClassIds; ++i) {
    forward_[static_cast<std::size_t>(i)] = static_cast<ClassId>(i);
    inverse_[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
  }
}

LasClassMap::LasClassMap(const LabelMapping& mapping) {
  validate_mapping(mapping);
  for (const auto& [id, c] : mapping.entries) {
    if (id < 0 || id > 255) {
      fail(ErrorKind::Domain, "class map id " + std::to_string(id) + " does not fit a LAS classification byte");
    }
    forward_[static_cast<std::size_t>(id)] = c;
    auto& inv = inverse_[static_cast<std::size_t>(c)];
    if (!inv) inv = static_cast<std::uint8_t>(id);  // entries are ordered, so the first is the smallest
  }
}

ClassId LasClassMap::decode(std::uint8_t byte, std::size_t point_index) const {
  const auto& c = forward_[byte];
  if (!c) {
    fail(ErrorKind::Domain, "classification " + std::to_string(byte) + " of point " +
                                std::to_string(point_index) + " is not covered by the class map");
  }
  return *c;
}

std::uint8_t LasClassMap::encode(ClassId c) const {
  const auto& b = inverse_[static_cast<std::size_t>(c)];
  if (!b) {
    fail(ErrorKind::Domain, "class map has no classification byte for " + std::string(class_name(c)));
  }
  return *b;
}

std::pair<PointCloud, LasHeaderInfo> read_las(const std::filesystem::path& path,
                                              const LasReadOptions& options) {
  const std::vector<std::uint8_t> bytes = detail::read_file(path);
  const std::uint8_t* p = bytes.data();

  if (bytes.size() < 4 || std::string_view(reinterpret_cast<const char*>(p), 4) != "LASF") {
    fail(ErrorKind::Format, path.string() + " is not a LAS file");
  }
  if (bytes.size() < kLas14HeaderSize) {
    if (bytes.size() > kOffVersionMajor + 1 && !(p[kOffVersionMajor] == 1 && p[kOffVersionMajor + 1] == 4)) {
      fail(ErrorKind::Format, "LAS version " + std::to_string(p[kOffVersionMajor]) + "." +
                                  std::to_string(p[kOffVersionMajor + 1]) + " is not supported (need 1.4)");
    }
    fail(ErrorKind::Corruption, "header truncated at byte offset " + std::to_string(bytes.size()));
  }

  LasHeaderInfo h;
  h.version_major = p[kOffVersionMajor];
  h.version_minor = p[kOffVersionMajor + 1];
  if (h.version_major != 1 || h.version_minor != 4) {
    fail(ErrorKind::Format, "LAS version " + std::to_string(h.version_major) + "." +
                                std::to_string(h.version_minor) + " is not supported (need 1.4)");
  }
  const auto header_size = get_le<std::uint16_t>(p + kOffHeaderSize);
  if (header_size < kLas14HeaderSize) {
    fail(ErrorKind::Corruption, "header size " + std::to_string(header_size) + " is below 375");
  }
  const std::uint8_t format_byte = p[kOffPointFormat];
  if (format_byte & 0xC0) fail(ErrorKind::Format, "compressed (LAZ) point data is not supported");
  h.point_format = format_byte;
  const std::uint16_t min_length = las_record_length(h.point_format);
  h.point_record_length = get_le<std::uint16_t>(p + kOffRecordLength);
  if (h.point_record_length < min_length) {
    fail(ErrorKind::Corruption, "record length " + std::to_string(h.point_record_length) +
                                    " is shorter than format " + std::to_string(h.point_format) +
                                    " requires (" + std::to_string(min_length) + ")");
  }
  for (std::size_t a = 0; a < 3; ++a) {
    h.scale[a] = get_le<double>(p + kOffScale + 8 * a);
    h.offset[a] = get_le<double>(p + kOffOffset + 8 * a);
    h.max[a] = get_le<double>(p + kOffMaxX + 16 * a);
    h.min[a] = get_le<double>(p + kOffMaxX + 16 * a + 8);
  }
  h.point_count = get_le<std::uint64_t>(p + kOffPointCount);
  const auto legacy_count = get_le<std::uint32_t>(p + kOffLegacyCount);
  if (legacy_count != 0 && legacy_count != h.point_count) {
    fail(ErrorKind::Corruption, "legacy point count " + std::to_string(legacy_count) +
                                    " disagrees with point count " + std::to_string(h.point_count));
  }

  const std::uint64_t data_start = get_le<std::uint32_t>(p + kOffPointData);
  const std::uint64_t len = h.point_record_length;
  if (data_start < header_size || data_start > bytes.size()) {
    fail(ErrorKind::Corruption, "offset to point data " + std::to_string(data_start) + " is invalid");
  }
  const std::uint64_t available = (bytes.size() - data_start) / len;
  if (available < h.point_count) {
    fail(ErrorKind::Corruption, "truncated point record block: record " + std::to_string(available) +
                                    " starts at byte offset " +
                                    std::to_string(data_start + available * len) + " but the file ends at " +
                                    std::to_string(bytes.size()));
  }
  const auto evlr_count = get_le<std::uint32_t>(p + kOffEvlrCount);
  if (evlr_count == 0 && data_start + h.point_count * len != bytes.size()) {
    fail(ErrorKind::Corruption, "header declares " + std::to_string(h.point_count) +
                                    " records but the point block holds " +
                                    std::to_string((bytes.size() - data_start) / static_cast<double>(len)));
  }

  const std::size_t n = static_cast<std::size_t>(h.point_count);
  PointCloud cloud(n, true);
  std::vector<ClassId> labels(n);
  bool any_label = false;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* rec = p + data_start + i * len;
    cloud.x[i] = get_le<std::int32_t>(rec + 0) * h.scale[0] + h.offset[0];
    cloud.y[i] = get_le<std::int32_t>(rec + 4) * h.scale[1] + h.offset[1];
    cloud.z[i] = get_le<std::int32_t>(rec + 8) * h.scale[2] + h.offset[2];
    (*cloud.intensity)[i] = get_le<std::uint16_t>(rec + 12);
    cloud.return_number[i] = rec[14] & 0x0F;
    cloud.num_returns[i] = rec[14] >> 4;
    cloud.scan_direction[i] = (rec[15] >> 6) & 0x01;
    const std::uint8_t cls = rec[16];
    labels[i] = options.class_map.decode(cls, i);
    if (labels[i] != ClassId::Unassigned) any_label = true;
    cloud.scan_angle[i] = get_le<std::int16_t>(rec + 18) * kScanAngleUnit;
    cloud.gps_time[i] = get_le<double>(rec + 22);
    cloud.r[i] = get_le<std::uint16_t>(rec + 30);
    cloud.g[i] = get_le<std::uint16_t>(rec + 32);
    cloud.b[i] = get_le<std::uint16_t>(rec + 34);
    if (cloud.return_number[i] < 1 || cloud.num_returns[i] < cloud.return_number[i]) {
      fail(ErrorKind::Validation, "point " + std::to_string(i) + " has return " +
                                      std::to_string(cloud.return_number[i]) + " of " +
                                      std::to_string(cloud.num_returns[i]));
    }
  }
  if (any_label) cloud.label = std::move(labels);
  return {std::move(cloud), h};
}

void write_las(const PointCloud& cloud, const LasHeaderInfo& header, const std::filesystem::path& path,
               const LasClassMap& class_map) {
  cloud.validate();
  const std::uint16_t len = las_record_length(header.point_format);
  const std::size_t n = cloud.size();
  for (std::size_t a = 0; a < 3; ++a) {
    if (!(header.scale[a] > 0.0) || !std::isfinite(header.scale[a])) {
      fail(ErrorKind::Argument, "LAS scale must be positive and finite");
    }
  }

  ByteWriter points;
  points.bytes().reserve(n * len);
  std::array<double, 3> lo{0, 0, 0}, hi{0, 0, 0};
  std::array<std::uint64_t, 15> by_return{};
  const std::vector<double>* cols[3] = {&cloud.x, &cloud.y, &cloud.z};

  for (std::size_t i = 0; i < n; ++i) {
    std::array<std::int32_t, 3> raw{};
    for (std::size_t a = 0; a < 3; ++a) {
      const double v = (*cols[a])[i];
      const double q = std::round((v - header.offset[a]) / header.scale[a]);
      if (!std::isfinite(q) || q < std::numeric_limits<std::int32_t>::min() ||
          q > std::numeric_limits<std::int32_t>::max()) {
        fail(ErrorKind::Range, "point " + std::to_string(i) + ": coordinate " + std::to_string(v) +
                                   " is not representable with scale " + std::to_string(header.scale[a]) +
                                   " and offset " + std::to_string(header.offset[a]));
      }
      raw[a] = static_cast<std::int32_t>(q);
      const double decoded = raw[a] * header.scale[a] + header.offset[a];
      if (i == 0 || decoded < lo[a]) lo[a] = decoded;
      if (i == 0 || decoded > hi[a]) hi[a] = decoded;
    }
    const double angle = std::round(cloud.scan_angle[i] / kScanAngleUnit);
    if (angle < std::numeric_limits<std::int16_t>::min() || angle > std::numeric_limits<std::int16_t>::max()) {
      fail(ErrorKind::Range, "point " + std::to_string(i) + ": scan angle out of range");
    }
    if (cloud.return_number[i] > 15 || cloud.num_returns[i] > 15) {
      fail(ErrorKind::Range, "point " + std::to_string(i) + ": return numbers exceed 15");
    }
    const std::uint8_t cls = cloud.label ? class_map.encode((*cloud.label)[i]) : 0;

    points.put(raw[0]);
    points.put(raw[1]);
    points.put(raw[2]);
    points.put(cloud.intensity ? (*cloud.intensity)[i] : std::uint16_t{0});
    points.put(static_cast<std::uint8_t>(cloud.return_number[i] | (cloud.num_returns[i] << 4)));
    points.put(static_cast<std::uint8_t>((cloud.scan_direction[i] & 1) << 6));
    points.put(cls);
    points.put(std::uint8_t{0});  // user data
    points.put(static_cast<std::int16_t>(angle));
    points.put(std::uint16_t{0});  // point source id
    points.put(cloud.gps_time[i]);
    points.put(cloud.r[i]);
    points.put(cloud.g[i]);
    points.put(cloud.b[i]);
    if (header.point_format == 8) points.put(std::uint16_t{0});  // NIR
    by_return[cloud.return_number[i] - 1]++;
  }

  ByteWriter out;
  out.put_bytes("LASF", 4);
  out.put(std::uint16_t{0});       // file source id
  out.put(std::uint16_t{0x0010});  // global encoding: WKT bit, required for formats >= 6
  out.pad(16);                     // project GUID
  out.put(std::uint8_t{1});
  out.put(std::uint8_t{4});
  out.put_bytes("urbanseg", 32);
  out.put_bytes("urbanseg las_io", 32);
  out.put(std::uint16_t{0});  // creation day
  out.put(std::uint16_t{0});  // creation year
  out.put(static_cast<std::uint16_t>(kLas14HeaderSize));
  out.put(static_cast<std::uint32_t>(kLas14HeaderSize));  // offset to point data
  out.put(std::uint32_t{0});                               // VLR count
  out.put(header.point_format);
  out.put(len);
  out.put(std::uint32_t{0});  // legacy point count (0 for formats > 5)
  out.pad(20);                // legacy points by return
  for (double s : header.scale) out.put(s);
  for (double o : header.offset) out.put(o);
  for (std::size_t a = 0; a < 3; ++a) {
    out.put(hi[a]);
    out.put(lo[a]);
  }
  out.put(std::uint64_t{0});  // waveform data start
  out.put(std::uint64_t{0});  // first EVLR
  out.put(std::uint32_t{0});  // EVLR count
  out.put(static_cast<std::uint64_t>(n));
  for (auto c : by_return) out.put(c);

  auto& bytes = out.bytes();
  bytes.insert(bytes.end(), points.bytes().begin(), points.bytes().end());
  detail::write_file(path, bytes);
}

}  // namespace urbanseg
