#include "urbanseg/prediction_io.hpp"

#include <string>
#include <string_view>

#include "byte_io.hpp"
#include "urbanseg/errors.hpp"

namespace urbanseg {

using detail::ByteWriter;
using detail::get_le;

namespace {

constexpr std::string_view kPredMagic = "USEGPRED";
constexpr std::string_view kConfMagic = "USEGCONF";

void check_magic(const std::vector<std::uint8_t>& bytes, std::string_view magic,
                 const std::filesystem::path& path) {
  if (bytes.size() < kPredHeaderSize ||
      std::string_view(reinterpret_cast<const char*>(bytes.data()), magic.size()) != magic) {
    fail(ErrorKind::Format, path.string() + " is not a " + std::string(magic) + " file");
  }
  const auto version = get_le<std::uint32_t>(bytes.data() + 8);
  if (version != kPredVersion) {
    fail(ErrorKind::Format, path.string() + ": unsupported version " + std::to_string(version));
  }
}

}  // namespace

void write_predictions(const PredictionSet& set, const std::filesystem::path& path) {
  set.validate();
  ByteWriter out;
  out.bytes().reserve(kPredHeaderSize + 8 * set.rows() * set.classes());
  out.put_bytes(kPredMagic, 8);
  out.put(kPredVersion);
  out.put(static_cast<std::uint32_t>(set.classes()));
  out.put(static_cast<std::uint64_t>(set.rows()));
  out.put(std::uint64_t{0});
  for (std::size_t c = 0; c < set.classes(); ++c) {
    for (std::size_t i = 0; i < set.rows(); ++i) out.put(set.at(i, c));
  }
  detail::write_file(path, out.bytes());
}

PredictionSet read_predictions(const std::filesystem::path& path, std::optional<std::size_t> expected_rows) {
  const auto bytes = detail::read_file(path);
  check_magic(bytes, kPredMagic, path);
  const std::uint8_t* p = bytes.data();
  const auto classes = get_le<std::uint32_t>(p + 12);
  const auto rows = get_le<std::uint64_t>(p + 16);
  if (classes == 0) fail(ErrorKind::Corruption, path.string() + ": class count is zero");
  if (expected_rows && *expected_rows != rows) {
    fail(ErrorKind::Alignment, path.string() + " holds " + std::to_string(rows) +
                                   " rows but the cloud has " + std::to_string(*expected_rows) + " points");
  }
  const std::uint64_t payload = bytes.size() - kPredHeaderSize;
  if (rows > payload / 8 / classes || payload != 8 * rows * classes) {
    fail(ErrorKind::Corruption, path.string() + ": payload of " + std::to_string(payload) +
                                    " bytes does not match " + std::to_string(rows) + " x " +
                                    std::to_string(classes) + " probabilities");
  }
  PredictionSet set(rows, classes);
  const std::uint8_t* col = p + kPredHeaderSize;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < rows; ++i) {
      set.at(i, c) = get_le<double>(col);
      col += 8;
    }
  }
  set.validate();
  return set;
}

void write_confidence_sidecar(const ConfidenceColumn& column, const std::filesystem::path& path) {
  if (column.indices.size() != column.confidence.size()) {
    fail(ErrorKind::Alignment, "confidence sidecar index and value columns differ in length");
  }
  ByteWriter out;
  out.put_bytes(kConfMagic, 8);
  out.put(kPredVersion);
  out.put(std::uint32_t{0});
  out.put(static_cast<std::uint64_t>(column.indices.size()));
  out.put(std::uint64_t{0});
  for (std::size_t i = 0; i < column.indices.size(); ++i) {
    out.put(column.indices[i]);
    out.put(column.confidence[i]);
  }
  detail::write_file(path, out.bytes());
}

ConfidenceColumn read_confidence_sidecar(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  check_magic(bytes, kConfMagic, path);
  const auto rows = get_le<std::uint64_t>(bytes.data() + 16);
  if (bytes.size() - kPredHeaderSize != 16 * rows) {
    fail(ErrorKind::Corruption, path.string() + ": payload does not match " + std::to_string(rows) + " rows");
  }
  ConfidenceColumn col;
  col.indices.resize(rows);
  col.confidence.resize(rows);
  const std::uint8_t* p = bytes.data() + kPredHeaderSize;
  for (std::size_t i = 0; i < rows; ++i, p += 16) {
    col.indices[i] = get_le<std::uint64_t>(p);
    col.confidence[i] = get_le<double>(p + 8);
  }
  return col;
}

}  // namespace urbanseg
