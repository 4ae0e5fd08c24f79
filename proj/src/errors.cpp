#include "urbanseg/errors.hpp"

namespace urbanseg {

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io: return "I/O";
    case ErrorKind::Format: return "format";
    case ErrorKind::Corruption: return "corruption";
    case ErrorKind::Range: return "range";
    case ErrorKind::Alignment: return "alignment";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Incomplete: return "incompleteness";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::State: return "state";
    case ErrorKind::Argument: return "argument";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Infeasible: return "infeasibility";
    case ErrorKind::Degenerate: return "degeneracy";
    case ErrorKind::UndefinedMetric: return "undefined-metric";
  }
  return "unknown";
}

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io:
      return 2;
    case ErrorKind::Infeasible:
    case ErrorKind::Degenerate:
    case ErrorKind::UndefinedMetric:
      return 4;
    default:
      return 3;
  }
}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace urbanseg
