#pragma once

#include <stdexcept>
#include <string>

namespace urbanseg {

/// Error families. The CLI maps each family to a process exit code.
enum class ErrorKind {
  Io,            // file missing, unreadable, short write
  Format,        // unsupported LAS version / point format, bad magic
  Corruption,    // truncated or inconsistent binary content
  Range,         // value cannot be represented in the target encoding
  Alignment,     // two aligned collections disagree on length
  Validation,    // content violates a documented constraint
  Parse,         // malformed text input
  Incomplete,    // mapping is not total over its universe
  Domain,        // value outside the declared universe
  State,         // a required column or artifact is missing
  Argument,      // invalid function argument
  Shape,         // matrix dimension mismatch
  Infeasible,    // request cannot be satisfied (e.g. fewer blocks than splits)
  Degenerate,    // numeric degeneracy (single class, empty set)
  UndefinedMetric,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

/// Exit code for the CLI: I/O = 2, validation = 3, numeric/degenerate = 4.
int exit_code_for(ErrorKind kind) noexcept;

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace urbanseg
