#pragma once

#include <stdexcept>
#include <string>

namespace kbx {

enum class ErrorKind {
  kSyntaxError,
  kUnknownSort,
  kDuplicateCellName,
  kNoInputCell,
  kParseError,
  kAmbiguousParse,
  kUnboundVariable,
  kAnonymousOnRight,
  kNotGround,
  kNonGroundSideCondition,
  kUnknownBuiltin,
  kTypeMismatch,
  kStepLimitExceeded,
  kUntypedTerm,
  kMissingDefault,
  kSortMismatch,
  kExecutionFailed,
  kLintError,
  kIoError,
};

const char* errorKindName(ErrorKind kind);

/// Every failure raised by the library. `kind()` lets callers branch without
/// string matching; `line()`/`position()` are filled when the error points at
/// input text (1-based line, 0-based byte offset), otherwise -1.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, int line = -1, long position = -1)
      : std::runtime_error(std::string(errorKindName(kind)) + ": " + message),
        kind_(kind),
        line_(line),
        position_(position) {}

  ErrorKind kind() const { return kind_; }
  int line() const { return line_; }
  long position() const { return position_; }

 private:
  ErrorKind kind_;
  int line_;
  long position_;
};

}  // namespace kbx
