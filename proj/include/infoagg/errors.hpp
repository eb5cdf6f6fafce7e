#pragma once

#include <stdexcept>
#include <string>

namespace infoagg {

// Error taxonomy. The CLI maps each class onto its own exit status.

// A value outside the mathematical domain of a function (e.g. p >= 1 for a
// logit, a non-finite argument).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Mismatched lengths or shapes between arguments.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or semantically invalid input (empty answer vector, N < 2 where a
// peer is required, unknown method name, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Unparseable file content. Carries the 1-based line number when known.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, long line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what
                                    : what),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

// A computation would exceed its configured budget (enumeration size).
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace infoagg
