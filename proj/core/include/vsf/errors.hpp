#pragma once

#include <stdexcept>
#include <string>

namespace vsf {

/// File/container format violations; each kind maps to a distinct failure.
class FormatError : public std::runtime_error {
 public:
  enum class Kind { BadMagic, Truncated, BadVersion, Inconsistent, Io };

  FormatError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Numeric failures (non-finite loss, degenerate statistics).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vsf
