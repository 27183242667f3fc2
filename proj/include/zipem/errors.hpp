#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace zipem {

/// Bad argument: dimension mismatch, out-of-range probability, bad config value.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation invoked on data in the wrong state (missing responses where none
/// are allowed, no observed responses at a time point, ...).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Design matrix is rank deficient or fully degenerate.
class DesignError : public std::runtime_error {
 public:
  DesignError(const std::string& what, std::vector<std::string> columns)
      : std::runtime_error(what), columns_(std::move(columns)) {}

  const std::vector<std::string>& columns() const noexcept { return columns_; }

 private:
  std::vector<std::string> columns_;
};

/// Information matrix singular even after the ridge retry.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input file does not parse; `row()` is 1-based, 0 when not row specific.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t row)
      : std::runtime_error(row ? what + " (row " + std::to_string(row) + ")" : what), row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace zipem
