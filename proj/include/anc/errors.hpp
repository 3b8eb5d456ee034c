#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace anc {

// A caller broke a documented precondition (bad length, bad range, bad config).
class contract_error : public std::invalid_argument {
 public:
  explicit contract_error(const std::string& what) : std::invalid_argument(what) {}
};

// File missing or not readable/writable.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

// File exists but its content is not valid for the expected format.
class parse_error : public std::runtime_error {
 public:
  explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

// Parsed data contains NaN or infinite values.
class nonfinite_error : public parse_error {
 public:
  explicit nonfinite_error(const std::string& what) : parse_error(what) {}
};

// An adaptive loop blew up. Carries the sample (or epoch) index where it happened.
class divergence_error : public std::runtime_error {
 public:
  divergence_error(const std::string& what, std::uint64_t index)
      : std::runtime_error(what + " at index " + std::to_string(index)), index_(index) {}
  std::uint64_t index() const { return index_; }

 private:
  std::uint64_t index_;
};

}  // namespace anc
