#pragma once

#include <stdexcept>
#include <string>

namespace khopfair {

// Error taxonomy mirrored by the CLI exit codes:
//   io_error -> 2 (unreadable or malformed input, domain gaps)
//   undefined_metric_error -> 3 (metric has no value on this input)
//   numeric_error -> 4 (non-finite value produced during computation)

class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

class undefined_metric_error : public std::runtime_error {
 public:
  explicit undefined_metric_error(const std::string& what) : std::runtime_error(what) {}
};

class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace khopfair
