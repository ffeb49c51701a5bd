#pragma once

#include <stdexcept>
#include <string>

namespace nnsc {

/// Bad caller input: dimensions, ranges, malformed files.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameter combination that cannot produce a valid search.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal consistency check failed. Indicates a bug, not bad input.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace nnsc
