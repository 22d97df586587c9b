#pragma once

#include <stdexcept>
#include <string>

namespace kerrcat {

/// A state whose squared norm fell below the representable floor, e.g.
/// after conditioning on an astronomically unlikely homodyne outcome.
class DegenerateStateError : public std::runtime_error {
 public:
  explicit DegenerateStateError(const std::string& what) : std::runtime_error(what) {}
};

/// A Fock expansion whose truncated tail exceeds the allowed weight.
class TruncationError : public std::runtime_error {
 public:
  explicit TruncationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kerrcat
