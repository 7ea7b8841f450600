#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cbf {

// Malformed arguments: non-finite state, empty child list, dimension mismatch.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Geometric degeneracy, e.g. two robots at the exact same position.
class DegenerateStateError : public std::runtime_error {
 public:
  explicit DegenerateStateError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a constraint is requested at a state outside the barrier's
// positive set (or too close to a non-differentiable selection point to
// produce one). Carries the labels of the atoms that are at zero.
class InvarianceViolation : public std::runtime_error {
 public:
  InvarianceViolation(const std::string& what, std::vector<std::string> atom_ids)
      : std::runtime_error(what), atom_ids_(std::move(atom_ids)) {}
  const std::vector<std::string>& atom_ids() const { return atom_ids_; }

 private:
  std::vector<std::string> atom_ids_;
};

// Bad scenario / simulation configuration (wrong sizes, initial state outside set).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Scenario file syntax or schema problem; message carries field path or byte offset.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cbf
