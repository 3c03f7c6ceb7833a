#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace slg {

// Base class for all failures raised by the library. Every error carries a
// human-readable message; subclasses add the structured context needed to map
// a failure onto a CLI exit code.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed arguments to a library call: dimension mismatches, non-finite
// entries, out-of-range indices.
class InputError : public Error {
 public:
  using Error::Error;
};

// Config file problems. Carries the input line for diagnostics (0 when the
// problem is not tied to a specific line).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0) : Error(what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

// Boundary data outside the admissible cone. Identifies which endpoint and
// which grid node violated the phase inequality.
class AdmissibilityError : public Error {
 public:
  AdmissibilityError(const std::string& what, int endpoint, std::array<int, 3> node,
                     double phase, double threshold)
      : Error(what), endpoint_(endpoint), node_(node), phase_(phase), threshold_(threshold) {}
  int endpoint() const { return endpoint_; }
  const std::array<int, 3>& node() const { return node_; }
  double phase() const { return phase_; }
  double threshold() const { return threshold_; }

 private:
  int endpoint_;
  std::array<int, 3> node_;
  double phase_;
  double threshold_;
};

// Barrier construction could not certify a margin (degenerate data or an
// under-resolved grid).
class BarrierError : public Error {
 public:
  using Error::Error;
};

// Continuation or Newton iteration failed after all fallbacks.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace slg
