#pragma once

#include <stdexcept>
#include <string>

namespace fgpe {

/// Observer and target are (numerically) coincident; bearing is undefined.
class DegenerateGeometry : public std::runtime_error {
 public:
  explicit DegenerateGeometry(const std::string& what) : std::runtime_error(what) {}
};

/// A factor references a variable key that is not present in the value map.
class UnknownVariable : public std::runtime_error {
 public:
  explicit UnknownVariable(const std::string& what) : std::runtime_error(what) {}
};

/// The normal system cannot be solved (free-floating variable or rank loss).
class SingularSystem : public std::runtime_error {
 public:
  explicit SingularSystem(const std::string& what) : std::runtime_error(what) {}
};

/// A matrix expected to be positive semidefinite has a negative eigenvalue.
class NotPsd : public std::runtime_error {
 public:
  explicit NotPsd(const std::string& what) : std::runtime_error(what) {}
};

/// Every sampled trajectory in the planner window collides.
class NoFeasibleCommand : public std::runtime_error {
 public:
  explicit NoFeasibleCommand(const std::string& what) : std::runtime_error(what) {}
};

/// An episode could not run to completion; carries the offending step.
class EpisodeAborted : public std::runtime_error {
 public:
  EpisodeAborted(int step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Scenario text could not be parsed; carries line/column of the failure.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Scenario parsed but violates an invariant; message names the field.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Correlation input with fewer than two samples or zero variance.
class DegenerateSample : public std::runtime_error {
 public:
  explicit DegenerateSample(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fgpe
