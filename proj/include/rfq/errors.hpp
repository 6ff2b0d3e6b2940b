#pragma once

#include <stdexcept>
#include <string>

namespace rfq {

/// Base class for all library errors. `code()` is a stable, machine-readable
/// identifier; the CLI prints it on stderr as `rfqi-error: <code>: <message>`.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class NonFiniteInput : public Error {
 public:
  NonFiniteInput()
      : Error("non_finite_input", "input contains non-finite entries") {}
};

class ConstantColumn : public Error {
 public:
  explicit ConstantColumn(int column)
      : Error("constant_column",
              "design column " + std::to_string(column) +
                  " has (near-)zero sample standard deviation"),
        column(column) {}

  int column;
};

// A numerically singular restricted Gram matrix signals violated coverage;
// consult the restricted-eigenvalue diagnostic before retrying.
class SingularGram : public Error {
 public:
  SingularGram()
      : Error("singular_gram",
              "restricted Gram matrix has smallest eigenvalue <= 1e-10") {}
};

class EmptyActionCell : public Error {
 public:
  EmptyActionCell(int action, int timestep)
      : Error("empty_action_cell",
              "too few samples for action " + std::to_string(action) +
                  " at timestep " + std::to_string(timestep) +
                  " (inadequate behavior-policy coverage)"),
        action(action),
        timestep(timestep) {}

  int action;
  int timestep;
};

class EmptyTruth : public Error {
 public:
  EmptyTruth() : Error("empty_truth", "true support is empty") {}
};

class InvalidConfig : public Error {
 public:
  explicit InvalidConfig(const std::string& message)
      : Error("invalid_config", message) {}
};

class MalformedInput : public Error {
 public:
  MalformedInput(const std::string& message, long row)
      : Error("malformed_input",
              message + " (row " + std::to_string(row) + ")"),
        row(row) {}

  long row;
};

class UnknownMetric : public Error {
 public:
  explicit UnknownMetric(const std::string& metric)
      : Error("unknown_metric", "no data for metric '" + metric + "'") {}
};

}  // namespace rfq
