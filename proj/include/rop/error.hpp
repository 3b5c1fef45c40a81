#pragma once

#include <stdexcept>
#include <string>

namespace rop {

// Structurally invalid input: bad shapes, inconsistent lengths, values
// outside a documented precondition.
struct validation_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed input file. The message carries file:line (and column when
// known) so callers can surface actionable diagnostics.
struct parse_error : std::runtime_error {
  parse_error(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what) {}
  parse_error(const std::string& file, std::size_t line, std::size_t column,
              const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ":" +
                           std::to_string(column) + ": " + what) {}
};

// A numerical routine failed to converge.
struct compute_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rop
