#pragma once

#include <stdexcept>
#include <string>

namespace tghoa {

// Exception families map onto the CLI's exit codes (usage=2, io=3, schema=4,
// divergence=5). Library code throws these; the tool translates.

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tghoa
