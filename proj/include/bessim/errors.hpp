#pragma once

#include <stdexcept>
#include <string>

namespace bessim {

/// Input or configuration that violates a documented constraint. The message
/// names the offending field.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Failure while running an otherwise valid scenario (I/O, degenerate data).
class RuntimeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace bessim
