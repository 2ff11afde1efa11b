#pragma once

#include <stdexcept>
#include <string>

namespace treglab {

// Base for all library errors. `kind()` is a stable machine-readable tag
// used by the CLI error channel.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

// Tensor/op dimension mismatch.
struct ShapeError : Error {
  explicit ShapeError(const std::string& m) : Error("shape", m) {}
};

// NaN/Inf detected in values or gradients.
struct NumericError : Error {
  explicit NumericError(const std::string& m) : Error("numeric", m) {}
};

// Invalid parameter or configuration value.
struct ValueError : Error {
  explicit ValueError(const std::string& m) : Error("value", m) {}
};

// Invalid runtime input (bad token id, empty corpus, ...).
struct InputError : Error {
  explicit InputError(const std::string& m) : Error("input", m) {}
};

// API misuse (backward called twice without re-forward, ...).
struct StateError : Error {
  explicit StateError(const std::string& m) : Error("state", m) {}
};

struct IoError : Error {
  explicit IoError(const std::string& m) : Error("io", m) {}
};

// Schema or content validation failure (CSV rows, ensemble presets, ...).
struct ValidationError : Error {
  explicit ValidationError(const std::string& m) : Error("validation", m) {}
};

// Referenced data is missing or insufficient (language set, run, samples).
struct ResourceError : Error {
  explicit ResourceError(const std::string& m) : Error("resource", m) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& m) : Error("parse", m) {}
};

// Network/client failures when talking to a generation endpoint.
struct TransportError : Error {
  explicit TransportError(const std::string& m) : Error("transport", m) {}
};

// Prediction sets do not cover the same item ids.
struct AlignmentError : Error {
  explicit AlignmentError(const std::string& m) : Error("alignment", m) {}
};

// Registry run id already exists with a different configuration.
struct ConflictError : Error {
  explicit ConflictError(const std::string& m) : Error("conflict", m) {}
};

// Pearson's r is undefined (constant vector).
struct UndefinedCorrelationError : Error {
  explicit UndefinedCorrelationError(const std::string& m)
      : Error("undefined_correlation", m) {}
};

}  // namespace treglab
