#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace veritrace {

/// Malformed or inconsistent user input: bad files, bad arguments, bad rows.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required upstream artifact (model, store, vocabulary) is absent or does
/// not match what the caller expects.
class MissingArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A non-fatal per-line problem found while reading a file.
struct Diagnostic {
  std::size_t line = 0;  // 1-based; 0 when not tied to a line
  std::string message;
};

}  // namespace veritrace
