#pragma once

#include <stdexcept>
#include <string>

namespace acf {

/// Incompatible tensor dimensions (channel counts, N/H/W mismatch, rank).
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Spatial geometry that cannot be realised (empty outputs, sizes not a
/// multiple of the encoder stride, target size mismatch).
class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed file content. The message names the file and byte offset when known.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  ParseError(const std::string& file, std::size_t offset, const std::string& what)
      : std::runtime_error(file + ": " + what + " at byte " + std::to_string(offset)),
        offset_(offset) {}

  /// Byte offset of the problem, or npos when not tied to a position.
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_ = std::string::npos;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values where a finite result is required.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace acf
