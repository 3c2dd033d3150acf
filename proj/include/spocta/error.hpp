#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace spocta {

enum class ErrorCode {
  DuplicateCoordinate,
  ShapeMismatch,
  GridTooLarge,
  UnsupportedOp,
  CoordinateOutOfRange,
  MapMismatch,
  MapInconsistent,
  ChannelMismatch,
  InvalidOffset,
  InvalidLayer,
  ConfigInvalid,
  BadDensity,
  FileFormat,
  Io,
  OracleMismatch,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Carries the first offending index pair (first < second).
class DuplicateCoordinateError : public Error {
 public:
  DuplicateCoordinateError(std::size_t first, std::size_t second);

  std::size_t first() const noexcept { return first_; }
  std::size_t second() const noexcept { return second_; }

 private:
  std::size_t first_;
  std::size_t second_;
};

}  // namespace spocta
