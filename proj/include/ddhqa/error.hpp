#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ddhqa {

enum class ErrorKind {
  Io,
  Parse,
  EmptyMesh,
  InvalidMesh,
  EmptyField,
  ZeroArea,
  TooFewSamples,
  DegenerateInput,
  DimensionMismatch,
  ShapeMismatch,
  NoClips,
  NonFiniteLoss,
  InvalidArgument,
  JoinMismatch,
  Version,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the toolkit; `kind()` distinguishes the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ddhqa
