#include "ddhqa/error.hpp"

namespace ddhqa {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io: return "io-error";
    case ErrorKind::Parse: return "parse-error";
    case ErrorKind::EmptyMesh: return "empty-mesh";
    case ErrorKind::InvalidMesh: return "invalid-mesh";
    case ErrorKind::EmptyField: return "empty-field";
    case ErrorKind::ZeroArea: return "zero-area";
    case ErrorKind::TooFewSamples: return "too-few-samples";
    case ErrorKind::DegenerateInput: return "degenerate-input";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::ShapeMismatch: return "shape-mismatch";
    case ErrorKind::NoClips: return "no-clips";
    case ErrorKind::NonFiniteLoss: return "non-finite-loss";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::JoinMismatch: return "join-mismatch";
    case ErrorKind::Version: return "version-error";
  }
  return "unknown";
}

}  // namespace ddhqa
