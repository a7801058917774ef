#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qmf {

enum class ErrorCode {
  VertexOutsideWindow,
  RootOutsideWindow,
  RegionTouchesWindowEdge,
  SupportNotContained,
  DimensionMismatch,
  DimensionCap,
  NotHermitian,
  EigenvalueBelowFloor,
  InvalidState,
  NonInvertibleSpec,
  MalformedTable,
  NormalizationResidual,
  UncertifiedTessellation,
  UncertifiedFamily,
  DescriptorPrecondition,
  SequenceCondition,
  NonDiagonalInput,
  MalformedConfig,
  MalformedReport,
  InvalidGraph,
  NoInstance,
};

std::string_view to_string(ErrorCode code);

/// Contract violation raised by any qmf operation. The code identifies the
/// failing precondition; the message carries the offending input.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::VertexOutsideWindow: return "vertex-outside-window";
    case ErrorCode::RootOutsideWindow: return "root-outside-window";
    case ErrorCode::RegionTouchesWindowEdge: return "region-touches-window-edge";
    case ErrorCode::SupportNotContained: return "support-not-contained";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::DimensionCap: return "dimension-cap";
    case ErrorCode::NotHermitian: return "not-hermitian";
    case ErrorCode::EigenvalueBelowFloor: return "eigenvalue-below-floor";
    case ErrorCode::InvalidState: return "invalid-state";
    case ErrorCode::NonInvertibleSpec: return "non-invertible-spec";
    case ErrorCode::MalformedTable: return "malformed-table";
    case ErrorCode::NormalizationResidual: return "normalization-residual";
    case ErrorCode::UncertifiedTessellation: return "uncertified-tessellation";
    case ErrorCode::UncertifiedFamily: return "uncertified-family";
    case ErrorCode::DescriptorPrecondition: return "descriptor-precondition";
    case ErrorCode::SequenceCondition: return "sequence-condition";
    case ErrorCode::NonDiagonalInput: return "non-diagonal-input";
    case ErrorCode::MalformedConfig: return "malformed-config";
    case ErrorCode::MalformedReport: return "malformed-report";
    case ErrorCode::NoInstance: return "no-instance";
    case ErrorCode::InvalidGraph: return "invalid-graph";
  }
  return "unknown";
}

}  // namespace qmf
