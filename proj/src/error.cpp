#include "xtsc/error.hpp"

namespace xtsc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidShape: return "InvalidShape";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::NonStationaryParameter: return "NonStationaryParameter";
    case ErrorCode::MaskInfeasible: return "MaskInfeasible";
    case ErrorCode::DegenerateSeparation: return "DegenerateSeparation";
    case ErrorCode::ConstantFeature: return "ConstantFeature";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::IllPosedSurrogate: return "IllPosedSurrogate";
    case ErrorCode::DegenerateCorrelation: return "DegenerateCorrelation";
    case ErrorCode::DegenerateAttribution: return "DegenerateAttribution";
    case ErrorCode::MissingCapability: return "MissingCapability";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace xtsc
