#include "l2s/error.hpp"

namespace l2s {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::HorizonExceeded: return "HorizonExceeded";
    case ErrorCode::NoLegalAction: return "NoLegalAction";
    case ErrorCode::NotTerminal: return "NotTerminal";
    case ErrorCode::EmptyActionSet: return "EmptyActionSet";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteCost: return "NonFiniteCost";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::MissingGold: return "MissingGold";
    case ErrorCode::NoPolicies: return "NoPolicies";
    case ErrorCode::LossOutOfRange: return "LossOutOfRange";
    case ErrorCode::IllegalAction: return "IllegalAction";
    case ErrorCode::TraceIncomplete: return "TraceIncomplete";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ModelTaskMismatch: return "ModelTaskMismatch";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace l2s
