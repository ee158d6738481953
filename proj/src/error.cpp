#include "lordpx/error.hpp"

namespace lordpx {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::FileUnreadable: return "FileUnreadable";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::EmptyAfterFiltering: return "EmptyAfterFiltering";
    case ErrorCode::SingleArm: return "SingleArm";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::TooFewObservations: return "TooFewObservations";
    case ErrorCode::ZeroPooledVariance: return "ZeroPooledVariance";
    case ErrorCode::RankDeficientDesign: return "RankDeficientDesign";
    case ErrorCode::TooFewSchools: return "TooFewSchools";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::MissingEstimate: return "MissingEstimate";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::ConfigParse: return "ConfigParse";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::UnwritablePath: return "UnwritablePath";
    case ErrorCode::CorruptAsset: return "CorruptAsset";
  }
  return "Unknown";
}

std::optional<ErrorCode> error_code_from_string(std::string_view name) noexcept {
  for (int i = 0; i <= static_cast<int>(ErrorCode::CorruptAsset); ++i) {
    const auto code = static_cast<ErrorCode>(i);
    if (to_string(code) == name) return code;
  }
  return std::nullopt;
}

}  // namespace lordpx
