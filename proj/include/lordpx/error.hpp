#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lordpx {

enum class ErrorCode {
  FileUnreadable,
  SchemaMismatch,
  EmptyAfterFiltering,
  SingleArm,
  ZeroVariance,
  TooFewObservations,
  ZeroPooledVariance,
  RankDeficientDesign,
  TooFewSchools,
  NonConvergence,
  NotConverged,
  MissingEstimate,
  InvalidSpec,
  ConfigParse,
  UnknownLabel,
  EmptyInput,
  UnwritablePath,
  CorruptAsset,
};

std::string_view to_string(ErrorCode code) noexcept;
std::optional<ErrorCode> error_code_from_string(std::string_view name) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lordpx
