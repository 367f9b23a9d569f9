#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace netcox {

enum class ErrorCode {
  InvalidArgument,
  InvalidData,
  NoExposure,
  UnboundedMLE,
  Singular,
  Overflow,
  InsufficientHistory,
  NotConverged,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidData: return "InvalidData";
    case ErrorCode::NoExposure: return "NoExposure";
    case ErrorCode::UnboundedMLE: return "UnboundedMLE";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Library error. `direction` carries the offending parameter direction for
/// UnboundedMLE and Singular failures, empty otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::vector<double> direction = {})
      : std::runtime_error(message), code_(code), direction_(std::move(direction)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::vector<double>& direction() const noexcept { return direction_; }

 private:
  ErrorCode code_;
  std::vector<double> direction_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message,
                              std::vector<double> direction = {}) {
  throw Error(code, message, std::move(direction));
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::InvalidArgument, message);
}

}  // namespace netcox
