#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wcsys {

/// Failure categories raised by the library. Each maps to one named error
/// condition of an operation; callers switch on kind() rather than parsing
/// messages.
enum class ErrorKind {
  GridTooCoarse,
  NotNested,
  UnboundedAbove,
  OutOfClass,
  LinearSolveFailed,
  EllipticityViolated,
  NonFinite,
  InsufficientDecade,
  LambdaTooSmall,
  NonIntegrable,
  DegenerateNullspace,
  UnknownPreset,
  SelfValidationFailed,
  ConfigError,
  InvalidArgument,
};

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::NotNested: return "NotNested";
    case ErrorKind::UnboundedAbove: return "UnboundedAbove";
    case ErrorKind::OutOfClass: return "OutOfClass";
    case ErrorKind::LinearSolveFailed: return "LinearSolveFailed";
    case ErrorKind::EllipticityViolated: return "EllipticityViolated";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::InsufficientDecade: return "InsufficientDecade";
    case ErrorKind::LambdaTooSmall: return "LambdaTooSmall";
    case ErrorKind::NonIntegrable: return "NonIntegrable";
    case ErrorKind::DegenerateNullspace: return "DegenerateNullspace";
    case ErrorKind::UnknownPreset: return "UnknownPreset";
    case ErrorKind::SelfValidationFailed: return "SelfValidationFailed";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace wcsys
