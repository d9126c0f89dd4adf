#pragma once

#include <stdexcept>
#include <string>

namespace secest {

enum class ErrorKind {
  kConfig,
  kDimension,
  kValidation,
  kDegenerateChannel,
  kHorizon,
  kConvergence,
  kNumerical,
  kInfeasible,
};

/// Every failure raised by the library carries one of the kinds above so
/// front ends can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// 0 ok, 2 config/validation, 3 infeasible, 4 numerical failure.
inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kDimension:
    case ErrorKind::kValidation:
    case ErrorKind::kDegenerateChannel:
      return 2;
    case ErrorKind::kInfeasible:
      return 3;
    case ErrorKind::kHorizon:
    case ErrorKind::kConvergence:
    case ErrorKind::kNumerical:
      return 4;
  }
  return 4;
}

}  // namespace secest
