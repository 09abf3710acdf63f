#pragma once

#include <stdexcept>
#include <string>

namespace wpr {

enum class ErrorCode {
  NotHermitian,
  DimensionMismatch,
  SingularMse,
  InfeasibleBudget,
  ZeroChannel,
  InvalidDistance,
  NoNullDirection,
  MaxIterations,
  NotRank1,
  TooLarge,
  Infeasible,
  NewtonDiverged,
  DropFailed,
  RankDeficient,
  IoError,
};

// Single exception type carrying a machine-checkable code; tests match on
// the code, messages are for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace wpr
