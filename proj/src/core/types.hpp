#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace qhs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Class labels are small nonnegative indices into a caller-defined class list.
using ClassId = std::int32_t;

// Sentinel for "no label attached" (inputs) and "abstain" (predictions).
inline constexpr ClassId kNoLabel = -1;
inline constexpr ClassId kAbstain = -1;

enum class ErrorCode : int {
  InvalidArgument = 1,
  DimensionMismatch = 2,
  NonFiniteInput = 3,
  UnknownLabel = 4,
  SingularSystem = 5,
  UnsupportedMode = 6,
  BadCheckpoint = 7,
  LimitExceeded = 8,
  Internal = 9,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace qhs
