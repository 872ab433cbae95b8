#pragma once

#include <stdexcept>
#include <string>

namespace ugciqa {

// Numeric values are part of the C ABI (see ugciqa.h); append only.
enum class ErrorCode : int {
  kOk = 0,
  kPartial = 1,
  kInvalidArgument = 2,
  kDecode = 3,
  kDimension = 4,
  kBounds = 5,
  kChannel = 6,
  kSize = 7,
  kDegenerate = 8,
  kValidation = 9,
  kRange = 10,
  kShape = 11,
  kStructure = 12,
  kCoverage = 13,
  kMetric = 14,
  kSolver = 15,
  kCorpus = 16,
  kNumeric = 17,
  kPlacement = 18,
  kConfig = 19,
  kCapability = 20,
  kVersion = 21,
  kIo = 22,
  kSplit = 23,
  kInternal = 99,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace ugciqa
