#pragma once

#include <stdexcept>
#include <string>

namespace crl {

// Error categories surfaced through the C API as status codes.
enum class ErrorCode {
  MalformedSyntax = 1,
  UnknownDeviceName,
  ArityMismatch,
  DuplicateDevice,
  InvalidDuty,
  InconsistentIncidence,
  SingularSystem,
  ExhaustedRetries,
  SpaceExhausted,
  InvalidInput,
  EmptyDataset,
  MissingConstraint,
  UntrainedBackend,
  OutOfVocabulary,
  MalformedSequence,
  Diverged,
  Truncated,
  EmptySampleSet,
  InvalidCounts,
  EmptyPromptSet,
  VersionMismatch,
  Io,
  Usage,
  PhaseOrder,
  PoolStarvation,
};

const char* error_code_name(ErrorCode code);

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

}  // namespace crl
