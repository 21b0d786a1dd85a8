#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace embmarker {

enum class ErrorCode {
  kEmptyCorpus,
  kInsufficientVocabulary,
  kVocabTooSmall,
  kDegenerateTargetSample,
  kDegenerateCombination,
  kSingularSystem,
  kDiverged,
  kZeroEmbedding,
  kEmptySampleSet,
  kServiceUnavailable,
  kDimensionMismatch,
  kAddressInUse,
  kDegenerateLabels,
  kDegenerateSpread,
  kInvalidArgument,
  kParseError,
};

inline constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kInsufficientVocabulary: return "InsufficientVocabulary";
    case ErrorCode::kVocabTooSmall: return "VocabTooSmall";
    case ErrorCode::kDegenerateTargetSample: return "DegenerateTargetSample";
    case ErrorCode::kDegenerateCombination: return "DegenerateCombination";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kDiverged: return "Diverged";
    case ErrorCode::kZeroEmbedding: return "ZeroEmbedding";
    case ErrorCode::kEmptySampleSet: return "EmptySampleSet";
    case ErrorCode::kServiceUnavailable: return "ServiceUnavailable";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kAddressInUse: return "AddressInUse";
    case ErrorCode::kDegenerateLabels: return "DegenerateLabels";
    case ErrorCode::kDegenerateSpread: return "DegenerateSpread";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

// Every failure surfaced by the library carries one of the codes above. The
// message is "<Code>: <detail>" so CLI output stays greppable.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Re-throws `e` with a stage label prepended, keeping the code.
[[noreturn]] inline void rethrow_with_stage(const Error& e,
                                            std::string_view stage) {
  std::string what = e.what();
  auto colon = what.find(": ");
  std::string detail =
      colon == std::string::npos ? what : what.substr(colon + 2);
  throw Error(e.code(), "[" + std::string(stage) + "] " + detail);
}

}  // namespace embmarker
