#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vidagents {

/// Stable, machine-readable error codes. The CLI, the HTTP API and the
/// library all report failures with these names verbatim.
enum class Errc {
  InvalidArgument,
  DuplicateAgent,
  UnknownRecipient,
  StepBudgetExceeded,
  InvalidPayload,
  FetchFailed,
  EmptyFrames,
  InvalidDescriptor,
  UnknownConcept,
  InvalidOntology,
  InsufficientClasses,
  EmptyTrainingSet,
  EmptyEvaluationSet,
  ModelNotTrained,
  DuplicateDocument,
  UnknownDocument,
  InvalidRating,
  IoFailure,
  CorruptStore,
  UnknownUser,
  UnknownDomain,
  UnknownStrategy,
  OutOfRangePerformance,
  DuplicateUser,
  UnknownCommunity,
  MalformedRequest,
};

inline constexpr std::array<std::string_view, 26> kErrcNames = {
    "InvalidArgument",     "DuplicateAgent",        "UnknownRecipient",
    "StepBudgetExceeded",  "InvalidPayload",        "FetchFailed",
    "EmptyFrames",         "InvalidDescriptor",     "UnknownConcept",
    "InvalidOntology",     "InsufficientClasses",   "EmptyTrainingSet",
    "EmptyEvaluationSet",  "ModelNotTrained",       "DuplicateDocument",
    "UnknownDocument",     "InvalidRating",         "IoFailure",
    "CorruptStore",        "UnknownUser",           "UnknownDomain",
    "UnknownStrategy",     "OutOfRangePerformance", "DuplicateUser",
    "UnknownCommunity",    "MalformedRequest",
};

constexpr std::string_view to_string(Errc code) noexcept {
  return kErrcNames[static_cast<std::size_t>(code)];
}

inline std::optional<Errc> errc_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kErrcNames.size(); ++i) {
    if (kErrcNames[i] == name) return static_cast<Errc>(i);
  }
  return std::nullopt;
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }
  std::string_view code_name() const noexcept { return to_string(code_); }

 private:
  Errc code_;
};

}  // namespace vidagents
