#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace templater {

enum class ErrorKind {
  Io,
  MalformedHeader,
  MalformedLine,
  UnknownSection,
  DanglingReference,
  MissingMass,
  EmptyTopology,
  NoEdges,
  NoCommonSubgraph,
  BudgetExceeded,
  NoReactionDetected,
  UnsupportedReaction,
  InconsistentPruning,
  InvalidTemplate,
  UnknownStage,
  InvalidConfig,
  NumericalFailure,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io: return "IoError";
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::MalformedLine: return "MalformedLine";
    case ErrorKind::UnknownSection: return "UnknownSection";
    case ErrorKind::DanglingReference: return "DanglingReference";
    case ErrorKind::MissingMass: return "MissingMass";
    case ErrorKind::EmptyTopology: return "EmptyTopology";
    case ErrorKind::NoEdges: return "NoEdges";
    case ErrorKind::NoCommonSubgraph: return "NoCommonSubgraph";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::NoReactionDetected: return "NoReactionDetected";
    case ErrorKind::UnsupportedReaction: return "UnsupportedReaction";
    case ErrorKind::InconsistentPruning: return "InconsistentPruning";
    case ErrorKind::InvalidTemplate: return "InvalidTemplate";
    case ErrorKind::UnknownStage: return "UnknownStage";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

/// Process exit code used by the command-line tool for each error class.
/// Codes 1 and 2 are left to generic failures and usage errors.
constexpr int exit_code(ErrorKind kind) noexcept {
  return 10 + static_cast<int>(kind);
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace templater
