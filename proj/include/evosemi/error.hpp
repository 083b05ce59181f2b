#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace evosemi {

enum class ErrorKind {
  RangeExceeded,
  BracketFailure,
  NegativeDensity,
  Inconclusive,
  DomainExceeded,
  NotNonDegenerate,
  HittingTimeUnbounded,
  TimeOrderViolation,
  IntegratorFailure,
  EmptyGrid,
  SingularRestriction,
  Undefined,
  QuadratureBudgetExceeded,
  RankMismatch,
  HypothesisViolation,
  ConfigError,
  PipelineFailure,
};

inline constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::RangeExceeded: return "RangeExceeded";
    case ErrorKind::BracketFailure: return "BracketFailure";
    case ErrorKind::NegativeDensity: return "NegativeDensity";
    case ErrorKind::Inconclusive: return "Inconclusive";
    case ErrorKind::DomainExceeded: return "DomainExceeded";
    case ErrorKind::NotNonDegenerate: return "NotNonDegenerate";
    case ErrorKind::HittingTimeUnbounded: return "HittingTimeUnbounded";
    case ErrorKind::TimeOrderViolation: return "TimeOrderViolation";
    case ErrorKind::IntegratorFailure: return "IntegratorFailure";
    case ErrorKind::EmptyGrid: return "EmptyGrid";
    case ErrorKind::SingularRestriction: return "SingularRestriction";
    case ErrorKind::Undefined: return "Undefined";
    case ErrorKind::QuadratureBudgetExceeded: return "QuadratureBudgetExceeded";
    case ErrorKind::RankMismatch: return "RankMismatch";
    case ErrorKind::HypothesisViolation: return "HypothesisViolation";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::PipelineFailure: return "PipelineFailure";
  }
  return "Unknown";
}

/// All library failures are reported through this exception; `kind()` lets
/// callers branch without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace evosemi
