#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace prodcell {

// Numeric values are part of the C API (pc_status) and must stay stable.
enum class ErrorCode : int {
  Ok = 0,
  InvalidArgument = 1,
  Io = 2,
  SchemaError = 3,
  // plant_sim
  EntranceOccupied = 10,
  UnknownTarget = 11,
  InvalidTime = 12,
  NoWorkpieceAtReadyPosition = 13,
  NoWorkpieceAvailable = 14,
  AgvBusy = 15,
  UnknownStation = 16,
  // twin_observer / event_log
  TimeRegression = 20,
  TemplateResolutionFailure = 21,
  DuplicateRuleId = 22,
  // service_registry
  DuplicateService = 30,
  SyntaxError = 31,
  UnknownService = 32,
  ArityMismatch = 33,
  DomainViolation = 34,
  NotPermitted = 35,
  ExecutionFault = 36,
  // agent_core
  NoJsonFound = 40,
  MissingField = 41,
  NonStringField = 42,
  UnknownAssignee = 43,
  EmptyPlan = 44,
  BackendUnavailable = 45,
  ReplayExhausted = 46,
  // orchestrator / gateway
  ScenarioDeadlock = 50,
  PlanParseFailure = 51,
  UnknownApproval = 52,
  AlreadyResolved = 53,
  UnknownSession = 54,
  InvalidState = 55,
  UnmatchedDecisionPoint = 56,
  Internal = 99,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// "<CodeName>: <message>", the form used in transcripts and HTTP bodies.
std::string describe(const Error& e);

}  // namespace prodcell
