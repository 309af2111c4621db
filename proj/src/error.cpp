#include "error.hpp"

namespace prodcell {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::EntranceOccupied: return "EntranceOccupied";
    case ErrorCode::UnknownTarget: return "UnknownTarget";
    case ErrorCode::InvalidTime: return "InvalidTime";
    case ErrorCode::NoWorkpieceAtReadyPosition: return "NoWorkpieceAtReadyPosition";
    case ErrorCode::NoWorkpieceAvailable: return "NoWorkpieceAvailable";
    case ErrorCode::AgvBusy: return "AgvBusy";
    case ErrorCode::UnknownStation: return "UnknownStation";
    case ErrorCode::TimeRegression: return "TimeRegression";
    case ErrorCode::TemplateResolutionFailure: return "TemplateResolutionFailure";
    case ErrorCode::DuplicateRuleId: return "DuplicateRuleId";
    case ErrorCode::DuplicateService: return "DuplicateService";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownService: return "UnknownService";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::NotPermitted: return "NotPermitted";
    case ErrorCode::ExecutionFault: return "ExecutionFault";
    case ErrorCode::NoJsonFound: return "NoJsonFound";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::NonStringField: return "NonStringField";
    case ErrorCode::UnknownAssignee: return "UnknownAssignee";
    case ErrorCode::EmptyPlan: return "EmptyPlan";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::ReplayExhausted: return "ReplayExhausted";
    case ErrorCode::ScenarioDeadlock: return "ScenarioDeadlock";
    case ErrorCode::PlanParseFailure: return "PlanParseFailure";
    case ErrorCode::UnknownApproval: return "UnknownApproval";
    case ErrorCode::AlreadyResolved: return "AlreadyResolved";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::UnmatchedDecisionPoint: return "UnmatchedDecisionPoint";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

std::string describe(const Error& e) {
  return std::string(error_code_name(e.code())) + ": " + e.what();
}

}  // namespace prodcell
