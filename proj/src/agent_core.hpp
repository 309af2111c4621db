#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "event_log.hpp"
#include "service_registry.hpp"

namespace prodcell {

struct PromptTemplate {
  std::string role_goal;
  std::string context;
  std::string behavior;  // standard operation procedure and constraints
  std::string io_pattern;
};

enum class AgentLevel { Manager, Operator };

struct AgentSpec {
  std::string id;
  AgentLevel level = AgentLevel::Operator;
  std::string speaker = "Operator agent";  // how call lines name the agent
  PromptTemplate prompt;
  Subscription subscription;
  std::vector<std::string> allowed_services;
  std::vector<CatalogEntry> catalog;  // what the prompt lists; defaults to allowed_services
  std::string unit;                   // station or AGV
  std::string next_agent;
  Millis debounce_ms = 0;  // minimum virtual time between two invocations

  bool allows(std::string_view canonical_or_alias, const ServiceRegistry& registry) const;
};

AgentSpec agent_spec_from_json(const nlohmann::json& j);

// Sections joined by blank lines, the catalog appended to the context, then
// "Input:\n<excerpt>\nOutput:\n". Nothing follows the output cue.
std::string build_prompt(const PromptTemplate& tmpl, const std::string& catalog_text, const std::string& excerpt_text);

// First complete JSON object in free text; code fences and prose are skipped.
std::optional<nlohmann::json> extract_first_json_object(std::string_view text);

struct Decision {
  std::string reason;
  std::string command;
  std::string raw;

  bool operator==(const Decision&) const = default;
};

Decision parse_decision(std::string_view raw);
// {"reason": ..., "command": ...} with keys in that order.
std::string format_decision(const std::string& reason, const std::string& command);

struct PlanStep {
  std::string id;
  std::string assignee;
  std::string instruction;

  bool operator==(const PlanStep&) const = default;
};

struct Plan {
  std::string goal;
  std::vector<PlanStep> steps;

  bool operator==(const Plan&) const = default;
};

Plan parse_plan(std::string_view raw, const std::vector<std::string>& operator_ids);
nlohmann::json to_json(const Plan& plan);

}  // namespace prodcell
