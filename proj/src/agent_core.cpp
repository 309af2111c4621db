#include "agent_core.hpp"

#include <algorithm>

#include "error.hpp"

namespace prodcell {

bool AgentSpec::allows(std::string_view name, const ServiceRegistry& registry) const {
  const std::string canonical = registry.resolve(name).name;
  for (const auto& allowed : allowed_services) {
    if (allowed == name || (registry.knows(allowed) && registry.resolve(allowed).name == canonical)) return true;
  }
  return false;
}

AgentSpec agent_spec_from_json(const nlohmann::json& j) {
  AgentSpec a;
  try {
    a.id = j.at("id").get<std::string>();
    const auto level = j.value("level", std::string("operator"));
    if (level == "manager") {
      a.level = AgentLevel::Manager;
    } else if (level == "operator") {
      a.level = AgentLevel::Operator;
    } else {
      throw Error(ErrorCode::SchemaError, "agent " + a.id + ": unknown level '" + level + "'");
    }
    a.speaker = j.value("speaker", std::string(a.level == AgentLevel::Manager ? "Manager agent" : "Operator agent"));
    const auto& p = j.at("prompt");
    a.prompt.role_goal = p.value("role_goal", std::string{});
    a.prompt.context = p.value("context", std::string{});
    a.prompt.behavior = p.value("behavior", std::string{});
    a.prompt.io_pattern = p.value("io_pattern", std::string{});
    a.subscription.agent_id = a.id;
    if (j.contains("subscription")) {
      const auto& s = j.at("subscription");
      a.subscription.include_tags = s.value("tags", std::vector<std::string>{});
      a.subscription.window = s.value("window", std::size_t{50});
    }
    a.allowed_services = j.value("allowed_services", std::vector<std::string>{});
    if (j.contains("catalog")) {
      for (const auto& e : j.at("catalog")) a.catalog.push_back(catalog_entry_from_json(e));
    } else {
      for (const auto& s : a.allowed_services) a.catalog.push_back(CatalogEntry{s, std::nullopt, std::nullopt});
    }
    a.unit = j.value("unit", std::string{});
    a.next_agent = j.value("next_agent", std::string{});
    a.debounce_ms = j.value("debounce_ms", Millis{0});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, "agent " + a.id + ": " + e.what());
  }
  if (a.level == AgentLevel::Operator && a.unit.empty()) {
    throw Error(ErrorCode::SchemaError, "operator agent " + a.id + " needs a unit");
  }
  return a;
}

std::string build_prompt(const PromptTemplate& tmpl, const std::string& catalog_text, const std::string& excerpt_text) {
  std::string context = tmpl.context;
  if (!catalog_text.empty()) {
    if (!context.empty()) context += "\n\n";
    context += "Actions you can take:\n\n" + catalog_text;
  }
  std::string out;
  for (const std::string* section : std::initializer_list<const std::string*>{&tmpl.role_goal, &context, &tmpl.behavior, &tmpl.io_pattern}) {
    if (section->empty()) continue;
    if (!out.empty()) out += "\n\n";
    out += *section;
  }
  if (!out.empty()) out += "\n\n";
  out += "Input:\n" + excerpt_text + "\nOutput:\n";
  return out;
}

namespace {

// End of the balanced {...} starting at `start`, or npos.
std::size_t match_object(std::string_view text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

std::string field(const nlohmann::json& obj, const char* key) {
  if (!obj.contains(key)) throw Error(ErrorCode::MissingField, std::string("missing field '") + key + "'");
  const auto& v = obj.at(key);
  if (!v.is_string()) throw Error(ErrorCode::NonStringField, std::string("field '") + key + "' is not a string");
  return v.get<std::string>();
}

}  // namespace

std::optional<nlohmann::json> extract_first_json_object(std::string_view text) {
  std::size_t pos = text.find('{');
  while (pos != std::string_view::npos) {
    const std::size_t end = match_object(text, pos);
    if (end != std::string_view::npos) {
      auto parsed = nlohmann::json::parse(text.substr(pos, end - pos + 1), nullptr, false);
      if (!parsed.is_discarded() && parsed.is_object()) return parsed;
    }
    pos = text.find('{', pos + 1);
  }
  return std::nullopt;
}

Decision parse_decision(std::string_view raw) {
  auto obj = extract_first_json_object(raw);
  if (!obj) throw Error(ErrorCode::NoJsonFound, "no JSON object in model output");
  Decision d;
  d.reason = field(*obj, "reason");
  d.command = field(*obj, "command");
  d.raw = std::string(raw);
  return d;
}

std::string format_decision(const std::string& reason, const std::string& command) {
  nlohmann::ordered_json j;
  j["reason"] = reason;
  j["command"] = command;
  return j.dump();
}

Plan parse_plan(std::string_view raw, const std::vector<std::string>& operator_ids) {
  auto obj = extract_first_json_object(raw);
  if (!obj) throw Error(ErrorCode::NoJsonFound, "no JSON object in manager output");
  Plan plan;
  plan.goal = field(*obj, "goal");
  if (!obj->contains("steps")) throw Error(ErrorCode::MissingField, "missing field 'steps'");
  const auto& steps = obj->at("steps");
  if (!steps.is_array()) throw Error(ErrorCode::MissingField, "field 'steps' is not a list");
  if (steps.empty()) throw Error(ErrorCode::EmptyPlan, "plan has no steps");
  for (const auto& s : steps) {
    if (!s.is_object()) throw Error(ErrorCode::MissingField, "plan step is not an object");
    PlanStep step;
    step.id = field(s, "id");
    step.assignee = field(s, "assignee");
    step.instruction = field(s, "instruction");
    if (std::find(operator_ids.begin(), operator_ids.end(), step.assignee) == operator_ids.end()) {
      throw Error(ErrorCode::UnknownAssignee, "plan step " + step.id + " names unknown agent '" + step.assignee + "'");
    }
    plan.steps.push_back(std::move(step));
  }
  return plan;
}

nlohmann::json to_json(const Plan& plan) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : plan.steps) steps.push_back({{"id", s.id}, {"assignee", s.assignee}, {"instruction", s.instruction}});
  return {{"goal", plan.goal}, {"steps", steps}};
}

}  // namespace prodcell
