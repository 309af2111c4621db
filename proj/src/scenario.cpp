#include "scenario.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>

#include "error.hpp"

namespace prodcell {

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
}

namespace {

[[noreturn]] void schema(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::SchemaError, where + ": " + what);
}

TimelineEntry timeline_entry(const nlohmann::json& e, const std::string& where) {
  TimelineEntry t;
  t.at = e.at("at").get<Millis>();
  if (t.at < 0) schema(where, "negative time");
  if (e.contains("spawn")) {
    const auto& s = e.at("spawn");
    t.kind = TimelineEntry::Kind::Spawn;
    t.station = s.at("station").get<std::string>();
    t.workpiece = s.at("workpiece").get<std::string>();
    if (s.contains("cleared")) t.cleared = s.at("cleared").get<bool>();
  } else if (e.contains("fault")) {
    t.kind = TimelineEntry::Kind::Fault;
    t.fault = fault_spec_from_json(e.at("fault"));
    // faults are armed when their entry comes due
    t.fault.at = std::max(t.fault.at, t.at);
  } else if (e.contains("clear_fault")) {
    t.kind = TimelineEntry::Kind::ClearFault;
    t.target = e.at("clear_fault").get<std::string>();
  } else if (e.contains("task")) {
    t.kind = TimelineEntry::Kind::Task;
    t.task = e.at("task").get<std::string>();
  } else {
    schema(where, "entry needs one of spawn, fault, clear_fault, task");
  }
  return t;
}

}  // namespace

ScenarioSpec scenario_from_json(const nlohmann::json& j, const std::string& where) {
  ScenarioSpec s;
  s.source = j;
  try {
    if (!j.is_object()) schema(where, "expected an object");
    s.id = j.at("id").get<std::string>();
    s.category = j.at("category").get<std::string>();
    if (s.category != "routine" && s.category != "novel") schema(where, "category must be routine or novel");
    s.description = j.value("description", std::string{});
    s.agents = j.at("agents").get<std::string>();
    s.manager = j.value("manager", std::string{});
    s.plant = plant_config_from_json(j.at("plant"));
    const auto& timeline = j.value("timeline", nlohmann::json::array());
    for (std::size_t i = 0; i < timeline.size(); ++i) {
      s.timeline.push_back(timeline_entry(timeline[i], where + ": timeline[" + std::to_string(i) + "]"));
    }
    std::stable_sort(s.timeline.begin(), s.timeline.end(),
                     [](const TimelineEntry& a, const TimelineEntry& b) { return a.at < b.at; });
    if (j.contains("peer_replies")) {
      for (const auto& [agent, script] : j.at("peer_replies").items()) {
        PeerScript ps;
        for (const auto& r : script.value("replies", nlohmann::json::array())) ps.replies.push_back(peer_reply_from_json(r));
        if (script.contains("then")) ps.fallback = peer_reply_from_json(script.at("then"));
        s.peers[agent] = std::move(ps);
      }
    }
    s.extra_rules = j.value("extra_rules", nlohmann::json::array());
    if (j.contains("end")) {
      const auto& e = j.at("end");
      s.end.until_commands = e.value("until_commands", std::vector<std::string>{});
      s.end.time_limit_ms = e.value("time_limit_ms", s.end.time_limit_ms);
      s.end.max_decisions = e.value("max_decisions", s.end.max_decisions);
      if (s.end.max_decisions < 1) schema(where, "max_decisions must be >= 1");
    }
    if (!j.contains("golden")) schema(where, "missing golden");
    for (const auto& p : j.at("golden").value("points", nlohmann::json::array())) {
      DecisionPoint d;
      d.id = p.at("id").get<std::string>();
      d.trigger = p.at("trigger").get<std::string>();
      try {
        std::regex check(d.trigger);
      } catch (const std::regex_error&) {
        schema(where, "golden point " + d.id + " has an invalid trigger pattern");
      }
      d.agent = p.at("agent").get<std::string>();
      d.acceptable = p.at("acceptable").get<std::vector<std::string>>();
      d.optimal = p.value("optimal", std::vector<std::string>{});
      // an optimal command must refine one of the acceptable service names
      auto service_of = [](const std::string& pattern) { return pattern.substr(0, pattern.find('(')); };
      for (const auto& o : d.optimal) {
        if (std::none_of(d.acceptable.begin(), d.acceptable.end(),
                         [&](const std::string& a) { return service_of(a) == service_of(o); })) {
          schema(where, "golden point " + d.id + ": optimal command " + o + " is not acceptable");
        }
      }
      d.terminal = p.value("terminal", false);
      d.notes = p.value("notes", std::string{});
      s.golden.points.push_back(std::move(d));
    }
  } catch (const nlohmann::json::exception& e) {
    schema(where, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaError && std::string(e.what()).rfind(where, 0) == 0) throw;
    schema(where, e.what());
  }
  return s;
}

ScenarioSpec load_scenario_file(const std::filesystem::path& path) {
  return scenario_from_json(read_json(path), path.filename().string());
}

std::size_t Suite::count(const std::string& category) const {
  return static_cast<std::size_t>(std::count_if(scenarios.begin(), scenarios.end(),
                                                [&](const ScenarioSpec& s) { return s.category == category; }));
}

Suite load_suite_file(const std::filesystem::path& path, const std::filesystem::path& scenario_dir) {
  const std::string file = path.filename().string();
  const auto j = read_json(path);
  Suite suite;
  if (!j.is_object() || !j.contains("scenarios") || !j.at("scenarios").is_array()) {
    schema(file, "expected an object with a scenarios list");
  }
  suite.id = j.value("id", path.stem().string());
  const auto& list = j.at("scenarios");
  if (list.empty()) schema(file, "suite has no scenarios");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = file + ": scenarios[" + std::to_string(i) + "]";
    ScenarioSpec s;
    if (list[i].is_string()) {
      std::filesystem::path p = list[i].get<std::string>();
      if (p.extension() != ".json") p = scenario_dir / (p.string() + ".json");
      s = scenario_from_json(read_json(p), where);
    } else {
      s = scenario_from_json(list[i], where);
    }
    if (!ids.insert(s.id).second) schema(where, "duplicate scenario id '" + s.id + "'");
    suite.scenarios.push_back(std::move(s));
  }
  return suite;
}

}  // namespace prodcell
