#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "executor.hpp"
#include "plant_sim.hpp"

namespace prodcell {

struct TimelineEntry {
  enum class Kind { Spawn, Fault, ClearFault, Task };
  Kind kind = Kind::Spawn;
  Millis at = 0;
  std::string station;
  std::string workpiece;
  std::optional<bool> cleared;  // RFID verdict for spawned workpieces
  FaultSpec fault;
  std::string target;  // clear_fault
  std::string task;
};

struct PeerScript {
  std::vector<PeerReply> replies;
  PeerReply fallback;
};

struct EndCondition {
  std::vector<std::string> until_commands;  // stop after any of these executed ok
  Millis time_limit_ms = 120'000;
  int max_decisions = 200;
};

// One place in a run where the agent's choice is judged.
struct DecisionPoint {
  std::string id;
  std::string trigger;  // regex over event text
  std::string agent;
  std::vector<std::string> acceptable;  // "name" or "name(a, *)"
  std::vector<std::string> optimal;
  bool terminal = false;
  std::string notes;
};

struct GoldenSpec {
  std::vector<DecisionPoint> points;
};

struct ScenarioSpec {
  std::string id;
  std::string category;  // routine | novel
  std::string description;
  std::string agents;    // agent-set file, relative to the data dir
  std::string manager;   // agent id, optional
  PlantConfig plant;
  std::vector<TimelineEntry> timeline;  // sorted by at, stable
  std::map<std::string, PeerScript> peers;
  nlohmann::json extra_rules = nlohmann::json::array();
  EndCondition end;
  GoldenSpec golden;
  nlohmann::json source;  // the document this was read from
};

// `where` prefixes SchemaError messages (file and position).
ScenarioSpec scenario_from_json(const nlohmann::json& j, const std::string& where = "scenario");
ScenarioSpec load_scenario_file(const std::filesystem::path& path);

struct Suite {
  std::string id;
  std::vector<ScenarioSpec> scenarios;

  std::size_t count(const std::string& category) const;
};

// Entries are inline scenario objects or names/paths resolved in scenario_dir.
Suite load_suite_file(const std::filesystem::path& path, const std::filesystem::path& scenario_dir);

nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace prodcell
