#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "orchestrator.hpp"
#include "scenario.hpp"
#include "service_registry.hpp"

namespace prodcell {

using TranscriptRecords = std::vector<nlohmann::json>;

TranscriptRecords parse_transcript(const std::string& jsonl);

// "name" accepts any arguments; "name(a, *)" requires that arity, '*' matches anything.
bool command_matches(const ServiceRegistry& registry, const std::string& pattern, const std::string& service,
                     const nlohmann::json& args);

struct ExecutableCount {
  int valid = 0;
  int total = 0;
  double rate() const { return total == 0 ? 0.0 : static_cast<double>(valid) / total; }
};

// Verdicts of operator outputs: parsed and validated / all outputs.
ExecutableCount count_executable(const TranscriptRecords& records);
double score_executable(const TranscriptRecords& records);

struct PointResult {
  std::string id;
  std::string agent;
  bool terminal = false;
  bool trigger_seen = false;
  bool decided = false;
  bool executable = false;
  bool executed = false;
  bool effective = false;
  bool optimal = false;
  std::string command;  // canonical text or the raw command when invalid
};

struct ScenarioScore {
  std::string id;
  std::string category;
  std::string status;
  std::string end_reason;
  std::string error;
  ExecutableCount executable;
  std::vector<PointResult> points;
  bool excluded = false;  // no golden points
  bool effective = false; // every terminal point effective
  std::vector<std::string> warnings;
};

ScenarioScore score_scenario(const ServiceRegistry& registry, const ScenarioSpec& scenario,
                             const TranscriptRecords& records);

struct CategoryTotals {
  int scenarios = 0;
  int scored = 0;  // not excluded
  int effective = 0;
  int points = 0;
  int points_effective = 0;
  int failed_runs = 0;
  ExecutableCount executable;

  double executable_rate() const { return executable.rate(); }
  double effective_rate() const { return scored == 0 ? 0.0 : static_cast<double>(effective) / scored; }
  double point_rate() const { return points == 0 ? 0.0 : static_cast<double>(points_effective) / points; }
};

struct BackendReport {
  std::string backend;
  bool remote = false;
  std::vector<ScenarioScore> rows;

  CategoryTotals totals(const std::string& category = "") const;
};

struct EvalReport {
  std::string suite;
  std::vector<BackendReport> backends;
};

BackendReport evaluate_backend(const World& world, const Suite& suite, const BackendDescriptor& backend,
                               const RunConfig& config = {});

// Rounded to whole percent, e.g. "88%".
std::string percent(double fraction);

// Table of executable / effective rates per backend and category.
std::string report_text(const EvalReport& report);
nlohmann::json report_json(const EvalReport& report);

}  // namespace prodcell
