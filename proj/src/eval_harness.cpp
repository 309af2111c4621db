#include "eval_harness.hpp"

#include <cmath>
#include <cstdio>
#include <regex>
#include <sstream>

#include "error.hpp"

namespace prodcell {

TranscriptRecords parse_transcript(const std::string& jsonl) {
  TranscriptRecords out;
  std::istringstream in(jsonl);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) {
    ++n;
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::SchemaError, "transcript line " + std::to_string(n) + " is not JSON");
    out.push_back(std::move(j));
  }
  return out;
}

namespace {

std::string arg_text(const nlohmann::json& a) {
  if (a.is_string()) return a.get<std::string>();
  return a.dump();
}

}  // namespace

bool command_matches(const ServiceRegistry& registry, const std::string& pattern, const std::string& service,
                     const nlohmann::json& args) {
  std::string name = pattern;
  std::optional<std::vector<std::string>> want;
  if (pattern.find('(') != std::string::npos) {
    const auto draft = parse_command(pattern);
    name = draft.name;
    want = draft.args;
  }
  if (!registry.knows(name) || registry.resolve(name).name != service) return false;
  if (!want) return true;
  if (want->size() != args.size()) return false;
  for (std::size_t i = 0; i < want->size(); ++i) {
    if ((*want)[i] != "*" && (*want)[i] != arg_text(args[i])) return false;
  }
  return true;
}

ExecutableCount count_executable(const TranscriptRecords& records) {
  ExecutableCount c;
  for (const auto& r : records) {
    if (r.value("kind", std::string{}) != "verdict") continue;
    ++c.total;
    if (r.value("executable", false)) ++c.valid;
  }
  return c;
}

double score_executable(const TranscriptRecords& records) { return count_executable(records).rate(); }

ScenarioScore score_scenario(const ServiceRegistry& registry, const ScenarioSpec& scenario,
                             const TranscriptRecords& records) {
  ScenarioScore s;
  s.id = scenario.id;
  s.category = scenario.category;
  s.executable = count_executable(records);
  for (const auto& r : records) {
    if (r.value("kind", std::string{}) == "end") {
      s.status = r.value("status", std::string{});
      s.end_reason = r.value("reason", std::string{});
      s.error = r.value("error", std::string{});
    }
  }
  if (scenario.golden.points.empty()) {
    s.excluded = true;
    s.warnings.push_back(scenario.id + ": no golden decision points, excluded from effectiveness");
    return s;
  }
  bool any_terminal = false;
  for (const auto& p : scenario.golden.points) any_terminal = any_terminal || p.terminal;

  bool all_terminal_effective = true;
  for (std::size_t pi = 0; pi < scenario.golden.points.size(); ++pi) {
    const auto& point = scenario.golden.points[pi];
    PointResult res;
    res.id = point.id;
    res.agent = point.agent;
    res.terminal = point.terminal || (!any_terminal && pi + 1 == scenario.golden.points.size());
    const std::regex trigger(point.trigger);

    std::size_t k = 0;
    for (; k < records.size(); ++k) {
      const auto& r = records[k];
      if (r.value("kind", std::string{}) == "event" && std::regex_search(r.value("text", std::string{}), trigger)) break;
    }
    res.trigger_seen = k < records.size();
    if (!res.trigger_seen) {
      s.warnings.push_back(scenario.id + ": " + std::string(error_code_name(ErrorCode::UnmatchedDecisionPoint)) +
                           " " + point.id);
    } else {
      std::size_t v = k + 1;
      for (; v < records.size(); ++v) {
        const auto& r = records[v];
        if (r.value("kind", std::string{}) == "verdict" && r.value("agent", std::string{}) == point.agent) break;
      }
      if (v < records.size()) {
        const auto& verdict = records[v];
        res.decided = true;
        res.executable = verdict.value("executable", false);
        if (res.executable) {
          res.command = verdict.value("invocation", std::string{});
          // executed ok before that agent's next verdict
          for (std::size_t x = v + 1; x < records.size(); ++x) {
            const auto& r = records[x];
            const auto kind = r.value("kind", std::string{});
            if (r.value("agent", std::string{}) != point.agent) continue;
            if (kind == "verdict") break;
            if (kind == "execution") {
              res.executed = r.value("status", std::string{}) == "ok";
              break;
            }
            if (kind == "approval" && r.value("status", std::string{}) == "rejected") break;
          }
          const auto& service = verdict.value("service", std::string{});
          const auto& args = verdict.contains("args") ? verdict.at("args") : nlohmann::json::array();
          bool acceptable = false;
          for (const auto& a : point.acceptable) acceptable = acceptable || command_matches(registry, a, service, args);
          res.effective = res.executed && acceptable;
          for (const auto& o : point.optimal) res.optimal = res.optimal || (res.effective && command_matches(registry, o, service, args));
        } else {
          res.command = verdict.value("error", std::string{});
        }
      }
    }
    if (res.terminal && !res.effective) all_terminal_effective = false;
    s.points.push_back(std::move(res));
  }
  s.effective = all_terminal_effective;
  return s;
}

CategoryTotals BackendReport::totals(const std::string& category) const {
  CategoryTotals t;
  for (const auto& row : rows) {
    if (!category.empty() && row.category != category) continue;
    ++t.scenarios;
    t.executable.valid += row.executable.valid;
    t.executable.total += row.executable.total;
    if (row.status == "failed" && row.error != "ScenarioDeadlock") ++t.failed_runs;
    if (row.excluded) continue;
    ++t.scored;
    t.effective += row.effective ? 1 : 0;
    for (const auto& p : row.points) {
      ++t.points;
      t.points_effective += p.effective ? 1 : 0;
    }
  }
  return t;
}

BackendReport evaluate_backend(const World& world, const Suite& suite, const BackendDescriptor& backend,
                               const RunConfig& config) {
  BackendReport report;
  report.backend = backend.name;
  report.remote = backend.kind == BackendKind::RemoteApi;
  for (const auto& scenario : suite.scenarios) {
    TranscriptRecords records;
    try {
      Session session(world, scenario, make_backend(backend), config);
      session.run();
      records = parse_transcript(session.transcript().to_jsonl());
    } catch (const Error& e) {
      ScenarioScore failed;
      failed.id = scenario.id;
      failed.category = scenario.category;
      failed.status = "failed";
      failed.error = std::string(error_code_name(e.code()));
      failed.warnings.push_back(scenario.id + ": " + e.what());
      failed.excluded = scenario.golden.points.empty();
      report.rows.push_back(std::move(failed));
      continue;
    }
    report.rows.push_back(score_scenario(world.registry(), scenario, records));
  }
  return report;
}

std::string percent(double fraction) { return std::to_string(std::lround(fraction * 100.0)) + "%"; }

std::string report_text(const EvalReport& report) {
  std::ostringstream out;
  out << "suite " << report.suite << "\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %-8s %9s %9s %10s %9s %8s %7s\n", "backend", "category", "scenarios",
                "decisions", "executable", "effective", "points", "errors");
  out << line;
  for (const auto& b : report.backends) {
    for (const std::string cat : {"routine", "novel", ""}) {
      const auto t = b.totals(cat);
      std::snprintf(line, sizeof line, "%-18s %-8s %9d %9d %10s %9s %8s %7d\n", b.backend.c_str(),
                    cat.empty() ? "all" : cat.c_str(), t.scenarios, t.executable.total,
                    percent(t.executable_rate()).c_str(), percent(t.effective_rate()).c_str(),
                    percent(t.point_rate()).c_str(), t.failed_runs);
      out << line;
    }
  }
  // Full warning lists live in the JSON report; the text shows a few per backend.
  constexpr std::size_t shown = 5;
  for (const auto& b : report.backends) {
    std::size_t total = 0;
    for (const auto& row : b.rows) {
      for (const auto& w : row.warnings) {
        if (total++ < shown) out << "warning [" << b.backend << "] " << w << "\n";
      }
    }
    if (total > shown) out << "warning [" << b.backend << "] " << total - shown << " more\n";
  }
  return out.str();
}

nlohmann::json report_json(const EvalReport& report) {
  nlohmann::json backends = nlohmann::json::array();
  for (const auto& b : report.backends) {
    nlohmann::json cats = nlohmann::json::object();
    for (const std::string cat : {"routine", "novel", ""}) {
      const auto t = b.totals(cat);
      cats[cat.empty() ? "all" : cat] = {{"scenarios", t.scenarios},
                                         {"scored", t.scored},
                                         {"decisions", t.executable.total},
                                         {"executable", t.executable.valid},
                                         {"executable_rate", t.executable_rate()},
                                         {"effective", t.effective},
                                         {"effective_rate", t.effective_rate()},
                                         {"points", t.points},
                                         {"points_effective", t.points_effective},
                                         {"point_rate", t.point_rate()},
                                         {"failed_runs", t.failed_runs}};
    }
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : b.rows) {
      nlohmann::json points = nlohmann::json::array();
      for (const auto& p : r.points) {
        points.push_back({{"id", p.id},
                          {"agent", p.agent},
                          {"terminal", p.terminal},
                          {"trigger_seen", p.trigger_seen},
                          {"executable", p.executable},
                          {"executed", p.executed},
                          {"effective", p.effective},
                          {"optimal", p.optimal},
                          {"command", p.command}});
      }
      rows.push_back({{"id", r.id},
                      {"category", r.category},
                      {"status", r.status},
                      {"end_reason", r.end_reason},
                      {"error", r.error},
                      {"outputs", r.executable.total},
                      {"executable", r.executable.valid},
                      {"excluded", r.excluded},
                      {"effective", r.effective},
                      {"points", points},
                      {"warnings", r.warnings}});
    }
    backends.push_back({{"backend", b.backend}, {"remote", b.remote}, {"categories", cats}, {"scenarios", rows}});
  }
  return {{"suite", report.suite}, {"backends", backends}};
}

}  // namespace prodcell
