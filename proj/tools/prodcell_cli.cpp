// Command-line front end over the C API: run, eval, replay, check, catalog, serve.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "prodcell/prodcell.h"

namespace {

struct CString {
  char* p = nullptr;
  ~CString() { pc_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

int report(pc_status st) {
  std::cerr << "error: " << pc_status_string(st) << ": " << pc_last_error() << "\n";
  return 1;
}

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

struct RunArgs {
  std::string scenario;
  std::string backend = "rule_oracle";
  std::string approve = "auto";
  std::string inference = "pause";
  long long debounce_ms = 0;
  long long latency_ms = 2000;
  int max_decisions = 0;
  bool full_prompts = false;
  std::string out;
  std::vector<std::string> tasks;
  bool quiet = false;
};

// Prints events with seq > since; returns the new cursor.
uint64_t print_events(pc_session* s, uint64_t since, bool quiet) {
  CString lines;
  uint64_t next = since;
  if (pc_session_events(s, since, &lines.p, &next) != PC_OK) return since;
  if (quiet) return next;
  std::istringstream in(lines.str());
  for (std::string line; std::getline(in, line);) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;
    std::cout << j.value("timestamp", std::string{}) << " " << j.value("text", std::string{}) << "\n";
  }
  std::cout.flush();
  return next;
}

int cmd_run(pc_context* ctx, const RunArgs& a) {
  pc_run_options opts;
  pc_run_options_init(&opts);
  opts.scenario = a.scenario.c_str();
  opts.backend = a.backend.c_str();
  opts.approve_human = a.approve == "human";
  opts.debounce_ms = a.debounce_ms;
  opts.buffer_events = a.inference == "buffer";
  opts.inference_latency_ms = a.latency_ms;
  opts.max_decisions = a.max_decisions;
  opts.full_prompts = a.full_prompts;
  pc_session* s = nullptr;
  if (auto st = pc_session_create(ctx, &opts, &s); st != PC_OK) return report(st);
  for (const auto& t : a.tasks) {
    if (auto st = pc_session_submit_task(s, t.c_str()); st != PC_OK) {
      pc_session_destroy(s);
      return report(st);
    }
  }
  uint64_t cursor = 0;
  pc_session_state state = PC_SESSION_RUNNING;
  int rc = 0;
  while (true) {
    if (auto st = pc_session_run(s, &state); st != PC_OK) {
      rc = report(st);
      break;
    }
    cursor = print_events(s, cursor, a.quiet);
    if (state != PC_SESSION_AWAITING_APPROVAL) break;
    CString pending;
    if (auto st = pc_session_pending_approvals(s, &pending.p); st != PC_OK) {
      rc = report(st);
      break;
    }
    bool stop = false;
    for (const auto& p : nlohmann::json::parse(pending.str())) {
      if (p.value("status", std::string{}) != "pending") continue;
      std::cerr << "approve " << p.value("agent", std::string{}) << ": " << p.value("command", std::string{})
                << " ? [y/n] " << std::flush;
      std::string answer;
      if (!std::getline(std::cin, answer)) {
        std::cerr << "\nerror: approval input closed\n";
        stop = true;
        rc = 1;
        break;
      }
      const bool yes = !answer.empty() && (answer[0] == 'y' || answer[0] == 'Y');
      if (auto st = pc_session_resolve(s, p.value("id", std::string{}).c_str(), yes, "cli", nullptr); st != PC_OK) {
        rc = report(st);
        stop = true;
        break;
      }
    }
    if (stop) break;
  }
  CString state_json;
  if (pc_session_info(s, &state_json.p) == PC_OK) {
    const auto j = nlohmann::json::parse(state_json.str());
    std::cerr << "status: " << j.value("status", std::string{}) << " (" << j.value("end_reason", std::string{})
              << ")\n";
  }
  if (!a.out.empty()) {
    CString transcript;
    if (pc_session_transcript(s, &transcript.p) == PC_OK && !write_file(a.out, transcript.str())) {
      std::cerr << "error: cannot write " << a.out << "\n";
      rc = 1;
    }
  }
  if (rc == 0 && state == PC_SESSION_FAILED) rc = 1;
  pc_session_destroy(s);
  return rc;
}

int cmd_eval(pc_context* ctx, const std::string& suite, const std::vector<std::string>& backends, double min_exec,
             double min_eff, const std::string& out) {
  std::vector<const char*> names;
  for (const auto& b : backends) names.push_back(b.c_str());
  CString text, json;
  if (auto st = pc_eval(ctx, suite.c_str(), names.data(), names.size(), &text.p, &json.p); st != PC_OK) {
    return report(st);
  }
  std::cout << text.str();
  if (!out.empty() && !write_file(out, json.str())) {
    std::cerr << "error: cannot write " << out << "\n";
    return 1;
  }
  int rc = 0;
  const auto parsed = nlohmann::json::parse(json.str());
  for (const auto& b : parsed.at("backends")) {
    const auto& routine = b.at("categories").at("routine");
    const auto& all = b.at("categories").at("all");
    if (min_exec >= 0 && all.value("executable_rate", 0.0) + 1e-9 < min_exec) {
      std::cerr << "threshold: " << b.value("backend", std::string{}) << " executable rate below " << min_exec << "\n";
      rc = 1;
    }
    if (min_eff >= 0 && routine.value("effective_rate", 0.0) + 1e-9 < min_eff) {
      std::cerr << "threshold: " << b.value("backend", std::string{}) << " routine effective rate below " << min_eff
                << "\n";
      rc = 1;
    }
  }
  return rc;
}

int cmd_replay(pc_context* ctx, const std::string& path) {
  std::string text;
  if (!read_file(path, text)) {
    std::cerr << "error: cannot read " << path << "\n";
    return 2;
  }
  int identical = 0;
  CString json;
  if (auto st = pc_replay(ctx, text.c_str(), &identical, &json.p); st != PC_OK) return report(st);
  const auto j = nlohmann::json::parse(json.str());
  if (identical) {
    std::cout << "identical\n";
    return 0;
  }
  std::cout << "differs at line " << j.value("first_difference_line", 0) << "\n";
  return 1;
}

pc_server* active_server = nullptr;

void on_signal(int) {
  if (active_server) pc_server_stop(active_server);
}

int cmd_serve(pc_context* ctx, const std::string& host, int port) {
  pc_server* server = nullptr;
  int bound = 0;
  if (auto st = pc_server_create(ctx, host.c_str(), port, &server, &bound); st != PC_OK) return report(st);
  std::cout << "listening on " << host << ":" << bound << std::endl;
  active_server = server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const auto st = pc_server_run(server);
  active_server = nullptr;
  pc_server_destroy(server);
  return st == PC_OK ? 0 : report(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Agent-controlled production cell simulator"};
  app.require_subcommand(1);
  std::string data_dir;
  app.add_option("--data-dir", data_dir, "Data directory (scenarios, agents, backends)");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run one scenario and print its event log");
  run_cmd->add_option("scenario", run.scenario, "Scenario name or .json path")->required();
  run_cmd->add_option("--backend", run.backend, "Backend name or .json path");
  run_cmd->add_option("--approve", run.approve, "Approval mode")->check(CLI::IsMember({"auto", "human"}));
  run_cmd->add_option("--inference", run.inference, "Clock during inference")->check(CLI::IsMember({"pause", "buffer"}));
  run_cmd->add_option("--latency-ms", run.latency_ms, "Modeled inference latency in buffer mode")->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--debounce-ms", run.debounce_ms, "Coalesce events within this window")->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--max-decisions", run.max_decisions, "Override the scenario decision cap")->check(CLI::NonNegativeNumber);
  run_cmd->add_flag("--full-prompts", run.full_prompts, "Store prompt text in the transcript");
  run_cmd->add_option("--task", run.tasks, "User task submitted at start (repeatable)");
  run_cmd->add_option("-o,--out", run.out, "Write the transcript (JSONL) here");
  run_cmd->add_flag("-q,--quiet", run.quiet, "Do not print events");

  std::string suite = "suite100";
  std::vector<std::string> backends;
  double min_exec = -1, min_eff = -1;
  std::string eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "Score backends on a scenario suite");
  eval_cmd->add_option("--suite", suite, "Suite name or .json path");
  eval_cmd->add_option("--backend", backends, "Backend (repeatable)");
  eval_cmd->add_option("--min-executable", min_exec, "Fail below this executable rate (0..1)");
  eval_cmd->add_option("--min-effective", min_eff, "Fail below this routine effective rate (0..1)");
  eval_cmd->add_option("--out", eval_out, "Write the JSON report here");

  std::string replay_path;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a transcript and compare byte for byte");
  replay_cmd->add_option("transcript", replay_path, "Transcript JSONL")->required();

  std::string command;
  auto* check_cmd = app.add_subcommand("check", "Parse and validate one command");
  check_cmd->add_option("command", command, "e.g. 'conveyor_belt_run(forward, 10)'")->required();

  auto* catalog_cmd = app.add_subcommand("catalog", "Print the service registry and catalog");

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP gateway");
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--port", port, "Port, 0 for any free port")->check(CLI::Range(0, 65535));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  pc_context* ctx = nullptr;
  if (auto st = pc_context_create(data_dir.empty() ? nullptr : data_dir.c_str(), &ctx); st != PC_OK) {
    return report(st);
  }
  int rc = 0;
  if (*run_cmd) {
    rc = cmd_run(ctx, run);
  } else if (*eval_cmd) {
    if (backends.empty()) backends.push_back("rule_oracle");
    rc = cmd_eval(ctx, suite, backends, min_exec, min_eff, eval_out);
  } else if (*replay_cmd) {
    rc = cmd_replay(ctx, replay_path);
  } else if (*check_cmd) {
    CString json;
    const auto st = pc_command_check(ctx, command.c_str(), &json.p);
    if (st == PC_OK) {
      std::cout << nlohmann::json::parse(json.str()).value("canonical", std::string{}) << "\n";
    } else {
      std::cout << pc_status_string(st) << ": " << pc_last_error() << "\n";
      rc = 1;
    }
  } else if (*catalog_cmd) {
    CString json;
    const auto st = pc_catalog(ctx, &json.p);
    if (st == PC_OK) {
      std::cout << json.str() << "\n";
    } else {
      rc = report(st);
    }
  } else if (*serve_cmd) {
    rc = cmd_serve(ctx, host, port);
  }
  pc_context_destroy(ctx);
  return rc;
}
