#pragma once

#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agent_core.hpp"
#include "backends.hpp"
#include "event_log.hpp"
#include "executor.hpp"
#include "plant_sim.hpp"
#include "scenario.hpp"
#include "twin_observer.hpp"
#include "world.hpp"

namespace prodcell {

enum class ApprovalMode { Auto, Human };
enum class InferenceMode { PauseClock, BufferEvents };

struct RunConfig {
  ApprovalMode approval = ApprovalMode::Auto;
  Millis debounce_ms = 0;  // 0 = invoke on every new event
  InferenceMode inference = InferenceMode::PauseClock;
  Millis inference_latency_ms = 2'000;  // buffer_events only
  int max_decisions = 0;                // 0 = scenario default
  bool full_prompts = false;            // store prompt text, not only its digest

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

enum class SessionStatus { Running, AwaitingApproval, Finished, Failed };
std::string_view to_string(SessionStatus s) noexcept;

// Line-delimited audit trail of one run. Appends are serialized; readers get copies.
class Transcript {
 public:
  void append(Millis at, const std::string& kind, nlohmann::ordered_json body);
  std::vector<nlohmann::ordered_json> records() const;
  std::vector<nlohmann::ordered_json> since(std::uint64_t seq) const;
  std::string to_jsonl() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<nlohmann::ordered_json> records_;
};

struct PendingApproval {
  std::string id;
  std::string agent;
  Decision decision;
  Invocation invocation;
  std::string command_text;  // canonical formatted invocation
  Millis created_at = 0;
  std::string status = "pending";  // pending | approved | rejected

  nlohmann::json to_json() const;
};

class Session {
 public:
  Session(const World& world, ScenarioSpec scenario, std::unique_ptr<Backend> backend, RunConfig config = {});
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  // Runs until the scenario ends or a decision waits for approval.
  SessionStatus run();

  std::vector<PendingApproval> approvals() const;
  // Throws UnknownApproval / AlreadyResolved. Call run() afterwards to continue.
  nlohmann::json resolve_approval(const std::string& id, bool approved, const std::string& actor);

  // Queued and handled at the current virtual time by the next run().
  void submit_task(const std::string& text);

  SessionStatus status() const;
  const std::string& end_reason() const noexcept { return end_reason_; }
  ErrorCode error() const noexcept { return error_; }
  const EventLog& log() const noexcept { return log_; }
  const Transcript& transcript() const noexcept { return transcript_; }
  const ScenarioSpec& scenario() const noexcept { return scenario_; }
  Millis now() const;
  int decisions() const noexcept { return decisions_; }
  nlohmann::json state_json() const;

 private:
  struct AgentRuntime {
    AgentSpec spec;
    std::uint64_t seen_seq = 0;
    Millis hold_until = 0;
    bool wake = false;
    bool awaiting_approval = false;
    bool in_flight = false;
    std::string active_step;
  };
  struct InFlight {
    Millis ready_at;
    std::size_t agent;
    std::string raw;
  };

  void start();
  void process_due();
  bool check_end();
  std::optional<std::size_t> ready_agent() const;
  std::optional<Millis> next_wakeup() const;
  void invoke(std::size_t agent);
  void handle_response(std::size_t agent, const std::string& raw);
  void execute(std::size_t agent, const Invocation& inv);
  void handle_user_task(const std::string& text);
  void ingest(const std::vector<SignalChange>& changes);
  void append_event(const EventDraft& draft);
  void emit(const std::vector<EventDraft>& drafts);
  ExecContext context_for(const AgentRuntime& a) const;
  void finish(SessionStatus status, const std::string& reason, ErrorCode error = ErrorCode::Ok);
  std::optional<std::string> call_backend(std::size_t agent, const std::string& prompt);

  const World& world_;
  ScenarioSpec scenario_;
  std::unique_ptr<Backend> backend_;
  RunConfig config_;
  RuleSet rules_;
  Plant plant_;
  DataPool pool_;
  EventLog log_;
  Transcript transcript_;
  PeerDirectory peers_;
  Executor executor_;
  std::vector<AgentRuntime> agents_;
  std::optional<std::size_t> manager_;

  std::size_t timeline_next_ = 0;
  std::vector<EventDraft> deferred_;  // sorted by at, stable
  std::vector<InFlight> in_flight_;
  std::deque<std::string> tasks_;
  std::vector<PendingApproval> approvals_;
  std::vector<std::string> executed_;  // canonical names of ok executions
  int decisions_ = 0;
  int max_decisions_ = 200;
  bool started_ = false;

  SessionStatus status_ = SessionStatus::Running;
  std::string end_reason_;
  ErrorCode error_ = ErrorCode::Ok;
  mutable std::mutex mu_;
  std::unique_lock<std::mutex>* run_lock_ = nullptr;  // released around backend calls
};

// Convenience wrapper: run a scenario to completion with auto approval.
struct RunResult {
  SessionStatus status;
  std::string end_reason;
  std::string transcript_jsonl;
  std::vector<EventRecord> events;
};

RunResult run_scenario(const World& world, const ScenarioSpec& scenario, const BackendDescriptor& backend,
                       const RunConfig& config = {});

struct ReplayResult {
  bool identical = false;
  std::string original;
  std::string replayed;
  std::size_t first_difference_line = 0;  // 1-based, 0 when identical
};

// Re-runs the scenario recorded in a transcript, feeding recorded responses.
ReplayResult replay_transcript(const World& world, const std::string& transcript_jsonl);

}  // namespace prodcell
