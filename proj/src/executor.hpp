#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "event_log.hpp"
#include "plant_sim.hpp"
#include "service_registry.hpp"

namespace prodcell {

enum class PeerStatus { Ready, Busy, Offline };

struct PeerReply {
  PeerStatus status = PeerStatus::Ready;
  Millis delay_ms = 0;
};

PeerReply peer_reply_from_json(const nlohmann::json& j);

// Scripted answers of agents outside the simulation (e.g. the next operator).
// Each peer replays its queue, then repeats the fallback forever.
class PeerDirectory {
 public:
  void script(const std::string& agent_id, std::vector<PeerReply> replies, PeerReply fallback = {});
  PeerReply next_reply(const std::string& agent_id);

 private:
  struct Script {
    std::deque<PeerReply> queue;
    PeerReply fallback;
  };
  std::map<std::string, Script> scripts_;
};

enum class ExecStatus { Ok, Rejected, Failed };
std::string_view to_string(ExecStatus s) noexcept;

struct ExecutionResult {
  ExecStatus status = ExecStatus::Ok;
  ErrorCode error = ErrorCode::Ok;
  std::optional<EventDraft> announcement;  // "Operator agent calls the operation ..."
  std::vector<SignalChange> changes;       // raw plant changes caused by the call
  std::vector<EventDraft> events;          // coordination events; at may lie in the future
  std::string detail;
  std::optional<Millis> hold_until;
};

struct ExecContext {
  std::string agent_id;
  std::string speaker = "Operator agent";
  std::string unit;  // station or AGV the agent controls
  std::string next_agent;
  std::vector<std::string> tags;  // attached to service events
};

class Executor {
 public:
  explicit Executor(const ServiceRegistry& registry) : registry_(registry) {}

  // Plant errors become Failed results; the plant is untouched in that case.
  ExecutionResult execute(const Invocation& invocation, const ExecContext& ctx, Plant& plant, PeerDirectory& peers,
                          Millis now) const;

  std::string announcement_text(const Invocation& invocation, const ExecContext& ctx) const;

 private:
  const ServiceRegistry& registry_;
};

}  // namespace prodcell
