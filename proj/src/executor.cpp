#include "executor.hpp"

namespace prodcell {

namespace {

std::string reply_text(PeerStatus s, bool next_operator, const std::string& agent) {
  const std::string who = next_operator ? "The next operator agent" : "Agent " + agent;
  switch (s) {
    case PeerStatus::Ready:
      return who + " is ready.";
    case PeerStatus::Busy:
      return who + " is busy processing another workpiece.";
    case PeerStatus::Offline:
      return who + " does not respond.";
  }
  return who + ".";
}

std::int64_t int_arg(const Invocation& inv, std::size_t k) { return std::get<std::int64_t>(inv.args.at(k)); }
std::string str_arg(const Invocation& inv, std::size_t k) { return std::get<std::string>(inv.args.at(k)); }

}  // namespace

PeerReply peer_reply_from_json(const nlohmann::json& j) {
  PeerReply r;
  const auto s = j.at("status").get<std::string>();
  if (s == "ready") {
    r.status = PeerStatus::Ready;
  } else if (s == "busy") {
    r.status = PeerStatus::Busy;
  } else if (s == "offline") {
    r.status = PeerStatus::Offline;
  } else {
    throw Error(ErrorCode::SchemaError, "unknown peer status '" + s + "'");
  }
  r.delay_ms = j.value("delay_ms", Millis{0});
  if (r.delay_ms < 0) throw Error(ErrorCode::SchemaError, "peer reply delay must be >= 0");
  return r;
}

void PeerDirectory::script(const std::string& agent_id, std::vector<PeerReply> replies, PeerReply fallback) {
  scripts_[agent_id] = Script{std::deque<PeerReply>(replies.begin(), replies.end()), fallback};
}

PeerReply PeerDirectory::next_reply(const std::string& agent_id) {
  auto it = scripts_.find(agent_id);
  if (it == scripts_.end()) return PeerReply{};
  if (it->second.queue.empty()) return it->second.fallback;
  PeerReply r = it->second.queue.front();
  it->second.queue.pop_front();
  return r;
}

std::string_view to_string(ExecStatus s) noexcept {
  switch (s) {
    case ExecStatus::Ok:
      return "ok";
    case ExecStatus::Rejected:
      return "rejected";
    case ExecStatus::Failed:
      return "failed";
  }
  return "?";
}

std::string Executor::announcement_text(const Invocation& invocation, const ExecContext& ctx) const {
  return ctx.speaker + " calls the operation '" + format_invocation(registry_, invocation) + "'.";
}

ExecutionResult Executor::execute(const Invocation& inv, const ExecContext& ctx, Plant& plant, PeerDirectory& peers,
                                  Millis now) const {
  const auto& desc = registry_.resolve(inv.service);
  ExecutionResult result;
  auto event = [&](Millis at, std::string text, std::vector<std::string> extra_tags = {}) {
    EventDraft d;
    d.at = at;
    d.text = std::move(text);
    d.tags = ctx.tags;
    for (auto& t : extra_tags) {
      if (std::find(d.tags.begin(), d.tags.end(), t) == d.tags.end()) d.tags.push_back(std::move(t));
    }
    d.source = "service_registry";
    result.events.push_back(std::move(d));
  };
  auto of = [](ActuationKind kind) {
    Actuation a;
    a.kind = kind;
    return a;
  };
  auto actuate = [&](Actuation a) {
    a.unit = ctx.unit;
    auto outcome = plant.apply(a);
    result.changes = std::move(outcome.changes);
    return outcome;
  };

  try {
    switch (desc.binding) {
      case Binding::BeltRun: {
        Actuation a;
        a.kind = ActuationKind::BeltRun;
        a.direction = str_arg(inv, 0) == "backward" ? BeltState::Backward : BeltState::Forward;
        a.duration_ms = int_arg(inv, 1) * 1000;
        actuate(a);
        break;
      }
      case Binding::BeltStop:
        actuate(of(ActuationKind::BeltStop));
        break;
      case Binding::HolderEngage:
        actuate(of(ActuationKind::HolderEngage));
        break;
      case Binding::HolderRelease:
        actuate(of(ActuationKind::HolderRelease));
        break;
      case Binding::RfidRead:
        actuate(of(ActuationKind::RfidRead));
        break;
      case Binding::Handover: {
        Actuation a = of(ActuationKind::Handover);
        a.target = ctx.next_agent;
        auto outcome = actuate(a);
        const auto* st = plant.find_station(ctx.unit);
        const std::string next = ctx.next_agent.empty() && st ? st->next_agent : ctx.next_agent;
        event(now, "Workpiece " + outcome.workpiece + " is handed over to " + next + ".", {next});
        break;
      }
      case Binding::AgvMove: {
        Actuation a = of(ActuationKind::AgvMove);
        a.target = str_arg(inv, 0);
        actuate(a);
        break;
      }
      case Binding::AgvLoad:
        actuate(of(ActuationKind::AgvLoad));
        break;
      case Binding::AgvUnload:
        actuate(of(ActuationKind::AgvUnload));
        break;
      case Binding::Wait:
        result.hold_until = now + int_arg(inv, 0) * 1000;
        break;
      case Binding::Alert:
        if (inv.args.empty()) {
          event(now, "Alert to human supervisor raised by " + ctx.agent_id + ".", {"alert"});
        } else {
          event(now, "Alert to human supervisor: " + str_arg(inv, 0), {"alert"});
        }
        break;
      case Binding::Communicate:
      case Binding::CommunicateNext: {
        const std::string peer = desc.binding == Binding::Communicate ? str_arg(inv, 0) : ctx.next_agent;
        if (peer.empty()) throw Error(ErrorCode::ExecutionFault, "agent " + ctx.agent_id + " has no next agent");
        const bool is_next = peer == ctx.next_agent;
        event(now, is_next ? "Communication initiated with the next operator to determine the subsequent action."
                           : "Communication initiated with agent " + peer + ".");
        const PeerReply reply = peers.next_reply(peer);
        event(now + reply.delay_ms, reply_text(reply.status, is_next, peer));
        break;
      }
      case Binding::Pass:
        break;
    }
  } catch (const Error& e) {
    ExecutionResult failed;
    failed.status = ExecStatus::Failed;
    failed.error = e.code();
    failed.detail = e.what();
    if (desc.log_invocation) {
      failed.announcement = EventDraft{now, announcement_text(inv, ctx), ctx.tags, ctx.agent_id};
    }
    EventDraft d{now, "Operation '" + format_invocation(registry_, inv) + "' failed: " + e.what(), ctx.tags,
                 "service_registry"};
    failed.events.push_back(std::move(d));
    return failed;
  }

  if (desc.log_invocation) result.announcement = EventDraft{now, announcement_text(inv, ctx), ctx.tags, ctx.agent_id};
  result.detail = std::string(to_string(desc.binding));
  return result;
}

}  // namespace prodcell
