#include "orchestrator.hpp"

#include <algorithm>
#include <sstream>

#include "error.hpp"

namespace prodcell {

nlohmann::json RunConfig::to_json() const {
  return {{"approval", approval == ApprovalMode::Human ? "human" : "auto"},
          {"debounce_ms", debounce_ms},
          {"inference", inference == InferenceMode::BufferEvents ? "buffer_events" : "pause_clock"},
          {"inference_latency_ms", inference_latency_ms},
          {"max_decisions", max_decisions},
          {"full_prompts", full_prompts}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  const auto approval = j.value("approval", std::string("auto"));
  if (approval != "auto" && approval != "human") throw Error(ErrorCode::InvalidArgument, "approval must be auto or human");
  c.approval = approval == "human" ? ApprovalMode::Human : ApprovalMode::Auto;
  c.debounce_ms = j.value("debounce_ms", Millis{0});
  const auto inference = j.value("inference", std::string("pause_clock"));
  if (inference != "pause_clock" && inference != "buffer_events") {
    throw Error(ErrorCode::InvalidArgument, "inference must be pause_clock or buffer_events");
  }
  c.inference = inference == "buffer_events" ? InferenceMode::BufferEvents : InferenceMode::PauseClock;
  c.inference_latency_ms = j.value("inference_latency_ms", c.inference_latency_ms);
  c.max_decisions = j.value("max_decisions", 0);
  c.full_prompts = j.value("full_prompts", false);
  if (c.debounce_ms < 0 || c.inference_latency_ms < 0 || c.max_decisions < 0) {
    throw Error(ErrorCode::InvalidArgument, "run options must not be negative");
  }
  return c;
}

std::string_view to_string(SessionStatus s) noexcept {
  switch (s) {
    case SessionStatus::Running:
      return "running";
    case SessionStatus::AwaitingApproval:
      return "awaiting_approval";
    case SessionStatus::Finished:
      return "finished";
    case SessionStatus::Failed:
      return "failed";
  }
  return "?";
}

void Transcript::append(Millis at, const std::string& kind, nlohmann::ordered_json body) {
  std::lock_guard lock(mu_);
  nlohmann::ordered_json rec;
  rec["seq"] = records_.size() + 1;
  rec["at"] = at;
  rec["kind"] = kind;
  for (auto& [k, v] : body.items()) rec[k] = std::move(v);
  records_.push_back(std::move(rec));
}

std::vector<nlohmann::ordered_json> Transcript::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::vector<nlohmann::ordered_json> Transcript::since(std::uint64_t seq) const {
  std::lock_guard lock(mu_);
  if (seq >= records_.size()) return {};
  return {records_.begin() + static_cast<std::ptrdiff_t>(seq), records_.end()};
}

std::string Transcript::to_jsonl() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& r : records_) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

std::size_t Transcript::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

nlohmann::json PendingApproval::to_json() const {
  return {{"id", id},
          {"agent", agent},
          {"reason", decision.reason},
          {"command", command_text},
          {"created_at", created_at},
          {"status", status}};
}

namespace {

nlohmann::ordered_json error_body(const Error& e) {
  nlohmann::ordered_json j;
  j["code"] = std::string(error_code_name(e.code()));
  j["message"] = e.what();
  return j;
}

}  // namespace

Session::Session(const World& world, ScenarioSpec scenario, std::unique_ptr<Backend> backend, RunConfig config)
    : world_(world),
      scenario_(std::move(scenario)),
      backend_(std::move(backend)),
      config_(config),
      rules_(world.rules_for(scenario_)),
      plant_(scenario_.plant),
      executor_(world.registry()) {
  if (!backend_) throw Error(ErrorCode::InvalidArgument, "session needs a backend");
  for (auto& spec : world.agents(scenario_.agents)) {
    AgentRuntime a;
    a.spec = std::move(spec);
    agents_.push_back(std::move(a));
  }
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    auto& a = agents_[i];
    if (a.spec.id == scenario_.manager) {
      if (a.spec.level != AgentLevel::Manager) {
        throw Error(ErrorCode::SchemaError, scenario_.id + ": " + a.spec.id + " is not a manager agent");
      }
      manager_ = i;
    }
    if (a.spec.level == AgentLevel::Operator && a.spec.next_agent.empty()) {
      if (const auto* st = plant_.find_station(a.spec.unit)) a.spec.next_agent = st->next_agent;
    }
    if (a.spec.level == AgentLevel::Operator && !plant_.find_station(a.spec.unit) && !plant_.find_agv(a.spec.unit)) {
      throw Error(ErrorCode::UnknownStation, scenario_.id + ": agent " + a.spec.id + " controls unknown unit '" + a.spec.unit + "'");
    }
  }
  if (!scenario_.manager.empty() && !manager_) {
    throw Error(ErrorCode::SchemaError, scenario_.id + ": manager '" + scenario_.manager + "' is not defined");
  }
  for (const auto& [peer, script] : scenario_.peers) peers_.script(peer, script.replies, script.fallback);
  max_decisions_ = config_.max_decisions > 0 ? config_.max_decisions : scenario_.end.max_decisions;
}

Session::~Session() = default;

SessionStatus Session::status() const {
  std::lock_guard lock(mu_);
  return status_;
}

Millis Session::now() const {
  std::lock_guard lock(mu_);
  return plant_.now();
}

void Session::start() {
  started_ = true;
  for (const auto& [address, value] : plant_.read_signals()) pool_.update_signal(address, value, 0);
  nlohmann::ordered_json h;
  h["scenario"] = scenario_.id;
  h["category"] = scenario_.category;
  h["config"] = config_.to_json();
  h["source"] = scenario_.source;
  transcript_.append(plant_.now(), "header", std::move(h));
}

SessionStatus Session::run() {
  std::unique_lock lock(mu_);
  run_lock_ = &lock;
  struct Reset {
    std::unique_lock<std::mutex>** p;
    ~Reset() { *p = nullptr; }
  } reset{&run_lock_};

  if (status_ == SessionStatus::Finished || status_ == SessionStatus::Failed) {
    const bool revivable = status_ == SessionStatus::Finished || error_ == ErrorCode::ScenarioDeadlock;
    if (tasks_.empty() || !revivable) return status_;
    status_ = SessionStatus::Running;
    end_reason_.clear();
    error_ = ErrorCode::Ok;
  }
  if (!started_) start();
  if (status_ == SessionStatus::AwaitingApproval) {
    const bool pending = std::any_of(approvals_.begin(), approvals_.end(),
                                     [](const PendingApproval& p) { return p.status == "pending"; });
    if (pending) return status_;
    status_ = SessionStatus::Running;
  }

  while (status_ == SessionStatus::Running) {
    process_due();
    if (status_ != SessionStatus::Running) break;
    if (check_end()) break;
    if (std::any_of(approvals_.begin(), approvals_.end(), [](const PendingApproval& p) { return p.status == "pending"; })) {
      status_ = SessionStatus::AwaitingApproval;
      break;
    }
    if (auto a = ready_agent()) {
      invoke(*a);
      continue;
    }
    auto next = next_wakeup();
    if (!next) {
      if (scenario_.end.until_commands.empty()) {
        finish(SessionStatus::Finished, "quiescent");
      } else {
        finish(SessionStatus::Failed, "deadlock", ErrorCode::ScenarioDeadlock);
      }
      break;
    }
    const Millis target = std::min(*next, scenario_.end.time_limit_ms);
    ingest(plant_.advance(std::max<Millis>(target - plant_.now(), 0)));
    if (target >= scenario_.end.time_limit_ms) {
      process_due();
      if (status_ == SessionStatus::Running && !check_end()) finish(SessionStatus::Finished, "time_limit");
    }
  }
  return status_;
}

void Session::process_due() {
  const Millis now = plant_.now();
  while (timeline_next_ < scenario_.timeline.size() && scenario_.timeline[timeline_next_].at <= now) {
    const auto& e = scenario_.timeline[timeline_next_++];
    try {
      switch (e.kind) {
        case TimelineEntry::Kind::Spawn:
          ingest(plant_.spawn_workpiece(e.station, e.workpiece, e.cleared));
          break;
        case TimelineEntry::Kind::Fault:
          plant_.inject_fault(e.fault);
          break;
        case TimelineEntry::Kind::ClearFault:
          ingest(plant_.clear_fault(e.target));
          break;
        case TimelineEntry::Kind::Task:
          handle_user_task(e.task);
          break;
      }
    } catch (const Error& err) {
      transcript_.append(now, "timeline_error", error_body(err));
    }
    if (status_ != SessionStatus::Running) return;
  }
  while (!deferred_.empty() && deferred_.front().at <= now) {
    EventDraft d = deferred_.front();
    deferred_.erase(deferred_.begin());
    append_event(d);
  }
  while (true) {
    auto it = std::find_if(in_flight_.begin(), in_flight_.end(), [&](const InFlight& f) { return f.ready_at <= now; });
    if (it == in_flight_.end()) break;
    InFlight f = *it;
    in_flight_.erase(it);
    handle_response(f.agent, f.raw);
  }
  while (!tasks_.empty() && status_ == SessionStatus::Running) {
    std::string task = tasks_.front();
    tasks_.pop_front();
    handle_user_task(task);
  }
}

bool Session::check_end() {
  for (const auto& u : scenario_.end.until_commands) {
    const std::string canonical = world_.registry().knows(u) ? world_.registry().resolve(u).name : u;
    if (std::find(executed_.begin(), executed_.end(), canonical) != executed_.end()) {
      finish(SessionStatus::Finished, "until " + u);
      return true;
    }
  }
  if (plant_.now() >= scenario_.end.time_limit_ms) {
    finish(SessionStatus::Finished, "time_limit");
    return true;
  }
  if (decisions_ >= max_decisions_) {
    finish(SessionStatus::Finished, "max_decisions");
    return true;
  }
  return false;
}

std::optional<std::size_t> Session::ready_agent() const {
  const Millis now = plant_.now();
  const auto fresh = log_.snapshot();
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    const auto& a = agents_[i];
    if (a.spec.level != AgentLevel::Operator || a.awaiting_approval || a.in_flight) continue;
    if (now < a.hold_until) continue;
    std::optional<Millis> newest;
    for (std::size_t k = a.seen_seq; k < fresh.size(); ++k) {
      if (a.spec.subscription.matches(fresh[k])) newest = fresh[k].at;
    }
    if (!newest && !a.wake) continue;
    const Millis debounce = std::max(config_.debounce_ms, a.spec.debounce_ms);
    if (newest && debounce > 0 && now < *newest + debounce) continue;
    return i;
  }
  return std::nullopt;
}

std::optional<Millis> Session::next_wakeup() const {
  const Millis now = plant_.now();
  std::optional<Millis> best;
  auto consider = [&](Millis t) {
    if (t <= now) t = now + 1;
    if (!best || t < *best) best = t;
  };
  if (timeline_next_ < scenario_.timeline.size()) consider(scenario_.timeline[timeline_next_].at);
  if (!deferred_.empty()) consider(deferred_.front().at);
  for (const auto& f : in_flight_) consider(f.ready_at);
  const auto fresh = log_.snapshot();
  for (const auto& a : agents_) {
    if (a.spec.level != AgentLevel::Operator || a.awaiting_approval || a.in_flight) continue;
    std::optional<Millis> newest;
    for (std::size_t k = a.seen_seq; k < fresh.size(); ++k) {
      if (a.spec.subscription.matches(fresh[k])) newest = fresh[k].at;
    }
    if (!newest && !a.wake) continue;
    Millis when = a.hold_until;
    const Millis debounce = std::max(config_.debounce_ms, a.spec.debounce_ms);
    if (newest && debounce > 0) when = std::max(when, *newest + debounce);
    consider(when);
  }
  if (plant_.has_pending_activity()) {
    const Millis step = plant_.state().substep_ms;
    consider((now / step + 1) * step);
  }
  return best;
}

std::optional<std::string> Session::call_backend(std::size_t agent, const std::string& prompt) {
  const std::string id = agents_[agent].spec.id;
  try {
    if (run_lock_) run_lock_->unlock();
    std::string raw;
    try {
      raw = backend_->complete(BackendRequest{id, prompt});
    } catch (...) {
      if (run_lock_) run_lock_->lock();
      throw;
    }
    if (run_lock_) run_lock_->lock();
    return raw;
  } catch (const Error& e) {
    auto body = error_body(e);
    body["agent"] = id;
    transcript_.append(plant_.now(), "backend_error", std::move(body));
    finish(SessionStatus::Failed, "backend_error", e.code());
    return std::nullopt;
  }
}

void Session::invoke(std::size_t i) {
  auto& a = agents_[i];
  a.seen_seq = log_.last_seq();
  a.wake = false;
  const std::string catalog = render_catalog(world_.registry(), a.spec.catalog);
  const std::string prompt = build_prompt(a.spec.prompt, catalog, log_.excerpt(a.spec.subscription));
  const std::string digest = sha256_hex(prompt);
  nlohmann::ordered_json p;
  p["agent"] = a.spec.id;
  p["digest"] = digest;
  if (config_.full_prompts) p["text"] = prompt;
  transcript_.append(plant_.now(), "prompt", std::move(p));
  ++decisions_;

  auto raw = call_backend(i, prompt);
  if (!raw) return;
  nlohmann::ordered_json r;
  r["agent"] = a.spec.id;
  r["digest"] = digest;
  r["text"] = *raw;
  transcript_.append(plant_.now(), "response", std::move(r));

  if (config_.inference == InferenceMode::BufferEvents && config_.inference_latency_ms > 0) {
    agents_[i].in_flight = true;
    in_flight_.push_back(InFlight{plant_.now() + config_.inference_latency_ms, i, *raw});
    return;
  }
  handle_response(i, *raw);
}

void Session::handle_response(std::size_t i, const std::string& raw) {
  auto& a = agents_[i];
  a.in_flight = false;
  const Millis now = plant_.now();
  auto verdict_error = [&](const Error& e) {
    nlohmann::ordered_json v;
    v["agent"] = a.spec.id;
    v["executable"] = false;
    v["error"] = std::string(error_code_name(e.code()));
    v["message"] = e.what();
    transcript_.append(now, "verdict", std::move(v));
  };

  Decision d;
  try {
    d = parse_decision(raw);
  } catch (const Error& e) {
    verdict_error(e);
    return;
  }
  nlohmann::ordered_json dj;
  dj["agent"] = a.spec.id;
  dj["reason"] = d.reason;
  dj["command"] = d.command;
  transcript_.append(now, "decision", std::move(dj));

  Invocation inv;
  try {
    const auto draft = parse_command(d.command);
    inv = validate(world_.registry(), draft);
    if (!a.spec.allows(draft.name, world_.registry())) {
      throw Error(ErrorCode::NotPermitted, a.spec.id + " may not call " + draft.name);
    }
  } catch (const Error& e) {
    verdict_error(e);
    return;
  }
  inv.issued_by = a.spec.id;
  inv.at = now;
  const std::string text = format_invocation(world_.registry(), inv);
  nlohmann::ordered_json v;
  v["agent"] = a.spec.id;
  v["executable"] = true;
  v["invocation"] = text;
  v["service"] = inv.service;
  nlohmann::json args = nlohmann::json::array();
  for (const auto& arg : inv.args) args.push_back(prodcell::to_json(arg));
  v["args"] = args;
  transcript_.append(now, "verdict", std::move(v));

  if (config_.approval == ApprovalMode::Human) {
    PendingApproval p;
    p.id = "ap" + std::to_string(approvals_.size() + 1);
    p.agent = a.spec.id;
    p.decision = d;
    p.invocation = inv;
    p.command_text = text;
    p.created_at = now;
    a.awaiting_approval = true;
    nlohmann::ordered_json aj;
    aj["id"] = p.id;
    aj["agent"] = p.agent;
    aj["invocation"] = text;
    aj["status"] = "pending";
    transcript_.append(now, "approval", std::move(aj));
    approvals_.push_back(std::move(p));
    return;
  }
  execute(i, inv);
}

ExecContext Session::context_for(const AgentRuntime& a) const {
  ExecContext ctx;
  ctx.agent_id = a.spec.id;
  ctx.speaker = a.spec.speaker;
  ctx.unit = a.spec.unit;
  ctx.next_agent = a.spec.next_agent;
  ctx.tags = {a.spec.unit.empty() ? a.spec.id : a.spec.unit};
  return ctx;
}

void Session::execute(std::size_t i, const Invocation& inv) {
  auto& a = agents_[i];
  const Millis now = plant_.now();
  auto res = executor_.execute(inv, context_for(a), plant_, peers_, now);
  if (res.announcement) append_event(*res.announcement);
  ingest(res.changes);
  for (const auto& ev : res.events) {
    if (ev.at <= now) {
      append_event(ev);
    } else {
      auto pos = std::upper_bound(deferred_.begin(), deferred_.end(), ev.at,
                                  [](Millis t, const EventDraft& d) { return t < d.at; });
      deferred_.insert(pos, ev);
    }
  }
  if (res.hold_until) {
    a.hold_until = *res.hold_until;
    a.wake = true;
  }
  nlohmann::ordered_json x;
  x["agent"] = a.spec.id;
  x["invocation"] = format_invocation(world_.registry(), inv);
  x["status"] = std::string(to_string(res.status));
  if (res.status != ExecStatus::Ok) {
    x["error"] = std::string(error_code_name(res.error));
  }
  x["detail"] = res.detail;
  if (res.hold_until) x["hold_until"] = *res.hold_until;
  transcript_.append(now, "execution", std::move(x));
  if (res.status == ExecStatus::Ok) executed_.push_back(inv.service);
}

void Session::handle_user_task(const std::string& text) {
  const Millis now = plant_.now();
  std::vector<std::string> tags{"task"};
  if (manager_) tags.push_back(agents_[*manager_].spec.id);
  append_event(EventDraft{now, "User task received: " + text, tags, "gateway"});
  auto plan_failure = [&](ErrorCode code, const std::string& message) {
    append_event(EventDraft{now, "Plan could not be created: " + message, tags, "orchestrator"});
    nlohmann::ordered_json pj;
    pj["error"] = std::string(error_code_name(ErrorCode::PlanParseFailure));
    pj["cause"] = std::string(error_code_name(code));
    pj["message"] = message;
    transcript_.append(now, "plan", std::move(pj));
  };
  if (!manager_) {
    plan_failure(ErrorCode::InvalidState, "no manager agent is configured.");
    return;
  }
  auto& m = agents_[*manager_];
  const std::string prompt = build_prompt(m.spec.prompt, render_catalog(world_.registry(), m.spec.catalog),
                                          log_.excerpt(m.spec.subscription));
  const std::string digest = sha256_hex(prompt);
  nlohmann::ordered_json p;
  p["agent"] = m.spec.id;
  p["digest"] = digest;
  if (config_.full_prompts) p["text"] = prompt;
  transcript_.append(now, "prompt", std::move(p));
  ++decisions_;
  auto raw = call_backend(*manager_, prompt);
  if (!raw) return;
  nlohmann::ordered_json r;
  r["agent"] = m.spec.id;
  r["digest"] = digest;
  r["text"] = *raw;
  transcript_.append(now, "response", std::move(r));

  std::vector<std::string> operators;
  for (const auto& a : agents_) {
    if (a.spec.level == AgentLevel::Operator) operators.push_back(a.spec.id);
  }
  Plan plan;
  try {
    plan = parse_plan(*raw, operators);
  } catch (const Error& e) {
    std::string msg = e.what();
    if (!msg.empty() && msg.back() != '.') msg += '.';
    plan_failure(e.code(), msg);
    return;
  }
  nlohmann::ordered_json pj;
  pj["agent"] = m.spec.id;
  pj["plan"] = prodcell::to_json(plan);
  transcript_.append(now, "plan", std::move(pj));
  for (const auto& step : plan.steps) {
    auto it = std::find_if(agents_.begin(), agents_.end(), [&](const AgentRuntime& a) { return a.spec.id == step.assignee; });
    std::vector<std::string> step_tags{step.assignee};
    if (!it->spec.unit.empty()) step_tags.push_back(it->spec.unit);
    append_event(EventDraft{now, "Plan step " + step.id + " for " + step.assignee + ": " + step.instruction, step_tags,
                            m.spec.id});
    if (it->active_step.empty()) it->active_step = step.id;
  }
}

void Session::ingest(const std::vector<SignalChange>& changes) {
  if (changes.empty()) return;
  const SignalSnapshot before = pool_.current();
  for (const auto& c : changes) pool_.apply(c);
  emit(observe(changes, rules_, before));
}

void Session::emit(const std::vector<EventDraft>& drafts) {
  for (const auto& d : drafts) append_event(d);
}

void Session::append_event(const EventDraft& draft) {
  const auto rec = log_.append(draft);
  nlohmann::ordered_json e;
  e["event"] = rec.seq;
  e["timestamp"] = rec.timestamp_text;
  e["source"] = rec.source;
  e["tags"] = rec.tags;
  e["text"] = rec.text;
  transcript_.append(rec.at, "event", std::move(e));
}

void Session::finish(SessionStatus status, const std::string& reason, ErrorCode error) {
  status_ = status;
  end_reason_ = reason;
  error_ = error;
  nlohmann::ordered_json e;
  e["status"] = std::string(to_string(status));
  e["reason"] = reason;
  if (error != ErrorCode::Ok) e["error"] = std::string(error_code_name(error));
  e["decisions"] = decisions_;
  e["events"] = log_.size();
  transcript_.append(plant_.now(), "end", std::move(e));
}

std::vector<PendingApproval> Session::approvals() const {
  std::lock_guard lock(mu_);
  return approvals_;
}

nlohmann::json Session::resolve_approval(const std::string& id, bool approved, const std::string& actor) {
  std::lock_guard lock(mu_);
  auto it = std::find_if(approvals_.begin(), approvals_.end(), [&](const PendingApproval& p) { return p.id == id; });
  if (it == approvals_.end()) throw Error(ErrorCode::UnknownApproval, "unknown approval '" + id + "'");
  if (it->status != "pending") throw Error(ErrorCode::AlreadyResolved, "approval " + id + " is already " + it->status);
  const std::size_t agent = static_cast<std::size_t>(
      std::find_if(agents_.begin(), agents_.end(), [&](const AgentRuntime& a) { return a.spec.id == it->agent; }) -
      agents_.begin());
  agents_[agent].awaiting_approval = false;
  it->status = approved ? "approved" : "rejected";
  const Millis now = plant_.now();
  nlohmann::ordered_json aj;
  aj["id"] = it->id;
  aj["agent"] = it->agent;
  aj["invocation"] = it->command_text;
  aj["status"] = it->status;
  aj["actor"] = actor;
  transcript_.append(now, "approval", std::move(aj));
  nlohmann::json result{{"id", it->id}, {"status", it->status}};
  const Invocation inv = it->invocation;
  const std::string command = it->command_text;
  const std::string who = it->agent;
  if (approved) {
    const auto before = transcript_.size();
    execute(agent, inv);
    for (const auto& rec : transcript_.since(before)) {
      if (rec.at("kind") == "execution") result["execution"] = nlohmann::json::parse(rec.dump());
    }
  } else {
    append_event(EventDraft{now, "Command '" + command + "' from " + who + " rejected by supervisor " + actor + ".",
                            context_for(agents_[agent]).tags, "orchestrator"});
  }
  const bool pending = std::any_of(approvals_.begin(), approvals_.end(),
                                   [](const PendingApproval& p) { return p.status == "pending"; });
  if (status_ == SessionStatus::AwaitingApproval && !pending) status_ = SessionStatus::Running;
  return result;
}

void Session::submit_task(const std::string& text) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "task text is empty");
  }
  if (text.find_first_of("\r\n") != std::string::npos) throw Error(ErrorCode::InvalidArgument, "task text must be one line");
  std::lock_guard lock(mu_);
  tasks_.push_back(text);
}

nlohmann::json Session::state_json() const {
  std::lock_guard lock(mu_);
  nlohmann::json agents = nlohmann::json::array();
  for (const auto& a : agents_) {
    agents.push_back({{"id", a.spec.id},
                      {"level", a.spec.level == AgentLevel::Manager ? "manager" : "operator"},
                      {"unit", a.spec.unit},
                      {"hold_until", a.hold_until},
                      {"awaiting_approval", a.awaiting_approval},
                      {"active_step", a.active_step}});
  }
  std::size_t pending = 0;
  for (const auto& p : approvals_) pending += p.status == "pending" ? 1 : 0;
  return {{"scenario", scenario_.id},
          {"status", std::string(to_string(status_))},
          {"end_reason", end_reason_},
          {"now", plant_.now()},
          {"timestamp", format_timestamp(plant_.now())},
          {"decisions", decisions_},
          {"pending_approvals", pending},
          {"agents", agents},
          {"plant", plant_.to_json()}};
}

RunResult run_scenario(const World& world, const ScenarioSpec& scenario, const BackendDescriptor& backend,
                       const RunConfig& config) {
  if (config.approval == ApprovalMode::Human) {
    throw Error(ErrorCode::InvalidArgument, "run_scenario drives auto approval only; use a Session for human mode");
  }
  Session s(world, scenario, make_backend(backend), config);
  RunResult r;
  r.status = s.run();
  r.end_reason = s.end_reason();
  r.transcript_jsonl = s.transcript().to_jsonl();
  r.events = s.log().snapshot();
  return r;
}

ReplayResult replay_transcript(const World& world, const std::string& transcript_jsonl) {
  std::istringstream in(transcript_jsonl);
  std::vector<ScriptedReplay::Record> records;
  std::optional<nlohmann::json> header;
  std::vector<std::pair<std::string, bool>> approvals;  // id, approved, in order
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::SchemaError, "transcript line is not JSON");
    const auto kind = j.value("kind", std::string{});
    if (kind == "header") header = j;
    if (kind == "response") {
      records.push_back({j.value("agent", std::string{}), j.value("digest", std::string("*")), j.at("text").get<std::string>()});
    }
    if (kind == "approval" && j.value("status", std::string{}) != "pending") {
      approvals.emplace_back(j.at("id").get<std::string>(), j.at("status") == "approved");
    }
  }
  if (!header) throw Error(ErrorCode::SchemaError, "transcript has no header record");
  const auto scenario = scenario_from_json(header->at("source"), "transcript header");
  const auto config = RunConfig::from_json(header->at("config"));

  Session s(world, scenario, std::make_unique<ScriptedReplay>(std::move(records)), config);
  std::size_t next_approval = 0;
  std::string actor = "replay";
  {
    // recover the recorded approval actors so rejection events match
    std::istringstream again(transcript_jsonl);
    for (std::string line; std::getline(again, line);) {
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (!j.is_discarded() && j.value("kind", std::string{}) == "approval" && j.contains("actor")) {
        actor = j.at("actor").get<std::string>();
        break;
      }
    }
  }
  while (s.run() == SessionStatus::AwaitingApproval) {
    if (next_approval >= approvals.size()) break;
    const auto& [id, ok] = approvals[next_approval++];
    s.resolve_approval(id, ok, actor);
  }
  ReplayResult r;
  r.original = transcript_jsonl;
  r.replayed = s.transcript().to_jsonl();
  r.identical = r.original == r.replayed;
  if (!r.identical) {
    std::istringstream a(r.original);
    std::istringstream b(r.replayed);
    std::string la;
    std::string lb;
    std::size_t n = 0;
    while (true) {
      ++n;
      const bool ha = static_cast<bool>(std::getline(a, la));
      const bool hb = static_cast<bool>(std::getline(b, lb));
      if (!ha && !hb) break;
      if (ha != hb || la != lb) {
        r.first_difference_line = n;
        break;
      }
    }
  }
  return r;
}

}  // namespace prodcell
