#include "prodcell/prodcell.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "error.hpp"
#include "eval_harness.hpp"
#include "gateway.hpp"
#include "orchestrator.hpp"
#include "world.hpp"

#ifndef PRODCELL_DEFAULT_DATA_DIR
#define PRODCELL_DEFAULT_DATA_DIR "data"
#endif

struct pc_context {
  std::unique_ptr<prodcell::World> world;
};

struct pc_session {
  pc_context* ctx;
  std::unique_ptr<prodcell::Session> session;
};

struct pc_server {
  std::unique_ptr<prodcell::Gateway> gateway;
};

namespace {

thread_local std::string last_error;

pc_status fail(pc_status status, const std::string& message) {
  last_error = message;
  return status;
}

// Runs f, mapping exceptions to status codes and recording the message.
template <typename F>
pc_status guarded(F&& f) {
  last_error.clear();
  try {
    f();
    return PC_OK;
  } catch (const prodcell::Error& e) {
    return fail(static_cast<pc_status>(static_cast<int>(e.code())), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(PC_SCHEMA_ERROR, e.what());
  } catch (const std::bad_alloc&) {
    return fail(PC_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PC_INTERNAL, e.what());
  }
}

char* dup(const std::string& s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size());
  p[s.size()] = '\0';
  return p;
}

void require(const void* p, const char* what) {
  if (!p) throw prodcell::Error(prodcell::ErrorCode::InvalidArgument, std::string(what) + " must not be null");
}

pc_session_state state_of(prodcell::SessionStatus s) {
  switch (s) {
    case prodcell::SessionStatus::Running: return PC_SESSION_RUNNING;
    case prodcell::SessionStatus::AwaitingApproval: return PC_SESSION_AWAITING_APPROVAL;
    case prodcell::SessionStatus::Finished: return PC_SESSION_FINISHED;
    case prodcell::SessionStatus::Failed: return PC_SESSION_FAILED;
  }
  return PC_SESSION_FAILED;
}

}  // namespace

extern "C" {

PC_API void pc_free(void* p) { std::free(p); }

PC_API const char* pc_status_string(pc_status status) {
  static thread_local std::string name;
  name = std::string(prodcell::error_code_name(static_cast<prodcell::ErrorCode>(status)));
  return name.c_str();
}

PC_API const char* pc_last_error(void) { return last_error.c_str(); }

PC_API const char* pc_version(void) { return "0.1.0"; }

PC_API void pc_run_options_init(pc_run_options* options) {
  if (!options) return;
  *options = pc_run_options{};
  options->inference_latency_ms = 2000;
}

PC_API pc_status pc_context_create(const char* data_dir, pc_context** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto ctx = std::make_unique<pc_context>();
    ctx->world = std::make_unique<prodcell::World>(data_dir ? data_dir : PRODCELL_DEFAULT_DATA_DIR);
    *out = ctx.release();
  });
}

PC_API void pc_context_destroy(pc_context* ctx) { delete ctx; }

PC_API pc_status pc_session_create(pc_context* ctx, const pc_run_options* options, pc_session** out) {
  return guarded([&] {
    require(ctx, "ctx");
    require(options, "options");
    require(out, "out");
    require(options->scenario, "options->scenario");
    *out = nullptr;
    const auto& world = *ctx->world;
    prodcell::RunConfig config;
    config.approval = options->approve_human ? prodcell::ApprovalMode::Human : prodcell::ApprovalMode::Auto;
    config.debounce_ms = options->debounce_ms;
    config.inference = options->buffer_events ? prodcell::InferenceMode::BufferEvents
                                              : prodcell::InferenceMode::PauseClock;
    config.inference_latency_ms = options->inference_latency_ms;
    config.max_decisions = options->max_decisions;
    config.full_prompts = options->full_prompts != 0;
    if (config.debounce_ms < 0 || config.inference_latency_ms < 0 || config.max_decisions < 0) {
      throw prodcell::Error(prodcell::ErrorCode::InvalidArgument, "run options must be non-negative");
    }
    auto scenario = world.scenario(options->scenario);
    auto backend = world.backend(options->backend ? options->backend : "rule_oracle");
    auto s = std::make_unique<pc_session>();
    s->ctx = ctx;
    s->session = std::make_unique<prodcell::Session>(world, std::move(scenario), prodcell::make_backend(backend), config);
    *out = s.release();
  });
}

PC_API pc_status pc_session_run(pc_session* s, pc_session_state* state) {
  return guarded([&] {
    require(s, "session");
    const auto st = s->session->run();
    if (state) *state = state_of(st);
  });
}

PC_API pc_status pc_session_pending_approvals(pc_session* s, char** json_out) {
  return guarded([&] {
    require(s, "session");
    require(json_out, "json_out");
    nlohmann::json list = nlohmann::json::array();
    for (const auto& p : s->session->approvals()) list.push_back(p.to_json());
    *json_out = dup(list.dump());
  });
}

PC_API pc_status pc_session_resolve(pc_session* s, const char* approval_id, int approved, const char* actor,
                                    char** json_out) {
  return guarded([&] {
    require(s, "session");
    require(approval_id, "approval_id");
    auto result = s->session->resolve_approval(approval_id, approved != 0, actor ? actor : "operator");
    if (json_out) *json_out = dup(result.dump());
  });
}

PC_API pc_status pc_session_submit_task(pc_session* s, const char* text) {
  return guarded([&] {
    require(s, "session");
    require(text, "text");
    s->session->submit_task(text);
  });
}

PC_API pc_status pc_session_events(pc_session* s, uint64_t since, char** jsonl_out, uint64_t* next_since) {
  return guarded([&] {
    require(s, "session");
    require(jsonl_out, "jsonl_out");
    const auto records = s->session->log().since(since);
    std::string out;
    for (const auto& r : records) {
      out += prodcell::to_json(r).dump();
      out += '\n';
    }
    *jsonl_out = dup(out);
    if (next_since) *next_since = records.empty() ? since : records.back().seq;
  });
}

PC_API pc_status pc_session_info(pc_session* s, char** json_out) {
  return guarded([&] {
    require(s, "session");
    require(json_out, "json_out");
    *json_out = dup(s->session->state_json().dump());
  });
}

PC_API pc_status pc_session_transcript(pc_session* s, char** jsonl_out) {
  return guarded([&] {
    require(s, "session");
    require(jsonl_out, "jsonl_out");
    *jsonl_out = dup(s->session->transcript().to_jsonl());
  });
}

PC_API void pc_session_destroy(pc_session* s) { delete s; }

PC_API pc_status pc_eval(pc_context* ctx, const char* suite, const char* const* backends, size_t n_backends,
                         char** report_text, char** report_json) {
  return guarded([&] {
    require(ctx, "ctx");
    require(suite, "suite");
    if (n_backends > 0) require(backends, "backends");
    const auto& world = *ctx->world;
    const auto loaded = world.suite(suite);
    prodcell::EvalReport report;
    report.suite = loaded.id;
    for (size_t i = 0; i < n_backends; ++i) {
      require(backends[i], "backends[i]");
      report.backends.push_back(prodcell::evaluate_backend(world, loaded, world.backend(backends[i])));
    }
    if (report_text) *report_text = dup(prodcell::report_text(report));
    if (report_json) *report_json = dup(prodcell::report_json(report).dump(2));
  });
}

PC_API pc_status pc_replay(pc_context* ctx, const char* transcript_jsonl, int* identical, char** json_out) {
  return guarded([&] {
    require(ctx, "ctx");
    require(transcript_jsonl, "transcript_jsonl");
    const auto r = prodcell::replay_transcript(*ctx->world, transcript_jsonl);
    if (identical) *identical = r.identical ? 1 : 0;
    if (json_out) {
      nlohmann::json j = {{"identical", r.identical}, {"first_difference_line", r.first_difference_line}};
      if (!r.identical) j["replayed"] = r.replayed;
      *json_out = dup(j.dump());
    }
  });
}

PC_API pc_status pc_command_check(pc_context* ctx, const char* command, char** json_out) {
  return guarded([&] {
    require(ctx, "ctx");
    require(command, "command");
    const auto& reg = ctx->world->registry();
    const auto inv = prodcell::validate(reg, prodcell::parse_command(command));
    if (json_out) {
      auto j = prodcell::to_json(inv);
      j["canonical"] = prodcell::format_invocation(reg, inv);
      *json_out = dup(j.dump());
    }
  });
}

PC_API pc_status pc_catalog(pc_context* ctx, char** json_out) {
  return guarded([&] {
    require(ctx, "ctx");
    require(json_out, "json_out");
    const auto& reg = ctx->world->registry();
    std::vector<std::string> names;
    for (const auto& s : reg.services()) names.push_back(s.name);
    auto j = reg.to_json();
    j["catalog"] = prodcell::render_catalog(reg, names);
    *json_out = dup(j.dump(2));
  });
}

PC_API pc_status pc_server_create(pc_context* ctx, const char* host, int port, pc_server** out, int* bound_port) {
  return guarded([&] {
    require(ctx, "ctx");
    require(out, "out");
    *out = nullptr;
    if (port < 0 || port > 65535) throw prodcell::Error(prodcell::ErrorCode::InvalidArgument, "port out of range");
    prodcell::GatewayConfig config;
    if (host) config.host = host;
    config.port = port;
    auto server = std::make_unique<pc_server>();
    server->gateway = std::make_unique<prodcell::Gateway>(*ctx->world, config);
    const int p = server->gateway->bind();
    if (bound_port) *bound_port = p;
    *out = server.release();
  });
}

PC_API pc_status pc_server_run(pc_server* server) {
  return guarded([&] {
    require(server, "server");
    server->gateway->listen();
  });
}

PC_API void pc_server_stop(pc_server* server) {
  if (server) server->gateway->stop();
}

PC_API void pc_server_destroy(pc_server* server) { delete server; }

}  // extern "C"
