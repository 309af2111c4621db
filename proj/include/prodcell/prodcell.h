#ifndef PRODCELL_PRODCELL_H
#define PRODCELL_PRODCELL_H

#include <stddef.h>
#include <stdint.h>

#if defined(PRODCELL_BUILDING_LIBRARY)
#define PC_API __attribute__((visibility("default")))
#else
#define PC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values mirror the core error codes and stay stable across releases. */
typedef enum pc_status {
  PC_OK = 0,
  PC_INVALID_ARGUMENT = 1,
  PC_IO = 2,
  PC_SCHEMA_ERROR = 3,
  PC_ENTRANCE_OCCUPIED = 10,
  PC_UNKNOWN_TARGET = 11,
  PC_INVALID_TIME = 12,
  PC_NO_WORKPIECE_AT_READY_POSITION = 13,
  PC_NO_WORKPIECE_AVAILABLE = 14,
  PC_AGV_BUSY = 15,
  PC_UNKNOWN_STATION = 16,
  PC_TIME_REGRESSION = 20,
  PC_TEMPLATE_RESOLUTION_FAILURE = 21,
  PC_DUPLICATE_RULE_ID = 22,
  PC_DUPLICATE_SERVICE = 30,
  PC_SYNTAX_ERROR = 31,
  PC_UNKNOWN_SERVICE = 32,
  PC_ARITY_MISMATCH = 33,
  PC_DOMAIN_VIOLATION = 34,
  PC_NOT_PERMITTED = 35,
  PC_EXECUTION_FAULT = 36,
  PC_NO_JSON_FOUND = 40,
  PC_MISSING_FIELD = 41,
  PC_NON_STRING_FIELD = 42,
  PC_UNKNOWN_ASSIGNEE = 43,
  PC_EMPTY_PLAN = 44,
  PC_BACKEND_UNAVAILABLE = 45,
  PC_REPLAY_EXHAUSTED = 46,
  PC_SCENARIO_DEADLOCK = 50,
  PC_PLAN_PARSE_FAILURE = 51,
  PC_UNKNOWN_APPROVAL = 52,
  PC_ALREADY_RESOLVED = 53,
  PC_UNKNOWN_SESSION = 54,
  PC_INVALID_STATE = 55,
  PC_UNMATCHED_DECISION_POINT = 56,
  PC_INTERNAL = 99
} pc_status;

typedef enum pc_session_state {
  PC_SESSION_RUNNING = 0,
  PC_SESSION_AWAITING_APPROVAL = 1,
  PC_SESSION_FINISHED = 2,
  PC_SESSION_FAILED = 3
} pc_session_state;

typedef struct pc_context pc_context;
typedef struct pc_session pc_session;
typedef struct pc_server pc_server;

typedef struct pc_run_options {
  const char* scenario;          /* name under scenarios/ or a .json path */
  const char* backend;           /* name under backends/ or a .json path; NULL = rule_oracle */
  int approve_human;             /* 0 = auto approval */
  int64_t debounce_ms;
  int buffer_events;             /* 0 = pause the clock during inference */
  int64_t inference_latency_ms;  /* used when buffer_events != 0 */
  int max_decisions;             /* 0 = scenario default */
  int full_prompts;
} pc_run_options;

/* Strings returned through char** are heap-allocated; release with pc_free. */
PC_API void pc_free(void* p);
PC_API const char* pc_status_string(pc_status status);
/* Message of the last failure on the calling thread, "" if none. */
PC_API const char* pc_last_error(void);
PC_API const char* pc_version(void);

PC_API void pc_run_options_init(pc_run_options* options);

/* data_dir NULL uses the directory configured at build time. */
PC_API pc_status pc_context_create(const char* data_dir, pc_context** out);
PC_API void pc_context_destroy(pc_context* ctx);

PC_API pc_status pc_session_create(pc_context* ctx, const pc_run_options* options, pc_session** out);
/* Runs until the scenario ends or a decision waits for human approval. */
PC_API pc_status pc_session_run(pc_session* s, pc_session_state* state);
PC_API pc_status pc_session_pending_approvals(pc_session* s, char** json_out);
PC_API pc_status pc_session_resolve(pc_session* s, const char* approval_id, int approved, const char* actor,
                                    char** json_out);
PC_API pc_status pc_session_submit_task(pc_session* s, const char* text);
/* Event-log lines with seq > since, one JSON object per line. */
PC_API pc_status pc_session_events(pc_session* s, uint64_t since, char** jsonl_out, uint64_t* next_since);
PC_API pc_status pc_session_info(pc_session* s, char** json_out);
PC_API pc_status pc_session_transcript(pc_session* s, char** jsonl_out);
PC_API void pc_session_destroy(pc_session* s);

/* Runs every scenario of the suite against each backend with auto approval. */
PC_API pc_status pc_eval(pc_context* ctx, const char* suite, const char* const* backends, size_t n_backends,
                         char** report_text, char** report_json);
/* identical is set to 1 when the re-run reproduces the transcript byte for byte. */
PC_API pc_status pc_replay(pc_context* ctx, const char* transcript_jsonl, int* identical, char** json_out);
/* Parses and validates one command; json_out holds the canonical call or the error. */
PC_API pc_status pc_command_check(pc_context* ctx, const char* command, char** json_out);
PC_API pc_status pc_catalog(pc_context* ctx, char** json_out);

/* port 0 picks a free port; bound_port receives the actual one. */
PC_API pc_status pc_server_create(pc_context* ctx, const char* host, int port, pc_server** out, int* bound_port);
/* Blocks until pc_server_stop is called from another thread. */
PC_API pc_status pc_server_run(pc_server* server);
PC_API void pc_server_stop(pc_server* server);
PC_API void pc_server_destroy(pc_server* server);

#ifdef __cplusplus
}
#endif

#endif
