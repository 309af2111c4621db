#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "signal.hpp"

namespace prodcell {

// An event before it has been given a sequence number.
struct EventDraft {
  Millis at = 0;
  std::string text;
  std::vector<std::string> tags;
  std::string source;

  bool operator==(const EventDraft&) const = default;
};

struct EventRecord {
  std::uint64_t seq = 0;
  Millis at = 0;
  std::string timestamp_text;  // "[HH:MM:SS]"
  std::string source;
  std::string text;
  std::vector<std::string> tags;

  bool operator==(const EventRecord&) const = default;
  std::string line() const { return timestamp_text + " " + text; }
};

nlohmann::json to_json(const EventRecord& record);
EventRecord event_record_from_json(const nlohmann::json& j);

struct Subscription {
  std::string agent_id;
  std::vector<std::string> include_tags;  // empty = everything
  std::size_t window = 50;

  bool matches(const EventRecord& record) const;
};

// Whole seconds since scenario start, floored, as "[HH:MM:SS]".
std::string format_timestamp(Millis at);
// Inverse of format_timestamp, in milliseconds (always a whole second).
Millis parse_timestamp(std::string_view text);

// The last `window` matching records, oldest first, one "[HH:MM:SS] text" per line.
std::string excerpt(std::span<const EventRecord> records, const Subscription& sub);

// Open records (matching open_pattern) with no later close record; closes pair
// with the oldest unmatched open.
std::vector<EventRecord> state_pair_check(std::span<const EventRecord> records, const std::string& open_pattern,
                                          const std::string& close_pattern);

// Chronological, append-only event memory. One writer appends; any number of
// readers may copy consistent prefixes concurrently.
class EventLog {
 public:
  EventLog() = default;
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  EventRecord append(const EventDraft& draft);

  std::vector<EventRecord> snapshot() const;
  // Records with seq > since.
  std::vector<EventRecord> since(std::uint64_t since) const;
  std::uint64_t last_seq() const;
  std::size_t size() const;
  Millis last_at() const;

  // Blocks until a record with seq > since exists or the timeout elapses.
  bool wait_for_new(std::uint64_t since, std::chrono::milliseconds timeout) const;

  std::string excerpt(const Subscription& sub) const;
  std::vector<EventRecord> state_pair_check(const std::string& open_pattern, const std::string& close_pattern) const;

  // Line-delimited JSON export (seq, at, timestamp, source, tags, text).
  std::string to_jsonl() const;

 private:
  mutable std::shared_mutex mu_;
  mutable std::condition_variable_any appended_;
  std::vector<EventRecord> records_;
};

}  // namespace prodcell
