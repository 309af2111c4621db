#include "event_log.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <regex>

#include "error.hpp"

namespace prodcell {

nlohmann::json to_json(const EventRecord& r) {
  nlohmann::ordered_json j;
  j["seq"] = r.seq;
  j["at"] = r.at;
  j["timestamp"] = r.timestamp_text;
  j["source"] = r.source;
  j["tags"] = r.tags;
  j["text"] = r.text;
  return nlohmann::json::parse(j.dump());
}

EventRecord event_record_from_json(const nlohmann::json& j) {
  EventRecord r;
  r.seq = j.at("seq").get<std::uint64_t>();
  r.at = j.at("at").get<Millis>();
  r.timestamp_text = j.value("timestamp", format_timestamp(r.at));
  r.source = j.value("source", std::string{});
  r.tags = j.value("tags", std::vector<std::string>{});
  r.text = j.at("text").get<std::string>();
  return r;
}

bool Subscription::matches(const EventRecord& record) const {
  if (include_tags.empty()) return true;
  for (const auto& tag : record.tags) {
    if (std::find(include_tags.begin(), include_tags.end(), tag) != include_tags.end()) return true;
  }
  return false;
}

std::string format_timestamp(Millis at) {
  if (at < 0) throw Error(ErrorCode::InvalidArgument, "negative timestamp");
  const long long total = at / 1000;
  char buf[32];
  std::snprintf(buf, sizeof buf, "[%02lld:%02lld:%02lld]", total / 3600, (total / 60) % 60, total % 60);
  return buf;
}

Millis parse_timestamp(std::string_view text) {
  int h = 0;
  int m = 0;
  int s = 0;
  std::string copy(text);
  if (std::sscanf(copy.c_str(), "[%d:%d:%d]", &h, &m, &s) != 3 || m >= 60 || s >= 60) {
    throw Error(ErrorCode::InvalidArgument, "malformed timestamp '" + copy + "'");
  }
  return (static_cast<Millis>(h) * 3600 + m * 60 + s) * 1000;
}

std::string excerpt(std::span<const EventRecord> records, const Subscription& sub) {
  std::deque<const EventRecord*> tail;
  for (const auto& r : records) {
    if (!sub.matches(r)) continue;
    tail.push_back(&r);
    if (tail.size() > sub.window) tail.pop_front();
  }
  std::string out;
  for (const auto* r : tail) {
    if (!out.empty()) out += '\n';
    out += r->line();
  }
  return out;
}

std::vector<EventRecord> state_pair_check(std::span<const EventRecord> records, const std::string& open_pattern,
                                          const std::string& close_pattern) {
  const std::regex open(open_pattern);
  const std::regex close(close_pattern);
  std::deque<const EventRecord*> unmatched;
  for (const auto& r : records) {
    if (std::regex_search(r.text, open)) {
      unmatched.push_back(&r);
    } else if (std::regex_search(r.text, close) && !unmatched.empty()) {
      unmatched.pop_front();
    }
  }
  std::vector<EventRecord> out;
  for (const auto* r : unmatched) out.push_back(*r);
  return out;
}

EventRecord EventLog::append(const EventDraft& draft) {
  if (draft.text.find_first_of("\r\n") != std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "event text must be a single line");
  }
  EventRecord record;
  {
    std::unique_lock lock(mu_);
    if (!records_.empty() && draft.at < records_.back().at) {
      throw Error(ErrorCode::TimeRegression, "event at " + std::to_string(draft.at) + " ms precedes last record at " +
                                                 std::to_string(records_.back().at) + " ms");
    }
    record.seq = records_.empty() ? 1 : records_.back().seq + 1;
    record.at = draft.at;
    record.timestamp_text = format_timestamp(draft.at);
    record.source = draft.source;
    record.text = draft.text;
    record.tags = draft.tags;
    records_.push_back(record);
  }
  appended_.notify_all();
  return record;
}

std::vector<EventRecord> EventLog::snapshot() const {
  std::shared_lock lock(mu_);
  return records_;
}

std::vector<EventRecord> EventLog::since(std::uint64_t since) const {
  std::shared_lock lock(mu_);
  // seq == index + 1
  if (since >= records_.size()) return {};
  return {records_.begin() + static_cast<std::ptrdiff_t>(since), records_.end()};
}

std::uint64_t EventLog::last_seq() const {
  std::shared_lock lock(mu_);
  return records_.empty() ? 0 : records_.back().seq;
}

std::size_t EventLog::size() const {
  std::shared_lock lock(mu_);
  return records_.size();
}

Millis EventLog::last_at() const {
  std::shared_lock lock(mu_);
  return records_.empty() ? 0 : records_.back().at;
}

bool EventLog::wait_for_new(std::uint64_t since, std::chrono::milliseconds timeout) const {
  std::shared_lock lock(mu_);
  return appended_.wait_for(lock, timeout, [&] { return records_.size() > since; });
}

std::string EventLog::excerpt(const Subscription& sub) const {
  std::shared_lock lock(mu_);
  return prodcell::excerpt(records_, sub);
}

std::vector<EventRecord> EventLog::state_pair_check(const std::string& open_pattern,
                                                    const std::string& close_pattern) const {
  std::shared_lock lock(mu_);
  return prodcell::state_pair_check(records_, open_pattern, close_pattern);
}

std::string EventLog::to_jsonl() const {
  std::shared_lock lock(mu_);
  std::string out;
  for (const auto& r : records_) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

}  // namespace prodcell
