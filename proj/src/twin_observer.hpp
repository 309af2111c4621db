#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "event_log.hpp"
#include "signal.hpp"

namespace prodcell {

class DataPool {
 public:
  // Returns the change iff the stored value differs (or the address is new).
  std::optional<SignalChange> update_signal(const std::string& address, const SignalValue& value, Millis at);
  // Applies an externally produced change; returns false when it is a no-op.
  bool apply(const SignalChange& change);

  const SignalSnapshot& current() const noexcept { return current_; }
  const std::vector<SignalChange>& history() const noexcept { return history_; }
  std::optional<SignalValue> get(const std::string& address) const;
  Millis last_at() const noexcept { return history_.empty() ? 0 : history_.back().at; }

 private:
  SignalSnapshot current_;
  std::vector<SignalChange> history_;
};

struct ValueTest {
  enum class Op { Eq, Ne } op = Op::Eq;
  SignalValue value;

  bool test(const SignalValue& v) const { return (v == value) == (op == Op::Eq); }
};

// Extra condition on another signal in the pool at the time of the change.
struct Guard {
  std::string address;  // template, e.g. "{0}.BG51.detected"
  ValueTest test;
};

struct EnrichmentRule {
  std::string id;
  std::string address;  // glob, '*' matches within one dotted segment
  std::optional<ValueTest> old_test;
  std::optional<ValueTest> new_test;
  std::vector<Guard> when;
  std::string text;  // placeholders {0}..{n}, {old}, {new}, {address}
  std::vector<std::string> tags;
  std::string source = "data_observer";
};

EnrichmentRule enrichment_rule_from_json(const nlohmann::json& j);

bool glob_match(std::string_view pattern, std::string_view address) noexcept;

class RuleSet {
 public:
  RuleSet() = default;
  // Throws DuplicateRuleId or TemplateResolutionFailure.
  void add(EnrichmentRule rule);
  const std::vector<EnrichmentRule>& rules() const noexcept { return rules_; }
  std::size_t size() const noexcept { return rules_.size(); }

  static RuleSet from_json(const nlohmann::json& j);

 private:
  std::vector<EnrichmentRule> rules_;
};

// Guards are evaluated against `context` with every change of the same
// timestamp already applied. Output is ordered by (at, change order, rule order).
std::vector<EventDraft> observe(const std::vector<SignalChange>& changes, const RuleSet& rules,
                                const SignalSnapshot& context = {});

}  // namespace prodcell
