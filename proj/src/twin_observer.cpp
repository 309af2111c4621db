#include "twin_observer.hpp"

#include <algorithm>
#include <cctype>

#include "error.hpp"

namespace prodcell {

std::optional<SignalChange> DataPool::update_signal(const std::string& address, const SignalValue& value, Millis at) {
  if (!is_valid_address(address)) throw Error(ErrorCode::InvalidArgument, "invalid signal address '" + address + "'");
  if (at < last_at()) {
    throw Error(ErrorCode::TimeRegression,
                "write to " + address + " at " + std::to_string(at) + " ms precedes " + std::to_string(last_at()));
  }
  auto it = current_.find(address);
  if (it != current_.end() && it->second == value) return std::nullopt;
  SignalChange change;
  change.address = address;
  change.old_value = it == current_.end() ? SignalValue{} : it->second;
  change.new_value = value;
  change.at = at;
  current_[address] = value;
  history_.push_back(change);
  return change;
}

bool DataPool::apply(const SignalChange& change) {
  return update_signal(change.address, change.new_value, change.at).has_value();
}

std::optional<SignalValue> DataPool::get(const std::string& address) const {
  auto it = current_.find(address);
  if (it == current_.end()) return std::nullopt;
  return it->second;
}

bool glob_match(std::string_view pattern, std::string_view address) noexcept {
  // Classic two-pointer glob, except '*' never crosses a '.'.
  std::size_t p = 0;
  std::size_t a = 0;
  std::size_t star = std::string_view::npos;
  std::size_t mark = 0;
  while (a < address.size()) {
    if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = a;
    } else if (p < pattern.size() && pattern[p] == address[a]) {
      ++p;
      ++a;
    } else if (star != std::string_view::npos && address[mark] != '.') {
      p = star + 1;
      a = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

namespace {

std::vector<std::string> split_address(std::string_view address) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto dot = address.find('.', start);
    out.emplace_back(address.substr(start, dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return out;
}

struct Bindings {
  std::vector<std::string> segments;
  std::string old_text;
  std::string new_text;
  std::string address;
};

// Replaces {name} placeholders. With bindings == nullptr only checks that every
// placeholder could be resolved for an address with `segment_count` parts.
std::string expand(const std::string& tmpl, const Bindings* b, std::size_t segment_count, const std::string& rule_id) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    char c = tmpl[i];
    if (c != '{') {
      out += c;
      ++i;
      continue;
    }
    auto close = tmpl.find('}', i);
    if (close == std::string::npos) {
      throw Error(ErrorCode::TemplateResolutionFailure, "rule " + rule_id + ": unterminated placeholder in '" + tmpl + "'");
    }
    std::string name = tmpl.substr(i + 1, close - i - 1);
    i = close + 1;
    if (!name.empty() && std::all_of(name.begin(), name.end(), [](unsigned char ch) { return std::isdigit(ch); })) {
      std::size_t idx = std::stoul(name);
      if (idx >= segment_count) {
        throw Error(ErrorCode::TemplateResolutionFailure,
                    "rule " + rule_id + ": placeholder {" + name + "} exceeds address segments");
      }
      if (b) out += b->segments[idx];
    } else if (name == "old") {
      if (b) out += b->old_text;
    } else if (name == "new") {
      if (b) out += b->new_text;
    } else if (name == "address") {
      if (b) out += b->address;
    } else {
      throw Error(ErrorCode::TemplateResolutionFailure, "rule " + rule_id + ": unknown placeholder {" + name + "}");
    }
  }
  return out;
}

ValueTest value_test_from_json(const nlohmann::json& j, const char* eq_key, const char* ne_key) {
  ValueTest t;
  if (j.contains(eq_key)) {
    t.op = ValueTest::Op::Eq;
    t.value = signal_value_from_json(j.at(eq_key));
  } else {
    t.op = ValueTest::Op::Ne;
    t.value = signal_value_from_json(j.at(ne_key));
  }
  return t;
}

}  // namespace

EnrichmentRule enrichment_rule_from_json(const nlohmann::json& j) {
  EnrichmentRule r;
  try {
    r.id = j.at("id").get<std::string>();
    const auto& m = j.at("match");
    r.address = m.at("address").get<std::string>();
    if (m.contains("old_eq") || m.contains("old_ne")) r.old_test = value_test_from_json(m, "old_eq", "old_ne");
    if (m.contains("new_eq") || m.contains("new_ne")) r.new_test = value_test_from_json(m, "new_eq", "new_ne");
    for (const auto& g : j.value("when", nlohmann::json::array())) {
      r.when.push_back(Guard{g.at("address").get<std::string>(), value_test_from_json(g, "eq", "ne")});
    }
    r.text = j.at("template").get<std::string>();
    r.tags = j.value("tags", std::vector<std::string>{});
    r.source = j.value("source", std::string("data_observer"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, "enrichment rule " + j.value("id", std::string("?")) + ": " + e.what());
  }
  return r;
}

void RuleSet::add(EnrichmentRule rule) {
  for (const auto& r : rules_) {
    if (r.id == rule.id) throw Error(ErrorCode::DuplicateRuleId, "duplicate enrichment rule id '" + rule.id + "'");
  }
  const std::size_t segs = split_address(rule.address).size();
  expand(rule.text, nullptr, segs, rule.id);
  expand(rule.source, nullptr, segs, rule.id);
  for (const auto& t : rule.tags) expand(t, nullptr, segs, rule.id);
  for (const auto& g : rule.when) {
    if (g.address.find("{old}") != std::string::npos || g.address.find("{new}") != std::string::npos) {
      throw Error(ErrorCode::TemplateResolutionFailure, "rule " + rule.id + ": guard address may only use segments");
    }
    expand(g.address, nullptr, segs, rule.id);
  }
  rules_.push_back(std::move(rule));
}

RuleSet RuleSet::from_json(const nlohmann::json& j) {
  RuleSet set;
  const auto& list = j.is_array() ? j : j.at("rules");
  for (const auto& item : list) set.add(enrichment_rule_from_json(item));
  return set;
}

std::vector<EventDraft> observe(const std::vector<SignalChange>& changes, const RuleSet& rules,
                                const SignalSnapshot& context) {
  std::vector<EventDraft> drafts;
  SignalSnapshot pool = context;
  std::size_t i = 0;
  while (i < changes.size()) {
    std::size_t end = i;
    while (end < changes.size() && changes[end].at == changes[i].at) {
      pool[changes[end].address] = changes[end].new_value;
      ++end;
    }
    for (; i < end; ++i) {
      const auto& ch = changes[i];
      Bindings b{split_address(ch.address), to_text(ch.old_value), to_text(ch.new_value), ch.address};
      for (const auto& rule : rules.rules()) {
        if (!glob_match(rule.address, ch.address)) continue;
        if (rule.old_test && !rule.old_test->test(ch.old_value)) continue;
        if (rule.new_test && !rule.new_test->test(ch.new_value)) continue;
        bool guards_ok = true;
        for (const auto& g : rule.when) {
          auto it = pool.find(expand(g.address, &b, b.segments.size(), rule.id));
          if (it == pool.end() || !g.test.test(it->second)) {
            guards_ok = false;
            break;
          }
        }
        if (!guards_ok) continue;
        EventDraft d;
        d.at = ch.at;
        d.text = expand(rule.text, &b, b.segments.size(), rule.id);
        d.source = expand(rule.source, &b, b.segments.size(), rule.id);
        for (const auto& t : rule.tags) d.tags.push_back(expand(t, &b, b.segments.size(), rule.id));
        drafts.push_back(std::move(d));
      }
    }
  }
  std::stable_sort(drafts.begin(), drafts.end(), [](const EventDraft& a, const EventDraft& b) { return a.at < b.at; });
  return drafts;
}

}  // namespace prodcell
