#include <gtest/gtest.h>

#include <fstream>

#include "error.hpp"
#include "twin_observer.hpp"

using namespace prodcell;

namespace {

RuleSet shipped_rules() {
  std::ifstream in(std::string(PRODCELL_TEST_DATA_DIR) + "/rules.json");
  return RuleSet::from_json(nlohmann::json::parse(in));
}

SignalChange change(std::string address, SignalValue old_value, SignalValue new_value, Millis at) {
  return SignalChange{std::move(address), std::move(old_value), std::move(new_value), at};
}

EnrichmentRule rule(std::string id, std::string address, std::string text) {
  EnrichmentRule r;
  r.id = std::move(id);
  r.address = std::move(address);
  r.text = std::move(text);
  return r;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Ok;
}

}  // namespace

TEST(Glob, StarMatchesOneSegment) {
  EXPECT_TRUE(glob_match("*.BG56.detected", "conveyor1.BG56.detected"));
  EXPECT_FALSE(glob_match("*.BG56.detected", "a.b.BG56.detected"));
  EXPECT_TRUE(glob_match("conveyor*.C1.state", "conveyor12.C1.state"));
  EXPECT_FALSE(glob_match("*.C1.state", "conveyor1.C1.stateX"));
  EXPECT_TRUE(glob_match("*.location", "agv1.location"));
}

TEST(DataPool, ReportsOnlyRealChanges) {
  DataPool pool;
  EXPECT_TRUE(pool.update_signal("c.BG56.detected", true, 10).has_value());
  EXPECT_FALSE(pool.update_signal("c.BG56.detected", true, 20).has_value());
  auto ch = pool.update_signal("c.BG56.detected", false, 30);
  ASSERT_TRUE(ch.has_value());
  EXPECT_EQ(ch->old_value, SignalValue{true});
  EXPECT_EQ(pool.history().size(), 2u);
  EXPECT_EQ(code_of([&] { pool.update_signal("c.BG56.detected", true, 29); }), ErrorCode::TimeRegression);
  EXPECT_EQ(code_of([&] { pool.update_signal("bad address", true, 40); }), ErrorCode::InvalidArgument);
}

TEST(Observe, ShippedRulesProduceGoldenLines) {
  const auto rules = shipped_rules();
  const auto drafts = observe({change("conveyor1.BG56.detected", false, true, 14'300),
                               change("conveyor1.C1.state", std::string("stopped"), std::string("forward"), 14'300),
                               change("conveyor1.BG51.detected", false, true, 19'100),
                               change("conveyor1.H1.engaged", false, true, 19'200)},
                              rules);
  ASSERT_EQ(drafts.size(), 4u);
  EXPECT_EQ(drafts[0].text, "Sensor BG56 detects an object at the entrance.");
  EXPECT_EQ(drafts[1].text, "The conveyor starts moving forward.");
  EXPECT_EQ(drafts[2].text, "Sensor BG51 at the ready position detects the workpiece.");
  EXPECT_EQ(drafts[3].text, "Holder H1 secures the position of the workpiece on the conveyor.");
  EXPECT_EQ(drafts[0].tags, std::vector<std::string>{"conveyor1"});
  EXPECT_EQ(drafts[0].source, "data_observer");
}

TEST(Observe, GuardSuppressesStopWithWorkpieceAtReadyPosition) {
  const auto rules = shipped_rules();
  const auto stop = change("conveyor1.C1.state", std::string("forward"), std::string("stopped"), 24'300);
  SignalSnapshot at_ready{{"conveyor1.BG51.detected", true}};
  EXPECT_TRUE(observe({stop}, rules, at_ready).empty());
  SignalSnapshot empty_ready{{"conveyor1.BG51.detected", false}};
  const auto drafts = observe({stop}, rules, empty_ready);
  ASSERT_EQ(drafts.size(), 1u);
  EXPECT_EQ(drafts[0].text, "The conveyor stops.");
}

TEST(Observe, GuardSeesChangesOfTheSameInstant) {
  const auto rules = shipped_rules();
  SignalSnapshot before{{"conveyor1.BG51.detected", true}};
  const auto drafts = observe({change("conveyor1.BG51.detected", true, false, 500),
                               change("conveyor1.C1.state", std::string("forward"), std::string("stopped"), 500)},
                              rules, before);
  ASSERT_EQ(drafts.size(), 1u);
  EXPECT_EQ(drafts[0].text, "The conveyor stops.");
}

TEST(Observe, OldAndNewPlaceholders) {
  const auto rules = shipped_rules();
  const auto drafts = observe({change("agv1.location", std::string("dock_a"), std::string("in_transit"), 0),
                               change("agv1.location", std::string("in_transit"), std::string("dock_b"), 9'000),
                               change("agv1.cargo", std::string(""), std::string("W1"), 9'500),
                               change("agv1.cargo", std::string("W1"), std::string(""), 9'600)},
                              rules);
  ASSERT_EQ(drafts.size(), 4u);
  EXPECT_EQ(drafts[0].text, "AGV agv1 departs from dock_a.");
  EXPECT_EQ(drafts[1].text, "AGV agv1 arrives at dock_b.");
  EXPECT_EQ(drafts[2].text, "AGV agv1 loads workpiece W1.");
  EXPECT_EQ(drafts[3].text, "AGV agv1 unloads workpiece W1.");
}

TEST(Observe, OrderFollowsTimeThenChangeThenRule) {
  RuleSet rules;
  rules.add(rule("b_first", "*.x", "B {0}"));
  rules.add(rule("a_second", "*.x", "A {0}"));
  const auto drafts = observe({change("s1.x", false, true, 5), change("s2.x", false, true, 5)}, rules);
  ASSERT_EQ(drafts.size(), 4u);
  EXPECT_EQ(drafts[0].text, "B s1");
  EXPECT_EQ(drafts[1].text, "A s1");
  EXPECT_EQ(drafts[2].text, "B s2");
  EXPECT_EQ(drafts[3].text, "A s2");
}

TEST(Observe, UnmatchedChangesProduceNothing) {
  const auto rules = shipped_rules();
  EXPECT_TRUE(observe({change("conveyor1.BG56.detected", true, false, 1)}, rules).empty());
  EXPECT_TRUE(observe({change("conveyor1.unknown", false, true, 1)}, rules).empty());
}

TEST(RuleSet, RejectsDuplicatesAndBadTemplates) {
  RuleSet rules;
  rules.add(rule("one", "*.x", "ok {0}"));
  EXPECT_EQ(code_of([&] { rules.add(rule("one", "*.y", "dup")); }), ErrorCode::DuplicateRuleId);
  EXPECT_EQ(code_of([&] { rules.add(rule("two", "*.x", "{2} out of range")); }), ErrorCode::TemplateResolutionFailure);
  EXPECT_EQ(code_of([&] { rules.add(rule("three", "*.x", "{bogus}")); }), ErrorCode::TemplateResolutionFailure);
  EXPECT_EQ(code_of([&] { rules.add(rule("four", "*.x", "open {0")); }), ErrorCode::TemplateResolutionFailure);
  EXPECT_EQ(rules.size(), 1u);
  EXPECT_EQ(code_of([] { RuleSet::from_json(nlohmann::json::parse(R"({"rules":[{"id":"x"}]})")); }),
            ErrorCode::SchemaError);
}
