#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "agent_core.hpp"
#include "error.hpp"
#include "world.hpp"

using namespace prodcell;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Ok;
}

const World& world() {
  static const World w(PRODCELL_TEST_DATA_DIR);
  return w;
}

}  // namespace

TEST(Prompt, OperatorPromptMatchesGoldenText) {
  const auto agents = world().agents("agents/conveyor_cell.json");
  const auto it = std::find_if(agents.begin(), agents.end(), [](const AgentSpec& a) { return a.id == "op_conveyor"; });
  ASSERT_NE(it, agents.end());
  std::string input = slurp(std::string(PRODCELL_TEST_DATA_DIR) + "/golden/golden_run_events.txt");
  ASSERT_EQ(input.back(), '\n');
  input.pop_back();
  const auto prompt = build_prompt(it->prompt, render_catalog(world().registry(), it->catalog), input);
  EXPECT_EQ(prompt, slurp(std::string(PRODCELL_TEST_DATA_DIR) + "/golden/golden_run_prompt.txt"));
  EXPECT_TRUE(prompt.ends_with("The next operator agent is ready.\nOutput:\n"));
  EXPECT_EQ(prompt_input_section(prompt), input);
}

TEST(Prompt, EmptySectionsAreSkipped) {
  PromptTemplate t;
  t.role_goal = "Role.";
  EXPECT_EQ(build_prompt(t, "", "[00:00:00] x"), "Role.\n\nInput:\n[00:00:00] x\nOutput:\n");
  EXPECT_EQ(build_prompt(t, "`pass()`: nothing", ""), "Role.\n\nActions you can take:\n\n`pass()`: nothing\n\nInput:\n\nOutput:\n");
}

TEST(Agents, SpecsLoadAndAllowAliases) {
  const auto agents = world().agents("agents/transport_cell.json");
  bool saw_manager = false;
  for (const auto& a : agents) {
    if (a.level == AgentLevel::Manager) {
      saw_manager = true;
      continue;
    }
    EXPECT_FALSE(a.unit.empty());
    EXPECT_TRUE(a.allows("pass", world().registry())) << a.id;
  }
  EXPECT_TRUE(saw_manager);
  const auto conveyor = world().agents("agents/conveyor_cell.json").front();
  EXPECT_TRUE(conveyor.allows("activate_conveyor", world().registry()));
  EXPECT_TRUE(conveyor.allows("conveyor_belt_run", world().registry()));
  EXPECT_FALSE(conveyor.allows("move_to", world().registry()));
  EXPECT_EQ(code_of([] { agent_spec_from_json(nlohmann::json::parse(R"({"id":"x","level":"boss"})")); }),
            ErrorCode::SchemaError);
}

TEST(Decision, ParsesFirstObjectAndIgnoresSurroundingProse) {
  const auto d = parse_decision(
      "Sure, here you go:\n```json\n{\"reason\": \"The next operator is ready {now}.\", \"command\": "
      "\"release_ready_workpiece_to_next_agent()\"}\n```\nAnything else?");
  EXPECT_EQ(d.reason, "The next operator is ready {now}.");
  EXPECT_EQ(d.command, "release_ready_workpiece_to_next_agent()");
}

TEST(Decision, ErrorClasses) {
  EXPECT_EQ(code_of([] { parse_decision("I would start the conveyor."); }), ErrorCode::NoJsonFound);
  EXPECT_EQ(code_of([] { parse_decision("{\"reason\": \"x\"}"); }), ErrorCode::MissingField);
  EXPECT_EQ(code_of([] { parse_decision("{\"command\": \"pass()\"}"); }), ErrorCode::MissingField);
  EXPECT_EQ(code_of([] { parse_decision("{\"reason\": \"x\", \"command\": [\"pass()\"]}"); }), ErrorCode::NonStringField);
  EXPECT_EQ(code_of([] { parse_decision("{\"reason\": \"x\", \"command\": \"pass()\""); }), ErrorCode::NoJsonFound);
}

TEST(Decision, FormatKeepsKeyOrderAndRoundTrips) {
  const auto text = format_decision("Because \"quoted\".", "wait(5)");
  EXPECT_EQ(text, "{\"reason\":\"Because \\\"quoted\\\".\",\"command\":\"wait(5)\"}");
  const auto d = parse_decision(text);
  EXPECT_EQ(d.reason, "Because \"quoted\".");
  EXPECT_EQ(d.command, "wait(5)");
}

TEST(Plan, ParsesStepsForKnownOperators) {
  const auto p = parse_plan(
      R"(Plan: {"goal": "Move W1", "steps": [{"id": "1", "assignee": "op_agv", "instruction": "Pick up W1."}]})",
      {"op_agv", "op_conveyor"});
  ASSERT_EQ(p.steps.size(), 1u);
  EXPECT_EQ(p.steps[0], (PlanStep{"1", "op_agv", "Pick up W1."}));
  EXPECT_EQ(to_json(p).at("goal"), "Move W1");
}

TEST(Plan, ErrorClasses) {
  const std::vector<std::string> ops{"op_agv"};
  EXPECT_EQ(code_of([&] { parse_plan("no plan", ops); }), ErrorCode::NoJsonFound);
  EXPECT_EQ(code_of([&] { parse_plan(R"({"goal": "g"})", ops); }), ErrorCode::MissingField);
  EXPECT_EQ(code_of([&] { parse_plan(R"({"goal": "g", "steps": []})", ops); }), ErrorCode::EmptyPlan);
  EXPECT_EQ(code_of([&] {
              parse_plan(R"({"goal": "g", "steps": [{"id": "1", "assignee": "robot", "instruction": "x"}]})", ops);
            }),
            ErrorCode::UnknownAssignee);
}

TEST(Json, ExtractSkipsBrokenCandidates) {
  const auto j = extract_first_json_object("{not json} then {\"a\": {\"b\": \"}\"}}");
  ASSERT_TRUE(j.has_value());
  EXPECT_EQ(j->at("a").at("b"), "}");
  EXPECT_FALSE(extract_first_json_object("nothing here").has_value());
}
