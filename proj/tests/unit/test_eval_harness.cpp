#include <gtest/gtest.h>

#include <thread>

#include <httplib.h>

#include "error.hpp"
#include "eval_harness.hpp"

using namespace prodcell;

namespace {

const World& world() {
  static const World w(PRODCELL_TEST_DATA_DIR);
  return w;
}

std::string verdict_line(bool executable) {
  nlohmann::ordered_json v;
  v["kind"] = "verdict";
  v["agent"] = "op_conveyor";
  v["executable"] = executable;
  if (!executable) v["error"] = "NoJsonFound";
  return v.dump() + "\n";
}

}  // namespace

TEST(Eval, HandBuiltTranscriptWith44Of50ValidScores88Percent) {
  std::string jsonl = "{\"kind\":\"header\"}\n";
  for (int i = 0; i < 50; ++i) {
    jsonl += verdict_line(i % 25 >= 3);  // 3 invalid in every 25
    jsonl += "{\"kind\":\"event\",\"text\":\"filler\"}\n";
  }
  const auto records = parse_transcript(jsonl);
  const auto c = count_executable(records);
  EXPECT_EQ(c.valid, 44);
  EXPECT_EQ(c.total, 50);
  EXPECT_EQ(percent(score_executable(records)), "88%");
}

TEST(Eval, PercentRounds) {
  EXPECT_EQ(percent(0.0), "0%");
  EXPECT_EQ(percent(1.0), "100%");
  EXPECT_EQ(percent(0.875), "88%");
  EXPECT_EQ(percent(2.0 / 3.0), "67%");
}

TEST(Eval, CommandPatterns) {
  const auto& reg = world().registry();
  const nlohmann::json fwd10 = nlohmann::json::array({"forward", 10});
  EXPECT_TRUE(command_matches(reg, "conveyor_belt_run", "conveyor_belt_run", fwd10));
  EXPECT_TRUE(command_matches(reg, "conveyor_belt_run(forward, *)", "conveyor_belt_run", fwd10));
  EXPECT_TRUE(command_matches(reg, "conveyor_belt_run(forward, 10)", "conveyor_belt_run", fwd10));
  EXPECT_FALSE(command_matches(reg, "conveyor_belt_run(backward, *)", "conveyor_belt_run", fwd10));
  EXPECT_FALSE(command_matches(reg, "conveyor_belt_run(forward)", "conveyor_belt_run", fwd10));
  EXPECT_FALSE(command_matches(reg, "wait", "conveyor_belt_run", fwd10));
  EXPECT_TRUE(command_matches(reg, "activate_conveyor", "conveyor_belt_run", fwd10));
}

TEST(Eval, MalformedTranscriptIsRejected) {
  EXPECT_THROW(parse_transcript("{\"kind\":\"header\"}\nnot json\n"), Error);
}

TEST(Eval, RuleOracleIsPerfectOnTheSuite) {
  const auto suite = world().suite("suite100");
  ASSERT_EQ(suite.scenarios.size(), 100u);
  EXPECT_EQ(suite.count("routine"), 50u);
  EXPECT_EQ(suite.count("novel"), 50u);
  const auto b = evaluate_backend(world(), suite, world().backend("rule_oracle"));
  const auto routine = b.totals("routine");
  const auto all = b.totals();
  EXPECT_EQ(all.executable.valid, all.executable.total);
  EXPECT_GT(all.executable.total, 0);
  EXPECT_EQ(routine.effective, routine.scored);
  EXPECT_EQ(routine.scored, 50);
  EXPECT_EQ(all.failed_runs, 0);
}

TEST(Eval, AdversarialIsNeverExecutable) {
  const auto suite = world().suite("suite100");
  const auto b = evaluate_backend(world(), suite, world().backend("adversarial"));
  const auto all = b.totals();
  EXPECT_GT(all.executable.total, 0);
  EXPECT_EQ(all.executable.valid, 0);
  EXPECT_EQ(all.effective, 0);
}

TEST(Eval, RemoteBackendIsReportedAgainstAMockServer) {
  RuleOracle oracle({std::string(PRODCELL_TEST_DATA_DIR) + "/oracle/sop.json"});
  httplib::Server server;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    const auto prompt = body.at("messages").at(0).at("content").get<std::string>();
    const auto text = oracle.respond("remote", prompt_input_section(prompt));
    res.set_content(nlohmann::json{{"choices", {{{"message", {{"content", text}}}}}}}.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  BackendDescriptor d;
  d.name = "mock_remote";
  d.kind = BackendKind::RemoteApi;
  d.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  d.model = "mock";
  const auto suite = world().suite("suite100");
  EvalReport report{suite.id, {evaluate_backend(world(), suite, d)}};
  server.stop();
  t.join();

  const auto j = report_json(report);
  ASSERT_EQ(j.at("backends").size(), 1u);
  EXPECT_EQ(j.at("backends")[0].at("backend"), "mock_remote");
  EXPECT_TRUE(j.at("backends")[0].at("remote").get<bool>());
  const auto routine = report.backends[0].totals("routine");
  EXPECT_GT(routine.executable.total, 0);
  EXPECT_EQ(routine.executable.valid, routine.executable.total);
  const auto text = report_text(report);
  EXPECT_NE(text.find("mock_remote"), std::string::npos);
}

TEST(Eval, UnreachableRemoteStillProducesARow) {
  BackendDescriptor d;
  d.name = "offline_remote";
  d.kind = BackendKind::RemoteApi;
  d.endpoint = "http://127.0.0.1:9/v1";
  d.model = "none";
  d.retries = 0;
  d.timeout_ms = 200;
  Suite small{"small", {world().scenario("golden_run")}};
  const auto b = evaluate_backend(world(), small, d);
  ASSERT_EQ(b.rows.size(), 1u);
  EXPECT_EQ(b.rows[0].error, "BackendUnavailable");
  EXPECT_EQ(b.totals().failed_runs, 1);
}
