#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "agent_core.hpp"
#include "backends.hpp"
#include "error.hpp"

using namespace prodcell;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Ok;
}

RuleOracle shipped_oracle() { return RuleOracle({std::string(PRODCELL_TEST_DATA_DIR) + "/oracle/sop.json"}); }

std::string command_of(const std::string& raw) { return parse_decision(raw).command; }

// Chat-completions stand-in that answers every request with `reply`.
class MockChat {
 public:
  explicit MockChat(std::string reply, int status = 200) : reply_(std::move(reply)), status_(status) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits_;
      last_body_ = req.body;
      last_auth_ = req.get_header_value("Authorization");
      res.status = status_;
      nlohmann::json body{{"choices", {{{"message", {{"role", "assistant"}, {"content", reply_}}}}}}};
      res.set_content(body.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockChat() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  std::atomic<int> hits_{0};
  std::string last_body_;
  std::string last_auth_;

 private:
  std::string reply_;
  int status_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

BackendDescriptor remote(const std::string& endpoint, const std::string& key_env = {}) {
  BackendDescriptor d;
  d.name = "mock";
  d.kind = BackendKind::RemoteApi;
  d.endpoint = endpoint;
  d.model = "test-model";
  d.api_key_env = key_env;
  d.retries = 1;
  d.timeout_ms = 2'000;
  return d;
}

}  // namespace

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(PromptInput, ExtractsExcerpt) {
  EXPECT_EQ(prompt_input_section("Role.\n\nInput:\n[00:00:01] a\n[00:00:02] b\nOutput:\n"), "[00:00:01] a\n[00:00:02] b");
  EXPECT_EQ(prompt_input_section("no sections"), "");
}

TEST(RuleOracle, FollowsTheStandardProcedure) {
  const auto o = shipped_oracle();
  EXPECT_EQ(command_of(o.respond("op_conveyor", "[00:00:14] Sensor BG56 detects an object at the entrance.")),
            "activate_conveyor(forward, 10)");
  EXPECT_EQ(command_of(o.respond("op_conveyor", "[00:00:19] Sensor BG51 at the ready position detects the workpiece.")),
            "activate_material_holder()");
  EXPECT_EQ(command_of(o.respond("op_conveyor", "[00:00:21] The next operator agent is busy processing another workpiece.")),
            "wait(5)");
  EXPECT_EQ(command_of(o.respond("op_conveyor", "[00:00:26] The next operator agent is ready.")),
            "release_ready_workpiece_to_next_agent()");
}

TEST(RuleOracle, NewestLineWinsAndRecallNeedsHistory) {
  const auto o = shipped_oracle();
  const std::string busy_then_wait =
      "[00:00:21] The next operator agent is busy processing another workpiece.\n"
      "[00:00:21] Operator agent calls the operation 'wait(5)'.";
  EXPECT_EQ(command_of(o.respond("op_conveyor", busy_then_wait)), "ask_next_operator()");
  EXPECT_EQ(command_of(o.respond("op_conveyor", "[00:00:21] Operator agent calls the operation 'wait(5)'.")), "pass()");
  EXPECT_EQ(command_of(o.respond("op_conveyor", "")), "pass()");
}

TEST(RuleOracle, StuckWorkpieceEscalates) {
  const auto o = shipped_oracle();
  const std::string overdue = "[00:00:20] The workpiece has not reached the ready position yet.";
  EXPECT_EQ(command_of(o.respond("op_conveyor", overdue)), "wait(5)");
  const auto raw = o.respond("op_conveyor", overdue + "\n[00:00:24] The conveyor stops.");
  EXPECT_TRUE(command_of(raw).starts_with("send_alert_to_human_supervisor("));
}

TEST(RuleOracle, ManagerResponseIsAPlan) {
  const auto o = shipped_oracle();
  const auto raw = o.respond("manager", "[00:00:00] User task received: Transport workpiece W1 from conveyor1 to dock_b.");
  const auto plan = parse_plan(raw, {"op_agv"});
  ASSERT_EQ(plan.steps.size(), 1u);
  EXPECT_EQ(plan.steps[0].instruction, "Pick up workpiece W1 at conveyor1 and deliver it to dock_b.");
}

TEST(RuleOracle, RejectsBadRules) {
  RuleOracle o;
  EXPECT_EQ(code_of([&] { o.load(nlohmann::json::parse(R"({"agents": {"*": [{"id": "x", "match": "("}]}})")); }),
            ErrorCode::SchemaError);
  EXPECT_EQ(code_of([&] { o.load(nlohmann::json::parse(R"({"agents": {"*": [{"id": "x", "match": "a"}]}})")); }),
            ErrorCode::SchemaError);
}

TEST(ScriptedReplay, MatchesByAgentAndDigestInOrder) {
  ScriptedReplay r({{"a", sha256_hex("p1"), "one"}, {"a", "*", "two"}, {"", "*", "three"}});
  EXPECT_EQ(r.complete({"a", "p1"}), "one");
  EXPECT_EQ(r.complete({"a", "p1"}), "two");
  EXPECT_EQ(r.complete({"b", "p9"}), "three");
  EXPECT_EQ(code_of([&] { r.complete({"a", "p1"}); }), ErrorCode::ReplayExhausted);
}

TEST(Adversarial, NeverAnswersInJson) {
  Adversarial a;
  EXPECT_EQ(code_of([&] { parse_decision(a.complete({"op", "Input:\nx\nOutput:\n"})); }), ErrorCode::NoJsonFound);
}

TEST(RemoteApi, PostsChatCompletionAndReturnsContent) {
  MockChat chat(format_decision("ok", "pass()"));
  ::setenv("PRODCELL_TEST_KEY", "secret", 1);
  RemoteApi api(remote(chat.endpoint(), "PRODCELL_TEST_KEY"));
  EXPECT_EQ(api.complete({"op_conveyor", "prompt text"}), "{\"reason\":\"ok\",\"command\":\"pass()\"}");
  EXPECT_EQ(chat.hits_.load(), 1);
  EXPECT_EQ(chat.last_auth_, "Bearer secret");
  const auto body = nlohmann::json::parse(chat.last_body_);
  EXPECT_EQ(body.at("model"), "test-model");
  EXPECT_EQ(body.at("messages").at(0).at("content"), "prompt text");
  ::unsetenv("PRODCELL_TEST_KEY");
}

TEST(RemoteApi, MissingCredentialIsBackendUnavailable) {
  ::unsetenv("PRODCELL_TEST_KEY_UNSET");
  RemoteApi api(remote("http://127.0.0.1:9/v1", "PRODCELL_TEST_KEY_UNSET"));
  EXPECT_EQ(code_of([&] { api.complete({"op", "p"}); }), ErrorCode::BackendUnavailable);
}

TEST(RemoteApi, ServerErrorsAreRetriedThenReported) {
  MockChat chat("unused", 503);
  RemoteApi api(remote(chat.endpoint()));
  EXPECT_EQ(code_of([&] { api.complete({"op", "p"}); }), ErrorCode::BackendUnavailable);
  EXPECT_EQ(chat.hits_.load(), 2);
}
