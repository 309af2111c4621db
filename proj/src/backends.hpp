#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace prodcell {

struct BackendRequest {
  std::string agent_id;
  std::string prompt;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Raw model text. Throws BackendUnavailable or ReplayExhausted.
  virtual std::string complete(const BackendRequest& request) = 0;
  virtual std::string kind() const = 0;
  virtual bool is_remote() const { return false; }
};

enum class BackendKind { RuleOracle, ScriptedReplay, RemoteApi, Adversarial };

struct BackendDescriptor {
  std::string name;
  BackendKind kind = BackendKind::RuleOracle;
  std::vector<std::filesystem::path> rule_files;  // rule_oracle
  std::filesystem::path script;                   // scripted_replay
  std::string endpoint;                           // remote_api, e.g. https://host/v1
  std::string model;
  std::string api_key_env;
  double temperature = 0.0;
  int max_output_tokens = 256;
  int retries = 2;
  int timeout_ms = 30'000;
};

// Relative paths are resolved against `base`.
BackendDescriptor backend_descriptor_from_json(const nlohmann::json& j, const std::filesystem::path& base);

std::unique_ptr<Backend> make_backend(const BackendDescriptor& descriptor);

// Hex SHA-256.
std::string sha256_hex(std::string_view data);

// The event-log excerpt between the last "Input:\n" and the trailing "\nOutput:\n".
std::string prompt_input_section(const std::string& prompt);

struct OracleRule {
  std::string id;
  std::regex match;
  std::optional<std::regex> recall;  // must also match an older line
  std::string reason;
  std::string command;
  std::string response;  // verbatim template used instead of reason/command
};

// Deterministic stand-in for a model: reads the excerpt newest line first and
// answers with the first rule that matches that line.
class RuleOracle : public Backend {
 public:
  explicit RuleOracle(const std::vector<std::filesystem::path>& files);
  RuleOracle() = default;

  void load(const nlohmann::json& j);
  std::string complete(const BackendRequest& request) override;
  std::string kind() const override { return "rule_oracle"; }

  std::string respond(const std::string& agent_id, const std::string& excerpt) const;

 private:
  std::map<std::string, std::vector<OracleRule>> rules_;  // "*" applies to everyone
};

class ScriptedReplay : public Backend {
 public:
  struct Record {
    std::string agent;   // empty = any
    std::string digest;  // "*" = any prompt
    std::string response;
  };

  explicit ScriptedReplay(std::vector<Record> records) : records_(std::move(records)) {}
  // Either a JSON list of records or a transcript (.jsonl) whose response
  // records are replayed.
  static std::vector<Record> load(const std::filesystem::path& path);

  std::string complete(const BackendRequest& request) override;
  std::string kind() const override { return "scripted_replay"; }

 private:
  std::mutex mu_;
  std::vector<Record> records_;
  std::vector<bool> used_;
};

class RemoteApi : public Backend {
 public:
  explicit RemoteApi(BackendDescriptor d) : d_(std::move(d)) {}
  std::string complete(const BackendRequest& request) override;
  std::string kind() const override { return "remote_api"; }
  bool is_remote() const override { return true; }

 private:
  BackendDescriptor d_;
};

// Always answers in prose, never in the requested format.
class Adversarial : public Backend {
 public:
  std::string complete(const BackendRequest& request) override;
  std::string kind() const override { return "adversarial"; }
};

}  // namespace prodcell
