#include "backends.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <openssl/evp.h>

#include "agent_core.hpp"
#include "error.hpp"

namespace prodcell {

namespace {

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::string json_escape_inner(const std::string& s) {
  const std::string dumped = nlohmann::json(s).dump();
  return dumped.substr(1, dumped.size() - 2);
}

// $1..$9 from the matched line, $r1..$r9 from the recalled line.
std::string substitute(const std::string& tmpl, const std::smatch& m, const std::smatch* r, bool escape) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] != '$' || i + 1 >= tmpl.size()) {
      out += tmpl[i];
      continue;
    }
    bool recalled = false;
    std::size_t j = i + 1;
    if (tmpl[j] == 'r' && j + 1 < tmpl.size() && std::isdigit(static_cast<unsigned char>(tmpl[j + 1]))) {
      recalled = true;
      ++j;
    }
    if (!std::isdigit(static_cast<unsigned char>(tmpl[j]))) {
      out += tmpl[i];
      continue;
    }
    const std::size_t group = static_cast<std::size_t>(tmpl[j] - '0');
    const std::smatch* src = recalled ? r : &m;
    std::string value = src && group < src->size() ? (*src)[group].str() : std::string{};
    out += escape ? json_escape_inner(value) : value;
    i = j;
  }
  return out;
}

}  // namespace

BackendDescriptor backend_descriptor_from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  BackendDescriptor d;
  try {
    d.name = j.at("name").get<std::string>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "rule_oracle") {
      d.kind = BackendKind::RuleOracle;
      for (const auto& f : j.at("rules")) d.rule_files.push_back(base / f.get<std::string>());
    } else if (kind == "scripted_replay") {
      d.kind = BackendKind::ScriptedReplay;
      d.script = base / j.at("script").get<std::string>();
    } else if (kind == "remote_api") {
      d.kind = BackendKind::RemoteApi;
      d.endpoint = j.at("endpoint").get<std::string>();
      d.model = j.at("model").get<std::string>();
      d.api_key_env = j.value("api_key_env", std::string{});
      d.temperature = j.value("temperature", 0.0);
      d.max_output_tokens = j.value("max_output_tokens", 256);
      d.retries = j.value("retries", 2);
      d.timeout_ms = j.value("timeout_ms", 30'000);
    } else if (kind == "adversarial") {
      d.kind = BackendKind::Adversarial;
    } else {
      throw Error(ErrorCode::SchemaError, "unknown backend kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, "backend " + d.name + ": " + e.what());
  }
  return d;
}

std::unique_ptr<Backend> make_backend(const BackendDescriptor& d) {
  switch (d.kind) {
    case BackendKind::RuleOracle:
      return std::make_unique<RuleOracle>(d.rule_files);
    case BackendKind::ScriptedReplay:
      return std::make_unique<ScriptedReplay>(ScriptedReplay::load(d.script));
    case BackendKind::RemoteApi:
      return std::make_unique<RemoteApi>(d);
    case BackendKind::Adversarial:
      return std::make_unique<Adversarial>();
  }
  throw Error(ErrorCode::Internal, "unhandled backend kind");
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::Internal, "SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

std::string prompt_input_section(const std::string& prompt) {
  static const std::string kInput = "Input:\n";
  static const std::string kOutput = "\nOutput:\n";
  const auto start = prompt.rfind(kInput);
  if (start == std::string::npos) return {};
  auto end = prompt.size();
  if (end >= kOutput.size() && prompt.compare(end - kOutput.size(), kOutput.size(), kOutput) == 0) end -= kOutput.size();
  const auto from = start + kInput.size();
  return from <= end ? prompt.substr(from, end - from) : std::string{};
}

RuleOracle::RuleOracle(const std::vector<std::filesystem::path>& files) {
  for (const auto& f : files) load(read_json_file(f));
}

void RuleOracle::load(const nlohmann::json& j) {
  for (const auto& [agent, list] : j.at("agents").items()) {
    auto& bucket = rules_[agent];
    for (const auto& r : list) {
      OracleRule rule;
      try {
        rule.id = r.at("id").get<std::string>();
        rule.match = std::regex(r.at("match").get<std::string>());
        if (r.contains("recall")) rule.recall = std::regex(r.at("recall").get<std::string>());
        rule.reason = r.value("reason", std::string{});
        rule.command = r.value("command", std::string{});
        rule.response = r.value("response", std::string{});
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError, "oracle rule " + rule.id + ": " + e.what());
      } catch (const std::regex_error& e) {
        throw Error(ErrorCode::SchemaError, "oracle rule " + rule.id + ": bad pattern: " + e.what());
      }
      if (rule.command.empty() == rule.response.empty()) {
        throw Error(ErrorCode::SchemaError, "oracle rule " + rule.id + " needs exactly one of command or response");
      }
      bucket.push_back(std::move(rule));
    }
  }
}

std::string RuleOracle::complete(const BackendRequest& request) {
  return respond(request.agent_id, prompt_input_section(request.prompt));
}

std::string RuleOracle::respond(const std::string& agent_id, const std::string& excerpt) const {
  std::vector<const OracleRule*> candidates;
  if (auto it = rules_.find(agent_id); it != rules_.end()) {
    for (const auto& r : it->second) candidates.push_back(&r);
  }
  if (auto it = rules_.find("*"); it != rules_.end()) {
    for (const auto& r : it->second) candidates.push_back(&r);
  }
  const auto lines = split_lines(excerpt);
  for (std::size_t n = lines.size(); n-- > 0;) {
    for (const auto* rule : candidates) {
      std::smatch m;
      if (!std::regex_search(lines[n], m, rule->match)) continue;
      std::smatch r;
      bool recalled = false;
      if (rule->recall) {
        for (std::size_t k = n; k-- > 0;) {
          if (std::regex_search(lines[k], r, *rule->recall)) {
            recalled = true;
            break;
          }
        }
        if (!recalled) continue;
      }
      const std::smatch* rp = recalled ? &r : nullptr;
      if (!rule->response.empty()) return substitute(rule->response, m, rp, true);
      return format_decision(substitute(rule->reason, m, rp, false), substitute(rule->command, m, rp, false));
    }
  }
  return format_decision("Nothing to do.", "pass()");
}

std::vector<ScriptedReplay::Record> ScriptedReplay::load(const std::filesystem::path& path) {
  std::vector<Record> out;
  if (path.extension() == ".jsonl") {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    for (std::string line; std::getline(in, line);) {
      if (line.empty()) continue;
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded()) throw Error(ErrorCode::SchemaError, path.string() + ": malformed transcript line");
      if (j.value("kind", std::string{}) != "response") continue;
      out.push_back(Record{j.value("agent", std::string{}), j.value("digest", std::string("*")), j.at("text").get<std::string>()});
    }
    return out;
  }
  const auto j = read_json_file(path);
  for (const auto& r : j.is_array() ? j : j.at("records")) {
    out.push_back(Record{r.value("agent", std::string{}), r.value("digest", std::string("*")), r.at("response").get<std::string>()});
  }
  return out;
}

std::string ScriptedReplay::complete(const BackendRequest& request) {
  std::lock_guard lock(mu_);
  used_.resize(records_.size(), false);
  const std::string digest = sha256_hex(request.prompt);
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (used_[i]) continue;
    const auto& r = records_[i];
    if (!r.agent.empty() && r.agent != request.agent_id) continue;
    if (r.digest != "*" && r.digest != digest) continue;
    used_[i] = true;
    return r.response;
  }
  throw Error(ErrorCode::ReplayExhausted, "no recorded response left for agent " + request.agent_id + " (prompt " +
                                              digest.substr(0, 12) + ")");
}

std::string RemoteApi::complete(const BackendRequest& request) {
  const char* key = d_.api_key_env.empty() ? nullptr : std::getenv(d_.api_key_env.c_str());
  if (!d_.api_key_env.empty() && (!key || !*key)) {
    throw Error(ErrorCode::BackendUnavailable, "credential variable " + d_.api_key_env + " is not set");
  }
  // scheme://host[:port][/base]
  const auto scheme_end = d_.endpoint.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::BackendUnavailable, "malformed endpoint " + d_.endpoint);
  const auto path_start = d_.endpoint.find('/', scheme_end + 3);
  const std::string origin = d_.endpoint.substr(0, path_start);
  std::string base = path_start == std::string::npos ? "" : d_.endpoint.substr(path_start);
  while (!base.empty() && base.back() == '/') base.pop_back();

  nlohmann::json body{{"model", d_.model},
                      {"temperature", d_.temperature},
                      {"max_tokens", d_.max_output_tokens},
                      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})}};
  httplib::Headers headers;
  if (key) headers.emplace("Authorization", std::string("Bearer ") + key);

  std::string last_error;
  for (int attempt = 0; attempt <= d_.retries; ++attempt) {
    httplib::Client cli(origin);
    cli.set_connection_timeout(std::chrono::milliseconds(d_.timeout_ms));
    cli.set_read_timeout(std::chrono::milliseconds(d_.timeout_ms));
    auto res = cli.Post(base + "/chat/completions", headers, body.dump(), "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      if (res->status == 401 || res->status == 403) break;
      continue;
    }
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty()) {
      last_error = "unexpected response body";
      continue;
    }
    const auto& msg = j["choices"][0]["message"];
    if (!msg.contains("content") || !msg["content"].is_string()) {
      last_error = "response without text content";
      continue;
    }
    return msg["content"].get<std::string>();
  }
  throw Error(ErrorCode::BackendUnavailable, d_.name + ": " + last_error);
}

std::string Adversarial::complete(const BackendRequest& request) {
  return "Sure! Looking at the log for " + request.agent_id +
         ", I think the best course of action is to keep an eye on the conveyor and decide later.";
}

}  // namespace prodcell
