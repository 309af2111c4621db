#include "world.hpp"

#include <algorithm>

#include "error.hpp"

namespace prodcell {

World::World(std::filesystem::path data_dir) : data_dir_(std::move(data_dir)) {
  if (!std::filesystem::is_directory(data_dir_)) {
    throw Error(ErrorCode::Io, "data directory " + data_dir_.string() + " does not exist");
  }
  registry_ = ServiceRegistry::from_json(read_json(data_dir_ / "registry.json"));
  rules_json_ = read_json(data_dir_ / "rules.json");
  // fail early on a broken default rule set
  (void)RuleSet::from_json(rules_json_);
}

RuleSet World::rules_for(const ScenarioSpec& scenario) const {
  RuleSet set = RuleSet::from_json(rules_json_);
  for (const auto& r : scenario.extra_rules) set.add(enrichment_rule_from_json(r));
  return set;
}

std::vector<AgentSpec> World::agents(const std::string& relative_path) const {
  std::lock_guard lock(mu_);
  if (auto it = agent_cache_.find(relative_path); it != agent_cache_.end()) return it->second;
  const auto j = read_json(data_dir_ / relative_path);
  std::vector<AgentSpec> out;
  for (const auto& a : j.at("agents")) {
    auto spec = agent_spec_from_json(a);
    for (const auto& s : spec.allowed_services) {
      if (!registry_.knows(s)) {
        throw Error(ErrorCode::UnknownService, relative_path + ": agent " + spec.id + " allows unknown service '" + s + "'");
      }
    }
    for (const auto& c : spec.catalog) {
      if (!registry_.knows(c.name)) {
        throw Error(ErrorCode::UnknownService, relative_path + ": agent " + spec.id + " lists unknown service '" + c.name + "'");
      }
    }
    if (std::any_of(out.begin(), out.end(), [&](const AgentSpec& o) { return o.id == spec.id; })) {
      throw Error(ErrorCode::SchemaError, relative_path + ": duplicate agent id '" + spec.id + "'");
    }
    out.push_back(std::move(spec));
  }
  std::sort(out.begin(), out.end(), [](const AgentSpec& a, const AgentSpec& b) { return a.id < b.id; });
  agent_cache_[relative_path] = out;
  return out;
}

std::filesystem::path World::resolve(const std::string& name_or_path, const char* subdir) const {
  std::filesystem::path p(name_or_path);
  if (p.extension() == ".json" || p.extension() == ".jsonl") return p;
  return data_dir_ / subdir / (name_or_path + ".json");
}

ScenarioSpec World::scenario(const std::string& name_or_path) const {
  return load_scenario_file(resolve(name_or_path, "scenarios"));
}

Suite World::suite(const std::string& name_or_path) const {
  return load_suite_file(resolve(name_or_path, "suites"), data_dir_ / "scenarios");
}

BackendDescriptor World::backend(const std::string& name_or_path) const {
  return backend_descriptor_from_json(read_json(resolve(name_or_path, "backends")), data_dir_);
}

std::vector<std::string> World::scenario_names() const {
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(data_dir_ / "scenarios")) {
    if (entry.path().extension() == ".json") names.push_back(entry.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace prodcell
