#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "agent_core.hpp"
#include "backends.hpp"
#include "scenario.hpp"
#include "service_registry.hpp"
#include "twin_observer.hpp"

namespace prodcell {

// Everything loaded from a data directory: registry, default enrichment rules,
// agent sets, scenarios, suites and backend descriptors. Immutable once built
// except for the agent-set cache.
class World {
 public:
  explicit World(std::filesystem::path data_dir);

  const std::filesystem::path& data_dir() const noexcept { return data_dir_; }
  const ServiceRegistry& registry() const noexcept { return registry_; }
  const nlohmann::json& rules_json() const noexcept { return rules_json_; }
  // Default rules plus scenario extras.
  RuleSet rules_for(const ScenarioSpec& scenario) const;

  std::vector<AgentSpec> agents(const std::string& relative_path) const;

  // Names resolve under scenarios/, suites/, backends/; anything ending in
  // .json is taken as a path.
  ScenarioSpec scenario(const std::string& name_or_path) const;
  Suite suite(const std::string& name_or_path) const;
  BackendDescriptor backend(const std::string& name_or_path) const;

  std::vector<std::string> scenario_names() const;

 private:
  std::filesystem::path resolve(const std::string& name_or_path, const char* subdir) const;

  std::filesystem::path data_dir_;
  ServiceRegistry registry_;
  nlohmann::json rules_json_;
  mutable std::mutex mu_;
  mutable std::map<std::string, std::vector<AgentSpec>> agent_cache_;
};

}  // namespace prodcell
