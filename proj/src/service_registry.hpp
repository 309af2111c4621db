#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "signal.hpp"

namespace prodcell {

enum class ParamKind { Enum, Integer, String };

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::String;
  std::vector<std::string> values;  // enum domain
  std::optional<std::int64_t> min;
  std::optional<std::int64_t> max;
  bool optional = false;  // only trailing params may be optional
};

// What the executor does with a validated invocation.
enum class Binding {
  BeltRun,
  BeltStop,
  HolderEngage,
  HolderRelease,
  RfidRead,
  Handover,
  AgvMove,
  AgvLoad,
  AgvUnload,
  Wait,
  Alert,
  Communicate,
  CommunicateNext,
  Pass,
};

std::string_view to_string(Binding b) noexcept;

struct ServiceDescriptor {
  std::string name;
  std::vector<ParamSpec> params;
  std::string description;
  std::string target = "station";  // station | agv | agent | system
  std::string effect = "actuation";  // actuation | communication | no-op | alert
  std::optional<std::string> duration_param;  // timed services, seconds
  Binding binding = Binding::Pass;
  // Whether execution announces itself with an "Operator agent calls ..." line.
  bool log_invocation = true;

  std::size_t required_arity() const;
};

ServiceDescriptor service_descriptor_from_json(const nlohmann::json& j);

// Positional adapter from alias arguments onto canonical parameters: either
// the index of an alias argument or a fixed literal.
using ArgSource = std::variant<std::size_t, std::string>;

struct AliasEntry {
  std::string alias;
  std::string canonical;
  std::optional<std::string> description;  // catalog wording for the alias
  std::vector<ArgSource> arg_map;           // empty = identity
};

using ArgValue = std::variant<std::int64_t, std::string>;

// Output of parse_command: syntax only, nothing resolved.
struct CommandDraft {
  std::string name;
  std::vector<std::string> args;
  std::vector<bool> quoted;

  bool operator==(const CommandDraft&) const = default;
};

struct Invocation {
  std::string service;  // canonical name
  std::vector<ArgValue> args;
  std::string issued_by;
  Millis at = 0;
  std::string spelled_as;  // name as written, may be an alias

  // Compares the call itself, not who issued it or when.
  bool same_call(const Invocation& other) const { return service == other.service && args == other.args; }
};

struct CatalogEntry {
  std::string name;  // service or alias
  std::optional<std::string> signature;
  std::optional<std::string> description;
};

CatalogEntry catalog_entry_from_json(const nlohmann::json& j);

class ServiceRegistry {
 public:
  void add(ServiceDescriptor descriptor);
  void add_alias(AliasEntry alias);

  const ServiceDescriptor* find(std::string_view name) const;
  const AliasEntry* find_alias(std::string_view name) const;
  // Service or alias, resolved to the canonical descriptor.
  const ServiceDescriptor& resolve(std::string_view name) const;
  bool knows(std::string_view name) const { return find(name) || find_alias(name); }

  const std::vector<ServiceDescriptor>& services() const noexcept { return services_; }
  const std::vector<AliasEntry>& aliases() const noexcept { return aliases_; }

  static ServiceRegistry from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

 private:
  std::vector<ServiceDescriptor> services_;
  std::vector<AliasEntry> aliases_;
};

// name(arg, ...), whitespace tolerant, string args optionally quoted.
CommandDraft parse_command(std::string_view text);

Invocation validate(const ServiceRegistry& registry, const CommandDraft& draft);

// Canonical text: enums bare, integers decimal, strings double-quoted.
std::string format_invocation(const ServiceRegistry& registry, const Invocation& invocation);

// "`signature`: description" blocks separated by blank lines.
std::string render_catalog(const ServiceRegistry& registry, const std::vector<CatalogEntry>& entries);
std::string render_catalog(const ServiceRegistry& registry, const std::vector<std::string>& names);

nlohmann::json to_json(const ArgValue& value);
nlohmann::json to_json(const Invocation& invocation);

}  // namespace prodcell
