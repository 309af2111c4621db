#include "service_registry.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "error.hpp"

namespace prodcell {

namespace {

constexpr std::pair<Binding, std::string_view> kBindingNames[] = {
    {Binding::BeltRun, "belt_run"},
    {Binding::BeltStop, "belt_stop"},
    {Binding::HolderEngage, "holder_engage"},
    {Binding::HolderRelease, "holder_release"},
    {Binding::RfidRead, "rfid_read"},
    {Binding::Handover, "handover"},
    {Binding::AgvMove, "agv_move"},
    {Binding::AgvLoad, "agv_load"},
    {Binding::AgvUnload, "agv_unload"},
    {Binding::Wait, "wait"},
    {Binding::Alert, "alert"},
    {Binding::Communicate, "communicate"},
    {Binding::CommunicateNext, "communicate_next"},
    {Binding::Pass, "pass"},
};

Binding binding_from_string(const std::string& s) {
  for (const auto& [b, name] : kBindingNames) {
    if (name == s) return b;
  }
  throw Error(ErrorCode::SchemaError, "unknown service binding '" + s + "'");
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

[[noreturn]] void syntax(std::string_view text, const std::string& why) {
  throw Error(ErrorCode::SyntaxError, "cannot parse command '" + std::string(text) + "': " + why);
}

std::optional<std::int64_t> parse_int(const std::string& s) {
  std::int64_t v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || first == last) return std::nullopt;
  return v;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string_view to_string(Binding b) noexcept {
  for (const auto& [binding, name] : kBindingNames) {
    if (binding == b) return name;
  }
  return "?";
}

std::size_t ServiceDescriptor::required_arity() const {
  return static_cast<std::size_t>(
      std::count_if(params.begin(), params.end(), [](const ParamSpec& p) { return !p.optional; }));
}

ServiceDescriptor service_descriptor_from_json(const nlohmann::json& j) {
  ServiceDescriptor d;
  try {
    d.name = j.at("name").get<std::string>();
    for (const auto& p : j.value("params", nlohmann::json::array())) {
      ParamSpec spec;
      spec.name = p.at("name").get<std::string>();
      const auto kind = p.at("kind").get<std::string>();
      if (kind == "enum") {
        spec.kind = ParamKind::Enum;
        spec.values = p.at("values").get<std::vector<std::string>>();
        if (spec.values.empty()) throw Error(ErrorCode::SchemaError, d.name + "." + spec.name + ": empty enum domain");
      } else if (kind == "integer") {
        spec.kind = ParamKind::Integer;
        if (p.contains("min")) spec.min = p.at("min").get<std::int64_t>();
        if (p.contains("max")) spec.max = p.at("max").get<std::int64_t>();
      } else if (kind == "string") {
        spec.kind = ParamKind::String;
      } else {
        throw Error(ErrorCode::SchemaError, d.name + "." + spec.name + ": unknown parameter kind '" + kind + "'");
      }
      spec.optional = p.value("optional", false);
      d.params.push_back(std::move(spec));
    }
    d.description = j.at("description").get<std::string>();
    d.target = j.value("target", std::string("station"));
    d.effect = j.value("effect", std::string("actuation"));
    if (j.contains("duration_param")) d.duration_param = j.at("duration_param").get<std::string>();
    d.binding = binding_from_string(j.at("binding").get<std::string>());
    d.log_invocation = j.value("log_invocation", true);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, "service " + d.name + ": " + e.what());
  }
  bool seen_optional = false;
  for (const auto& p : d.params) {
    if (seen_optional && !p.optional) {
      throw Error(ErrorCode::SchemaError, "service " + d.name + ": optional parameters must be trailing");
    }
    seen_optional = seen_optional || p.optional;
  }
  return d;
}

CatalogEntry catalog_entry_from_json(const nlohmann::json& j) {
  if (j.is_string()) return CatalogEntry{j.get<std::string>(), std::nullopt, std::nullopt};
  CatalogEntry e;
  e.name = j.at("name").get<std::string>();
  if (j.contains("signature")) e.signature = j.at("signature").get<std::string>();
  if (j.contains("description")) e.description = j.at("description").get<std::string>();
  return e;
}

void ServiceRegistry::add(ServiceDescriptor descriptor) {
  if (knows(descriptor.name)) throw Error(ErrorCode::DuplicateService, "service '" + descriptor.name + "' already registered");
  services_.push_back(std::move(descriptor));
}

void ServiceRegistry::add_alias(AliasEntry alias) {
  if (knows(alias.alias)) throw Error(ErrorCode::DuplicateService, "name '" + alias.alias + "' already registered");
  const auto* target = find(alias.canonical);
  if (!target) {
    throw Error(ErrorCode::UnknownService,
                "alias '" + alias.alias + "' targets unregistered service '" + alias.canonical + "'");
  }
  if (!alias.arg_map.empty() && alias.arg_map.size() != target->params.size()) {
    throw Error(ErrorCode::SchemaError, "alias '" + alias.alias + "' arg_map does not cover every parameter");
  }
  aliases_.push_back(std::move(alias));
}

const ServiceDescriptor* ServiceRegistry::find(std::string_view name) const {
  for (const auto& s : services_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const AliasEntry* ServiceRegistry::find_alias(std::string_view name) const {
  for (const auto& a : aliases_) {
    if (a.alias == name) return &a;
  }
  return nullptr;
}

const ServiceDescriptor& ServiceRegistry::resolve(std::string_view name) const {
  if (const auto* d = find(name)) return *d;
  if (const auto* a = find_alias(name)) return *find(a->canonical);
  throw Error(ErrorCode::UnknownService, "unknown service '" + std::string(name) + "'");
}

ServiceRegistry ServiceRegistry::from_json(const nlohmann::json& j) {
  ServiceRegistry reg;
  for (const auto& s : j.at("services")) reg.add(service_descriptor_from_json(s));
  for (const auto& a : j.value("aliases", nlohmann::json::array())) {
    AliasEntry e;
    try {
      e.alias = a.at("alias").get<std::string>();
      e.canonical = a.at("canonical").get<std::string>();
      if (a.contains("description")) e.description = a.at("description").get<std::string>();
      for (const auto& m : a.value("arg_map", nlohmann::json::array())) {
        if (m.contains("from")) {
          e.arg_map.emplace_back(m.at("from").get<std::size_t>());
        } else {
          e.arg_map.emplace_back(m.at("value").get<std::string>());
        }
      }
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::SchemaError, "alias " + e.alias + ": " + ex.what());
    }
    reg.add_alias(std::move(e));
  }
  return reg;
}

nlohmann::json ServiceRegistry::to_json() const {
  nlohmann::json services = nlohmann::json::array();
  for (const auto& s : services_) {
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : s.params) {
      nlohmann::json pj{{"name", p.name}, {"optional", p.optional}};
      switch (p.kind) {
        case ParamKind::Enum:
          pj["kind"] = "enum";
          pj["values"] = p.values;
          break;
        case ParamKind::Integer:
          pj["kind"] = "integer";
          if (p.min) pj["min"] = *p.min;
          if (p.max) pj["max"] = *p.max;
          break;
        case ParamKind::String:
          pj["kind"] = "string";
          break;
      }
      params.push_back(std::move(pj));
    }
    nlohmann::json sj{{"name", s.name},     {"params", params},         {"description", s.description},
                      {"target", s.target}, {"effect", s.effect},       {"binding", std::string(prodcell::to_string(s.binding))},
                      {"log_invocation", s.log_invocation}};
    if (s.duration_param) sj["duration_param"] = *s.duration_param;
    services.push_back(std::move(sj));
  }
  nlohmann::json aliases = nlohmann::json::array();
  for (const auto& a : aliases_) {
    nlohmann::json aj{{"alias", a.alias}, {"canonical", a.canonical}};
    if (a.description) aj["description"] = *a.description;
    aliases.push_back(std::move(aj));
  }
  return {{"services", services}, {"aliases", aliases}};
}

CommandDraft parse_command(std::string_view text) {
  CommandDraft out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto skip_ws = [&] {
    while (i < n && is_space(text[i])) ++i;
  };
  skip_ws();
  if (i >= n || !is_ident_start(text[i])) syntax(text, "expected a service name");
  std::size_t start = i;
  while (i < n && is_ident(text[i])) ++i;
  out.name = std::string(text.substr(start, i - start));
  skip_ws();
  if (i >= n || text[i] != '(') syntax(text, "expected '(' after service name");
  ++i;
  skip_ws();
  if (i < n && text[i] == ')') {
    ++i;
  } else {
    while (true) {
      skip_ws();
      if (i >= n) syntax(text, "unbalanced parentheses");
      std::string arg;
      bool quoted = false;
      if (text[i] == '"' || text[i] == '\'') {
        const char q = text[i++];
        quoted = true;
        bool closed = false;
        while (i < n) {
          char c = text[i++];
          if (c == '\\' && i < n) {
            arg += text[i++];
          } else if (c == q) {
            closed = true;
            break;
          } else {
            arg += c;
          }
        }
        if (!closed) syntax(text, "unterminated string literal");
        skip_ws();
      } else {
        std::size_t a = i;
        while (i < n && text[i] != ',' && text[i] != ')' && text[i] != '(' && text[i] != '"' && text[i] != '\'') ++i;
        arg = trim(text.substr(a, i - a));
        if (arg.empty()) syntax(text, "empty argument");
      }
      if (i >= n) syntax(text, "unbalanced parentheses");
      out.args.push_back(std::move(arg));
      out.quoted.push_back(quoted);
      if (text[i] == ',') {
        ++i;
        continue;
      }
      if (text[i] == ')') {
        ++i;
        break;
      }
      syntax(text, std::string("unexpected '") + text[i] + "' in argument list");
    }
  }
  skip_ws();
  if (i != n) syntax(text, "trailing characters after ')'");
  return out;
}

Invocation validate(const ServiceRegistry& registry, const CommandDraft& draft) {
  const ServiceDescriptor* desc = registry.find(draft.name);
  std::vector<std::string> raw = draft.args;
  std::vector<bool> quoted = draft.quoted;
  quoted.resize(raw.size(), false);
  if (!desc) {
    const AliasEntry* alias = registry.find_alias(draft.name);
    if (!alias) throw Error(ErrorCode::UnknownService, "unknown service '" + draft.name + "'");
    desc = registry.find(alias->canonical);
    if (!alias->arg_map.empty()) {
      std::size_t alias_arity = 0;
      for (const auto& src : alias->arg_map) {
        if (const auto* idx = std::get_if<std::size_t>(&src)) alias_arity = std::max(alias_arity, *idx + 1);
      }
      if (raw.size() != alias_arity) {
        throw Error(ErrorCode::ArityMismatch, draft.name + " expects " + std::to_string(alias_arity) + " argument(s), got " +
                                                  std::to_string(raw.size()));
      }
      std::vector<std::string> mapped;
      std::vector<bool> mapped_quoted;
      for (const auto& src : alias->arg_map) {
        if (const auto* idx = std::get_if<std::size_t>(&src)) {
          mapped.push_back(raw[*idx]);
          mapped_quoted.push_back(quoted[*idx]);
        } else {
          mapped.push_back(std::get<std::string>(src));
          mapped_quoted.push_back(false);
        }
      }
      raw = std::move(mapped);
      quoted = std::move(mapped_quoted);
    }
  }
  const std::size_t required = desc->required_arity();
  if (raw.size() < required || raw.size() > desc->params.size()) {
    std::string expected = required == desc->params.size()
                               ? std::to_string(required)
                               : std::to_string(required) + ".." + std::to_string(desc->params.size());
    throw Error(ErrorCode::ArityMismatch,
                draft.name + " expects " + expected + " argument(s), got " + std::to_string(raw.size()));
  }
  Invocation inv;
  inv.service = desc->name;
  inv.spelled_as = draft.name;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const auto& p = desc->params[k];
    const auto& v = raw[k];
    switch (p.kind) {
      case ParamKind::Enum: {
        if (std::find(p.values.begin(), p.values.end(), v) == p.values.end()) {
          throw Error(ErrorCode::DomainViolation, desc->name + ": '" + v + "' is not a valid " + p.name);
        }
        inv.args.emplace_back(v);
        break;
      }
      case ParamKind::Integer: {
        auto parsed = quoted[k] ? std::nullopt : parse_int(v);
        if (!parsed) throw Error(ErrorCode::DomainViolation, desc->name + ": " + p.name + " must be an integer, got '" + v + "'");
        if ((p.min && *parsed < *p.min) || (p.max && *parsed > *p.max)) {
          throw Error(ErrorCode::DomainViolation, desc->name + ": " + p.name + " " + v + " out of range");
        }
        inv.args.emplace_back(*parsed);
        break;
      }
      case ParamKind::String:
        inv.args.emplace_back(v);
        break;
    }
  }
  return inv;
}

std::string format_invocation(const ServiceRegistry& registry, const Invocation& invocation) {
  const auto& desc = registry.resolve(invocation.service);
  std::string out = desc.name + "(";
  for (std::size_t k = 0; k < invocation.args.size(); ++k) {
    if (k) out += ", ";
    const auto& a = invocation.args[k];
    if (const auto* i = std::get_if<std::int64_t>(&a)) {
      out += std::to_string(*i);
    } else if (k < desc.params.size() && desc.params[k].kind == ParamKind::Enum) {
      out += std::get<std::string>(a);
    } else {
      out += quote(std::get<std::string>(a));
    }
  }
  return out + ")";
}

std::string render_catalog(const ServiceRegistry& registry, const std::vector<CatalogEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    const auto& desc = registry.resolve(e.name);
    const auto* alias = registry.find_alias(e.name);
    std::string sig;
    if (e.signature) {
      sig = *e.signature;
    } else {
      sig = e.name + "(";
      if (!alias || alias->arg_map.empty()) {
        for (std::size_t k = 0; k < desc.params.size(); ++k) {
          if (k) sig += ", ";
          sig += desc.params[k].name;
        }
      }
      sig += ")";
    }
    std::string text = e.description ? *e.description
                       : (alias && alias->description) ? *alias->description
                                                       : desc.description;
    if (!out.empty()) out += "\n\n";
    out += "`" + sig + "`: " + text;
  }
  return out;
}

std::string render_catalog(const ServiceRegistry& registry, const std::vector<std::string>& names) {
  std::vector<CatalogEntry> entries;
  for (const auto& n : names) entries.push_back(CatalogEntry{n, std::nullopt, std::nullopt});
  return render_catalog(registry, entries);
}

nlohmann::json to_json(const ArgValue& value) {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return *i;
  return std::get<std::string>(value);
}

nlohmann::json to_json(const Invocation& invocation) {
  nlohmann::json args = nlohmann::json::array();
  for (const auto& a : invocation.args) args.push_back(to_json(a));
  return {{"service", invocation.service}, {"args", args}, {"issued_by", invocation.issued_by}, {"at", invocation.at}};
}

}  // namespace prodcell
