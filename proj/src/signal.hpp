#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json.hpp>

namespace prodcell {

// Virtual time in milliseconds since scenario start.
using Millis = std::int64_t;

using SignalValue = std::variant<bool, double, std::string>;

struct SignalChange {
  std::string address;
  SignalValue old_value;
  SignalValue new_value;
  Millis at = 0;

  bool operator==(const SignalChange&) const = default;
};

// Flat view of every published signal, keyed by station.component.tag.
using SignalSnapshot = std::map<std::string, SignalValue>;

// true/false, shortest round-trip number, or the raw string.
std::string to_text(const SignalValue& value);

nlohmann::json to_json(const SignalValue& value);
SignalValue signal_value_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SignalChange& change);

// [A-Za-z0-9_]+(\.[A-Za-z0-9_]+)*
bool is_valid_address(std::string_view address) noexcept;

}  // namespace prodcell
