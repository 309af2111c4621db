#include "signal.hpp"

#include <cctype>
#include <charconv>

#include "error.hpp"

namespace prodcell {

std::string to_text(const SignalValue& value) {
  if (const auto* b = std::get_if<bool>(&value)) return *b ? "true" : "false";
  if (const auto* d = std::get_if<double>(&value)) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, *d);
    return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
  }
  return std::get<std::string>(value);
}

nlohmann::json to_json(const SignalValue& value) {
  return std::visit([](const auto& v) { return nlohmann::json(v); }, value);
}

SignalValue signal_value_from_json(const nlohmann::json& j) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw Error(ErrorCode::SchemaError, "signal value must be boolean, number or string, got " + j.dump());
}

nlohmann::json to_json(const SignalChange& change) {
  return {{"address", change.address},
          {"old", to_json(change.old_value)},
          {"new", to_json(change.new_value)},
          {"at", change.at}};
}

bool is_valid_address(std::string_view address) noexcept {
  bool segment_empty = true;
  for (char c : address) {
    if (c == '.') {
      if (segment_empty) return false;
      segment_empty = true;
    } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      segment_empty = false;
    } else {
      return false;
    }
  }
  return !segment_empty;
}

}  // namespace prodcell
