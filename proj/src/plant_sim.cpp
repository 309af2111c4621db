#include "plant_sim.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace prodcell {

namespace {

constexpr std::string_view kInTransit = "in_transit";

std::string handover_buffer(std::string_view station) {
  return "handover@" + std::string(station);
}

std::string rfid_result(const std::optional<bool>& cleared) {
  if (!cleared) return "unknown";
  return *cleared ? "ok" : "failed";
}

// Accepts "conveyor1.BG51" or "conveyor1.BG51.detected".
std::optional<std::pair<std::string, std::string>> split_sensor_target(std::string_view target) {
  auto dot = target.find('.');
  if (dot == std::string_view::npos) return std::nullopt;
  std::string station(target.substr(0, dot));
  std::string rest(target.substr(dot + 1));
  if (rest.ends_with(".detected")) rest.resize(rest.size() - std::string_view(".detected").size());
  if (rest != "BG51" && rest != "BG56") return std::nullopt;
  return std::make_pair(station, rest);
}

}  // namespace

std::string_view to_string(BeltState s) noexcept {
  switch (s) {
    case BeltState::Stopped: return "stopped";
    case BeltState::Forward: return "forward";
    case BeltState::Backward: return "backward";
  }
  return "stopped";
}

bool in_entrance_window(Micrometres offset) noexcept { return offset >= 0 && offset <= kSensorWindow; }

bool in_ready_window(Micrometres offset, Micrometres belt_length) noexcept {
  return offset >= belt_length - kSensorWindow && offset <= belt_length;
}

PlantConfig plant_config_from_json(const nlohmann::json& j) {
  PlantConfig config;
  for (const auto& s : j.value("stations", nlohmann::json::array())) {
    StationConfig st;
    st.id = s.at("id").get<std::string>();
    st.belt_length_m = s.value("belt_length_m", st.belt_length_m);
    st.belt_speed_mps = s.value("belt_speed_mps", st.belt_speed_mps);
    st.rfid_check_ms = s.value("rfid_check_ms", st.rfid_check_ms);
    if (s.contains("transit_timeout_ms")) st.transit_timeout_ms = s.at("transit_timeout_ms").get<Millis>();
    st.next_agent = s.value("next_agent", std::string{});
    config.stations.push_back(std::move(st));
  }
  for (const auto& a : j.value("agvs", nlohmann::json::array())) {
    config.agvs.push_back({a.at("id").get<std::string>(), a.at("location").get<std::string>()});
  }
  config.docks = j.value("docks", std::vector<std::string>{});
  if (j.contains("aux_signals")) {
    for (const auto& [address, value] : j.at("aux_signals").items()) {
      config.aux_signals[address] = signal_value_from_json(value);
    }
  }
  config.agv_transit_ms = j.value("agv_transit_ms", config.agv_transit_ms);
  config.substep_ms = j.value("substep_ms", config.substep_ms);
  return config;
}

FaultSpec fault_spec_from_json(const nlohmann::json& j) {
  FaultSpec f;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "stuck_workpiece") {
    f.kind = FaultKind::StuckWorkpiece;
  } else if (kind == "sensor_dropout") {
    f.kind = FaultKind::SensorDropout;
  } else if (kind == "custom") {
    f.kind = FaultKind::Custom;
  } else {
    throw Error(ErrorCode::SchemaError, "unknown fault kind '" + kind + "'");
  }
  f.target = j.at("target").get<std::string>();
  f.at = j.value("at", Millis{0});
  f.until = j.value("until", Millis{0});
  if (j.contains("value")) f.value = signal_value_from_json(j.at("value"));
  return f;
}

Plant::Plant(const PlantConfig& config) {
  if (config.substep_ms <= 0) throw Error(ErrorCode::InvalidArgument, "substep_ms must be positive");
  state_.substep_ms = config.substep_ms;
  state_.agv_transit_ms = config.agv_transit_ms;
  state_.docks = config.docks;
  state_.aux = config.aux_signals;

  for (const auto& sc : config.stations) {
    if (!is_valid_address(sc.id) || sc.id.find('.') != std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "invalid station id '" + sc.id + "'");
    }
    if (find_station(sc.id)) throw Error(ErrorCode::InvalidArgument, "duplicate station '" + sc.id + "'");
    ConveyorStation st;
    st.id = sc.id;
    st.belt_length = std::llround(sc.belt_length_m * 1e6);
    st.speed_um_per_ms = std::llround(sc.belt_speed_mps * 1e3);
    if (st.belt_length <= 2 * kSensorWindow || st.speed_um_per_ms <= 0) {
      throw Error(ErrorCode::InvalidArgument, "station '" + sc.id + "' needs length > 0.1 m and speed >= 0.001 m/s");
    }
    const Millis traverse = (st.belt_length + st.speed_um_per_ms - 1) / st.speed_um_per_ms;
    st.transit_timeout_ms = sc.transit_timeout_ms.value_or((traverse * 12 + 9) / 10);
    st.rfid_check_ms = sc.rfid_check_ms;
    st.next_agent = sc.next_agent;
    state_.stations.push_back(std::move(st));
  }
  for (const auto& ac : config.agvs) {
    if (find_agv(ac.id)) throw Error(ErrorCode::InvalidArgument, "duplicate AGV '" + ac.id + "'");
    const bool known = find_station(ac.location) ||
                       std::find(config.docks.begin(), config.docks.end(), ac.location) != config.docks.end();
    if (!known) throw Error(ErrorCode::UnknownStation, "AGV '" + ac.id + "' starts at unknown location '" + ac.location + "'");
    state_.agvs.push_back(AgvUnit{ac.id, ac.location, "", std::nullopt, 0});
  }
}

const ConveyorStation* Plant::find_station(std::string_view id) const {
  for (const auto& st : state_.stations)
    if (st.id == id) return &st;
  return nullptr;
}

const Workpiece* Plant::find_workpiece(std::string_view id) const {
  for (const auto& wp : state_.workpieces)
    if (wp.id == id) return &wp;
  return nullptr;
}

const AgvUnit* Plant::find_agv(std::string_view id) const {
  for (const auto& agv : state_.agvs)
    if (agv.id == id) return &agv;
  return nullptr;
}

ConveyorStation& Plant::station_ref(std::string_view id) {
  for (auto& st : state_.stations)
    if (st.id == id) return st;
  throw Error(ErrorCode::UnknownStation, "unknown station '" + std::string(id) + "'");
}

AgvUnit& Plant::agv_ref(std::string_view id) {
  for (auto& agv : state_.agvs)
    if (agv.id == id) return agv;
  throw Error(ErrorCode::UnknownStation, "unknown AGV '" + std::string(id) + "'");
}

Workpiece* Plant::find_workpiece_mut(std::string_view id) {
  for (auto& wp : state_.workpieces)
    if (wp.id == id) return &wp;
  return nullptr;
}

Workpiece* Plant::ready_workpiece(const ConveyorStation& st) {
  for (auto& wp : state_.workpieces) {
    if (wp.place == PlaceKind::Belt && wp.where == st.id && in_ready_window(wp.offset, st.belt_length)) return &wp;
  }
  return nullptr;
}

SignalSnapshot Plant::read_signals() const {
  SignalSnapshot out = state_.aux;
  for (const auto& st : state_.stations) {
    const std::string p = st.id + ".";
    out[p + "BG56.detected"] = st.entrance_sensor;
    out[p + "BG51.detected"] = st.ready_sensor;
    out[p + "H1.engaged"] = st.holder_engaged;
    out[p + "C1.state"] = std::string(to_string(st.belt_state));
    out[p + "C1.transit_overdue"] = st.transit_overdue;
    out[p + "TF81.tag"] = st.rfid_tag;
    out[p + "TF81.check"] = st.rfid_check;
  }
  for (const auto& agv : state_.agvs) {
    out[agv.id + ".location"] = agv.location;
    out[agv.id + ".cargo"] = agv.cargo.value_or("");
  }
  return out;
}

std::vector<SignalChange> Plant::diff(const SignalSnapshot& before) const {
  std::vector<SignalChange> changes;
  for (const auto& [address, value] : read_signals()) {
    auto it = before.find(address);
    if (it == before.end() || it->second != value) {
      SignalValue old = it == before.end() ? SignalValue{std::string{}} : it->second;
      changes.push_back({address, std::move(old), value, state_.now});
    }
  }
  return changes;
}

void Plant::recompute_sensors() {
  for (auto& st : state_.stations) {
    bool entrance = false;
    bool ready = false;
    bool loaded = false;
    for (const auto& wp : state_.workpieces) {
      if (wp.place != PlaceKind::Belt || wp.where != st.id) continue;
      loaded = true;
      entrance = entrance || in_entrance_window(wp.offset);
      ready = ready || in_ready_window(wp.offset, st.belt_length);
    }
    st.entrance_sensor = entrance && !st.entrance_dropout;
    st.ready_sensor = ready && !st.ready_dropout;
    st.transit_overdue =
        loaded && st.belt_state == BeltState::Forward && st.run_elapsed >= st.transit_timeout_ms && !st.ready_sensor;
  }
}

void Plant::activate_faults(Millis until) {
  auto apply_fault = [this](const FaultSpec& f, bool on) {
    switch (f.kind) {
      case FaultKind::StuckWorkpiece:
        if (auto* wp = find_workpiece_mut(f.target)) wp->stuck = on;
        break;
      case FaultKind::SensorDropout: {
        auto parts = split_sensor_target(f.target);
        if (!parts) break;
        for (auto& st : state_.stations) {
          if (st.id != parts->first) continue;
          (parts->second == "BG51" ? st.ready_dropout : st.entrance_dropout) = on;
        }
        break;
      }
      case FaultKind::Custom:
        if (on) state_.aux[f.target] = f.value;
        break;
    }
  };

  for (auto it = state_.active_faults.begin(); it != state_.active_faults.end();) {
    if (it->until > 0 && it->until < until) {
      if (it->kind == FaultKind::Custom) {
        // restore the value captured at activation
        state_.aux[it->target] = it->value;
      } else {
        apply_fault(*it, false);
      }
      it = state_.active_faults.erase(it);
    } else {
      ++it;
    }
  }
  for (auto it = state_.pending_faults.begin(); it != state_.pending_faults.end();) {
    if (it->at < until) {
      FaultSpec active = *it;
      if (active.kind == FaultKind::Custom) {
        auto prev = state_.aux.find(active.target);
        SignalValue restore = prev == state_.aux.end() ? SignalValue{false} : prev->second;
        apply_fault(active, true);
        active.value = std::move(restore);
      } else {
        apply_fault(active, true);
      }
      state_.active_faults.push_back(std::move(active));
      it = state_.pending_faults.erase(it);
    } else {
      ++it;
    }
  }
}

void Plant::substep(Millis h) {
  const Millis t_end = state_.now + h;
  activate_faults(t_end);

  for (auto& st : state_.stations) {
    if (st.belt_state == BeltState::Stopped) continue;
    const Millis run = std::min(h, st.belt_timer);
    const Micrometres delta = (st.belt_state == BeltState::Forward ? 1 : -1) * st.speed_um_per_ms * run;
    for (auto& wp : state_.workpieces) {
      if (wp.place != PlaceKind::Belt || wp.where != st.id || wp.held || wp.stuck) continue;
      wp.offset = std::clamp<Micrometres>(wp.offset + delta, 0, st.belt_length);
    }
    st.belt_timer -= run;
    st.run_elapsed += run;
    if (st.belt_timer <= 0) {
      st.belt_state = BeltState::Stopped;
      st.belt_timer = 0;
      st.run_elapsed = 0;
    }
  }

  for (auto& agv : state_.agvs) {
    if (agv.location != kInTransit) continue;
    agv.transit_timer -= h;
    if (agv.transit_timer <= 0) {
      agv.location = agv.destination;
      agv.destination.clear();
      agv.transit_timer = 0;
    }
  }

  for (auto& st : state_.stations) {
    if (st.rfid_check_due && *st.rfid_check_due <= t_end) {
      st.rfid_check = st.rfid_pending_result;
      st.rfid_check_due.reset();
      st.rfid_pending_result.clear();
    }
  }

  state_.now = t_end;
  recompute_sensors();
}

std::vector<SignalChange> Plant::advance(Millis dt) {
  if (dt < 0) throw Error(ErrorCode::InvalidArgument, "advance requires dt >= 0");
  std::vector<SignalChange> changes;
  const Millis target = state_.now + dt;
  while (state_.now < target) {
    const Millis grid = (state_.now / state_.substep_ms + 1) * state_.substep_ms;
    const Millis h = std::min(target, grid) - state_.now;
    const auto before = read_signals();
    substep(h);
    auto step_changes = diff(before);
    changes.insert(changes.end(), std::make_move_iterator(step_changes.begin()),
                   std::make_move_iterator(step_changes.end()));
  }
  return changes;
}

ActuationOutcome Plant::apply(const Actuation& a) {
  const auto before = read_signals();
  ActuationOutcome outcome;

  switch (a.kind) {
    case ActuationKind::BeltRun: {
      auto& st = station_ref(a.unit);
      if (a.duration_ms <= 0) throw Error(ErrorCode::InvalidArgument, "belt run duration must be positive");
      if (a.direction == BeltState::Stopped) throw Error(ErrorCode::InvalidArgument, "belt run needs a direction");
      if (st.belt_state != a.direction) st.run_elapsed = 0;
      st.belt_state = a.direction;
      st.belt_timer = a.duration_ms;
      break;
    }
    case ActuationKind::BeltStop: {
      auto& st = station_ref(a.unit);
      st.belt_state = BeltState::Stopped;
      st.belt_timer = 0;
      st.run_elapsed = 0;
      break;
    }
    case ActuationKind::HolderEngage: {
      auto& st = station_ref(a.unit);
      auto* wp = ready_workpiece(st);
      if (!wp) throw Error(ErrorCode::NoWorkpieceAtReadyPosition, "no workpiece at the ready position of " + st.id);
      if (!st.holder_engaged) {
        st.holder_engaged = true;
        st.held_workpiece = wp->id;
        wp->held = true;
        // the holder clamps the piece against the end stop
        wp->offset = st.belt_length;
      }
      outcome.workpiece = wp->id;
      break;
    }
    case ActuationKind::HolderRelease: {
      auto& st = station_ref(a.unit);
      if (st.holder_engaged) {
        if (auto* wp = find_workpiece_mut(st.held_workpiece)) wp->held = false;
        outcome.workpiece = st.held_workpiece;
        st.holder_engaged = false;
        st.held_workpiece.clear();
      }
      break;
    }
    case ActuationKind::RfidRead: {
      auto& st = station_ref(a.unit);
      auto* wp = ready_workpiece(st);
      if (!wp) throw Error(ErrorCode::NoWorkpieceAtReadyPosition, "no workpiece in front of TF81 at " + st.id);
      st.rfid_tag = wp->id;
      st.rfid_check.clear();
      st.rfid_check_due = state_.now + st.rfid_check_ms;
      st.rfid_pending_result = rfid_result(wp->cleared_for_processing);
      outcome.workpiece = wp->id;
      break;
    }
    case ActuationKind::Handover: {
      auto& st = station_ref(a.unit);
      const std::string next = a.target.empty() ? st.next_agent : a.target;
      if (next.empty()) throw Error(ErrorCode::InvalidArgument, "station " + st.id + " has no next agent");
      auto* wp = ready_workpiece(st);
      if (!wp) throw Error(ErrorCode::NoWorkpieceAtReadyPosition, "no workpiece at the ready position of " + st.id);
      if (wp->held) {
        wp->held = false;
        st.holder_engaged = false;
        st.held_workpiece.clear();
      }
      wp->place = PlaceKind::Buffer;
      wp->where = handover_buffer(st.id);
      wp->offset = 0;
      wp->owner = next;
      st.rfid_tag.clear();
      st.rfid_check.clear();
      st.rfid_check_due.reset();
      st.rfid_pending_result.clear();
      outcome.workpiece = wp->id;
      break;
    }
    case ActuationKind::AgvMove: {
      auto& agv = agv_ref(a.unit);
      if (agv.location == kInTransit) throw Error(ErrorCode::AgvBusy, "AGV " + agv.id + " is in transit");
      const bool known = find_station(a.target) ||
                         std::find(state_.docks.begin(), state_.docks.end(), a.target) != state_.docks.end();
      if (!known) throw Error(ErrorCode::UnknownTarget, "unknown AGV destination '" + a.target + "'");
      if (agv.location != a.target) {
        agv.location = std::string(kInTransit);
        agv.destination = a.target;
        agv.transit_timer = state_.agv_transit_ms;
      }
      break;
    }
    case ActuationKind::AgvLoad: {
      auto& agv = agv_ref(a.unit);
      if (agv.location == kInTransit) throw Error(ErrorCode::AgvBusy, "AGV " + agv.id + " is in transit");
      if (agv.cargo) throw Error(ErrorCode::AgvBusy, "AGV " + agv.id + " already carries " + *agv.cargo);
      Workpiece* found = nullptr;
      for (auto& wp : state_.workpieces) {
        if (wp.place == PlaceKind::Buffer && wp.where == handover_buffer(agv.location)) {
          found = &wp;
          break;
        }
      }
      if (!found) throw Error(ErrorCode::NoWorkpieceAvailable, "no workpiece waiting at " + agv.location);
      found->place = PlaceKind::Agv;
      found->where = agv.id;
      agv.cargo = found->id;
      outcome.workpiece = found->id;
      break;
    }
    case ActuationKind::AgvUnload: {
      auto& agv = agv_ref(a.unit);
      if (agv.location == kInTransit) throw Error(ErrorCode::AgvBusy, "AGV " + agv.id + " is in transit");
      if (!agv.cargo) throw Error(ErrorCode::NoWorkpieceAvailable, "AGV " + agv.id + " carries nothing");
      if (auto* wp = find_workpiece_mut(*agv.cargo)) {
        wp->place = PlaceKind::Buffer;
        wp->where = agv.location;
      }
      outcome.workpiece = *agv.cargo;
      agv.cargo.reset();
      break;
    }
  }

  recompute_sensors();
  outcome.changes = diff(before);
  return outcome;
}

std::vector<SignalChange> Plant::spawn_workpiece(const std::string& station, const std::string& id,
                                                 std::optional<bool> cleared_for_processing) {
  const auto& st = station_ref(station);
  if (id.empty() || find_workpiece(id)) throw Error(ErrorCode::InvalidArgument, "workpiece id '" + id + "' is empty or in use");
  for (const auto& wp : state_.workpieces) {
    if (wp.place == PlaceKind::Belt && wp.where == st.id && in_entrance_window(wp.offset)) {
      throw Error(ErrorCode::EntranceOccupied, "entrance of " + st.id + " is occupied by " + wp.id);
    }
  }
  const auto before = read_signals();
  Workpiece wp;
  wp.id = id;
  wp.place = PlaceKind::Belt;
  wp.where = st.id;
  wp.cleared_for_processing = cleared_for_processing;
  state_.workpieces.push_back(std::move(wp));
  recompute_sensors();
  return diff(before);
}

void Plant::inject_fault(const FaultSpec& fault) {
  if (fault.at < state_.now) throw Error(ErrorCode::InvalidTime, "fault time lies in the past");
  if (fault.until != 0 && fault.until <= fault.at) throw Error(ErrorCode::InvalidTime, "fault ends before it starts");
  switch (fault.kind) {
    case FaultKind::StuckWorkpiece:
      if (!find_workpiece(fault.target)) throw Error(ErrorCode::UnknownTarget, "unknown workpiece '" + fault.target + "'");
      break;
    case FaultKind::SensorDropout: {
      auto parts = split_sensor_target(fault.target);
      if (!parts || !find_station(parts->first)) throw Error(ErrorCode::UnknownTarget, "unknown sensor '" + fault.target + "'");
      break;
    }
    case FaultKind::Custom:
      if (!state_.aux.contains(fault.target)) throw Error(ErrorCode::UnknownTarget, "unknown signal '" + fault.target + "'");
      break;
  }
  state_.pending_faults.push_back(fault);
}

std::vector<SignalChange> Plant::clear_fault(const std::string& target) {
  const auto before = read_signals();
  std::erase_if(state_.pending_faults, [&](const FaultSpec& f) { return f.target == target; });
  for (auto it = state_.active_faults.begin(); it != state_.active_faults.end();) {
    if (it->target != target) {
      ++it;
      continue;
    }
    switch (it->kind) {
      case FaultKind::StuckWorkpiece:
        if (auto* wp = find_workpiece_mut(target)) wp->stuck = false;
        break;
      case FaultKind::SensorDropout:
        if (auto parts = split_sensor_target(target)) {
          for (auto& st : state_.stations) {
            if (st.id == parts->first) (parts->second == "BG51" ? st.ready_dropout : st.entrance_dropout) = false;
          }
        }
        break;
      case FaultKind::Custom:
        state_.aux[target] = it->value;
        break;
    }
    it = state_.active_faults.erase(it);
  }
  recompute_sensors();
  return diff(before);
}

bool Plant::has_pending_activity() const {
  if (!state_.pending_faults.empty()) return true;
  for (const auto& f : state_.active_faults)
    if (f.until > 0) return true;
  for (const auto& st : state_.stations)
    if (st.belt_state != BeltState::Stopped || st.rfid_check_due) return true;
  for (const auto& agv : state_.agvs)
    if (agv.location == kInTransit) return true;
  return false;
}

nlohmann::json Plant::to_json() const {
  nlohmann::json stations = nlohmann::json::array();
  for (const auto& st : state_.stations) {
    stations.push_back({{"id", st.id},
                        {"belt_state", to_string(st.belt_state)},
                        {"belt_timer_ms", st.belt_timer},
                        {"BG56", st.entrance_sensor},
                        {"BG51", st.ready_sensor},
                        {"H1", st.holder_engaged ? "engaged" : "released"},
                        {"TF81", st.rfid_tag},
                        {"rfid_check", st.rfid_check},
                        {"transit_overdue", st.transit_overdue},
                        {"next_agent", st.next_agent}});
  }
  nlohmann::json workpieces = nlohmann::json::array();
  for (const auto& wp : state_.workpieces) {
    const char* place = wp.place == PlaceKind::Belt ? "belt" : wp.place == PlaceKind::Agv ? "agv" : "buffer";
    workpieces.push_back({{"id", wp.id},
                          {"place", place},
                          {"where", wp.where},
                          {"offset_m", wp.offset_m()},
                          {"held", wp.held},
                          {"stuck", wp.stuck},
                          {"owner", wp.owner}});
  }
  nlohmann::json agvs = nlohmann::json::array();
  for (const auto& agv : state_.agvs) {
    agvs.push_back({{"id", agv.id}, {"location", agv.location}, {"cargo", agv.cargo.value_or("")}});
  }
  nlohmann::json signals = nlohmann::json::object();
  for (const auto& [address, value] : read_signals()) signals[address] = prodcell::to_json(value);
  return {{"now", state_.now}, {"stations", stations}, {"workpieces", workpieces}, {"agvs", agvs}, {"signals", signals}};
}

}  // namespace prodcell
