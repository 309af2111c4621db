#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "signal.hpp"

namespace prodcell {

// Lengths are kept in integer micrometres so that belt kinematics and the
// sensor windows are exact and replay bit-identically.
using Micrometres = std::int64_t;

inline constexpr Micrometres kSensorWindow = 50'000;  // 0.05 m at each belt end
inline constexpr Millis kDefaultSubstep = 100;
inline constexpr Millis kDefaultAgvTransit = 8'000;

enum class BeltState { Stopped, Forward, Backward };
std::string_view to_string(BeltState s) noexcept;

struct StationConfig {
  std::string id;
  double belt_length_m = 1.0;
  double belt_speed_mps = 0.2;
  Millis rfid_check_ms = 1'000;
  // Defaults to 1.2 x the nominal traverse time.
  std::optional<Millis> transit_timeout_ms;
  std::string next_agent;
};

struct AgvConfig {
  std::string id;
  std::string location;
};

struct PlantConfig {
  std::vector<StationConfig> stations;
  std::vector<AgvConfig> agvs;
  // Extra AGV stops that are not conveyor stations (e.g. a processing cell).
  std::vector<std::string> docks;
  // Free-form signals that custom faults may drive, with initial values.
  SignalSnapshot aux_signals;
  Millis agv_transit_ms = kDefaultAgvTransit;
  Millis substep_ms = kDefaultSubstep;
};

PlantConfig plant_config_from_json(const nlohmann::json& j);

struct ConveyorStation {
  std::string id;
  Micrometres belt_length = 1'000'000;
  std::int64_t speed_um_per_ms = 200;
  BeltState belt_state = BeltState::Stopped;
  Millis belt_timer = 0;   // remaining run time
  Millis run_elapsed = 0;  // time since the current run started
  bool entrance_sensor = false;  // BG56
  bool ready_sensor = false;     // BG51
  bool holder_engaged = false;   // H1
  std::string held_workpiece;
  std::string rfid_tag;    // TF81 last read id, empty for none
  std::string rfid_check;  // "", "ok", "failed", "unknown"
  std::optional<Millis> rfid_check_due;
  std::string rfid_pending_result;
  bool transit_overdue = false;
  Millis transit_timeout_ms = 6'000;
  Millis rfid_check_ms = 1'000;
  std::string next_agent;
  bool entrance_dropout = false;
  bool ready_dropout = false;

  bool operator==(const ConveyorStation&) const = default;
};

enum class PlaceKind { Belt, Agv, Buffer };

struct Workpiece {
  std::string id;
  PlaceKind place = PlaceKind::Belt;
  std::string where;  // station id, AGV id or buffer name
  Micrometres offset = 0;
  bool held = false;
  bool stuck = false;
  std::optional<bool> cleared_for_processing;
  std::string owner;  // agent that currently controls the workpiece

  double offset_m() const noexcept { return static_cast<double>(offset) / 1e6; }
  bool operator==(const Workpiece&) const = default;
};

struct AgvUnit {
  std::string id;
  std::string location;  // station/dock id or "in_transit"
  std::string destination;
  std::optional<std::string> cargo;
  Millis transit_timer = 0;

  bool operator==(const AgvUnit&) const = default;
};

enum class FaultKind { StuckWorkpiece, SensorDropout, Custom };

struct FaultSpec {
  FaultKind kind = FaultKind::StuckWorkpiece;
  std::string target;  // workpiece id, "station.BG51", or aux signal address
  Millis at = 0;
  Millis until = 0;    // 0 = until cleared
  SignalValue value = true;  // custom faults only

  bool operator==(const FaultSpec&) const = default;
};

FaultSpec fault_spec_from_json(const nlohmann::json& j);

struct PlantState {
  Millis now = 0;
  std::vector<ConveyorStation> stations;
  std::vector<AgvUnit> agvs;
  std::vector<Workpiece> workpieces;
  std::vector<FaultSpec> pending_faults;
  std::vector<FaultSpec> active_faults;
  SignalSnapshot aux;
  std::vector<std::string> docks;
  Millis agv_transit_ms = kDefaultAgvTransit;
  Millis substep_ms = kDefaultSubstep;

  bool operator==(const PlantState&) const = default;
};

enum class ActuationKind {
  BeltRun,
  BeltStop,
  HolderEngage,
  HolderRelease,
  RfidRead,
  Handover,
  AgvMove,
  AgvLoad,
  AgvUnload,
};

struct Actuation {
  ActuationKind kind = ActuationKind::BeltStop;
  std::string unit;  // station or AGV id the command is bound to
  BeltState direction = BeltState::Forward;
  Millis duration_ms = 0;
  std::string target;  // next agent (handover) or destination (AGV move)
};

struct ActuationOutcome {
  std::vector<SignalChange> changes;
  std::string workpiece;  // id touched by the actuation, if any
};

// Exclusive handle on one simulated facility. Every mutating call returns the
// raw signal changes it produced, stamped with virtual time.
class Plant {
 public:
  explicit Plant(const PlantConfig& config);
  explicit Plant(PlantState state) : state_(std::move(state)) {}

  std::vector<SignalChange> advance(Millis dt);
  ActuationOutcome apply(const Actuation& actuation);
  std::vector<SignalChange> spawn_workpiece(const std::string& station, const std::string& id,
                                            std::optional<bool> cleared_for_processing = std::nullopt);
  void inject_fault(const FaultSpec& fault);
  std::vector<SignalChange> clear_fault(const std::string& target);

  SignalSnapshot read_signals() const;
  const PlantState& state() const noexcept { return state_; }
  Millis now() const noexcept { return state_.now; }

  // Timers, transits or queued faults that will change state without input.
  bool has_pending_activity() const;

  const ConveyorStation* find_station(std::string_view id) const;
  const Workpiece* find_workpiece(std::string_view id) const;
  const AgvUnit* find_agv(std::string_view id) const;

  nlohmann::json to_json() const;

 private:
  ConveyorStation& station_ref(std::string_view id);
  AgvUnit& agv_ref(std::string_view id);
  Workpiece* find_workpiece_mut(std::string_view id);
  Workpiece* ready_workpiece(const ConveyorStation& st);
  void substep(Millis h);
  void activate_faults(Millis until);
  void recompute_sensors();
  std::vector<SignalChange> diff(const SignalSnapshot& before) const;

  PlantState state_;
};

// Geometric sensor predicate, shared by the simulator and its brute-force checks.
bool in_entrance_window(Micrometres offset) noexcept;
bool in_ready_window(Micrometres offset, Micrometres belt_length) noexcept;

}  // namespace prodcell
