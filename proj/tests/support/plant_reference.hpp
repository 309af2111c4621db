#pragma once

// Brute-force reference for the conveyor: integrates the belt one millisecond
// at a time and derives every sensor from the workpiece geometry. Shared by
// the unit tests and the acceptance check.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "error.hpp"
#include "plant_sim.hpp"

namespace prodcell::reference {

struct Piece {
  std::string id;
  Micrometres x = 0;
  bool held = false;
  bool on_belt = true;
};

struct Cell {
  static constexpr Micrometres L = 1'000'000;
  static constexpr Micrometres v = 200;  // per ms
  static constexpr Micrometres window = 50'000;
  static constexpr Millis timeout = 6'000;
  int dir = 0;  // -1, 0, +1
  Millis remaining = 0;
  Millis elapsed = 0;
  bool holder = false;
  std::vector<Piece> pieces;

  void tick() {
    if (dir == 0) return;
    for (auto& p : pieces) {
      if (!p.on_belt || p.held) continue;
      p.x = std::max<Micrometres>(0, std::min<Micrometres>(L, p.x + dir * v));
    }
    --remaining;
    ++elapsed;
    if (remaining == 0) {
      dir = 0;
      elapsed = 0;
    }
  }

  Piece* at_ready() {
    for (auto& p : pieces)
      if (p.on_belt && p.x >= L - window) return &p;
    return nullptr;
  }
  bool entrance() const {
    return std::any_of(pieces.begin(), pieces.end(), [](const Piece& p) { return p.on_belt && p.x <= window; });
  }
  bool ready() const {
    return std::any_of(pieces.begin(), pieces.end(), [](const Piece& p) { return p.on_belt && p.x >= L - window; });
  }
  bool loaded() const {
    return std::any_of(pieces.begin(), pieces.end(), [](const Piece& p) { return p.on_belt; });
  }
  bool overdue() const { return loaded() && dir == 1 && elapsed >= timeout && !ready(); }
  const char* belt() const { return dir == 0 ? "stopped" : dir > 0 ? "forward" : "backward"; }
};

inline PlantConfig single_station() {
  PlantConfig c;
  StationConfig st;
  st.id = "conveyor1";
  st.next_agent = "op_next";
  c.stations.push_back(st);
  return c;
}

struct OracleResult {
  int sequences = 0;
  int comparisons = 0;
  std::string failure;  // empty when every step agreed
};

// Drives the simulator and the reference through the same random actions and
// compares positions, sensors, holder, belt state and error classes after each.
inline OracleResult compare_random_sequences(int sequences, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
  auto code_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Ok;
  };
  auto act = [](ActuationKind kind) {
    Actuation a;
    a.kind = kind;
    a.unit = "conveyor1";
    return a;
  };

  OracleResult out;
  for (int seq = 0; seq < sequences; ++seq) {
    Plant plant(single_station());
    Cell ref;
    int spawned = 0;
    const int steps = 10 + pick(30);
    for (int step = 0; step < steps; ++step) {
      const int op = pick(7);
      ErrorCode got = ErrorCode::Ok;
      ErrorCode want = ErrorCode::Ok;
      switch (op) {
        case 0: {
          const std::string id = "W" + std::to_string(++spawned);
          got = code_of([&] { plant.spawn_workpiece("conveyor1", id); });
          if (ref.entrance()) {
            want = ErrorCode::EntranceOccupied;
          } else {
            ref.pieces.push_back({id});
          }
          break;
        }
        case 1:
        case 2: {
          const int d = pick(2) ? 1 : -1;
          const Millis ms = 1 + pick(8'000);
          auto a = act(ActuationKind::BeltRun);
          a.direction = d > 0 ? BeltState::Forward : BeltState::Backward;
          a.duration_ms = ms;
          plant.apply(a);
          if (ref.dir != d) ref.elapsed = 0;
          ref.dir = d;
          ref.remaining = ms;
          break;
        }
        case 3:
          plant.apply(act(ActuationKind::BeltStop));
          ref.dir = 0;
          ref.remaining = 0;
          ref.elapsed = 0;
          break;
        case 4: {
          got = code_of([&] { plant.apply(act(ActuationKind::HolderEngage)); });
          auto* p = ref.at_ready();
          if (!p) {
            want = ErrorCode::NoWorkpieceAtReadyPosition;
          } else if (!ref.holder) {
            ref.holder = true;
            p->held = true;
            p->x = Cell::L;
          }
          break;
        }
        case 5:
          if (pick(2)) {
            plant.apply(act(ActuationKind::HolderRelease));
            ref.holder = false;
            for (auto& p : ref.pieces) p.held = false;
          } else {
            got = code_of([&] { plant.apply(act(ActuationKind::Handover)); });
            auto* p = ref.at_ready();
            if (!p) {
              want = ErrorCode::NoWorkpieceAtReadyPosition;
            } else {
              if (p->held) ref.holder = false;
              p->held = false;
              p->on_belt = false;
            }
          }
          break;
        default: {
          const Millis dt = pick(3'000);
          plant.advance(dt);
          for (Millis t = 0; t < dt; ++t) ref.tick();
          break;
        }
      }

      const std::string where = "sequence " + std::to_string(seq) + " step " + std::to_string(step) + " op " +
                                std::to_string(op) + ": ";
      auto fail = [&](const std::string& what) {
        out.failure = where + what;
        return out;
      };
      if (got != want) {
        return fail("error class " + std::string(error_code_name(got)) + " != " + std::string(error_code_name(want)));
      }
      for (const auto& rp : ref.pieces) {
        const auto* wp = plant.find_workpiece(rp.id);
        if (!wp) return fail(rp.id + " missing");
        if ((wp->place == PlaceKind::Belt) != rp.on_belt) return fail(rp.id + " placement differs");
        if (rp.on_belt && wp->offset != rp.x) {
          return fail(rp.id + " offset " + std::to_string(wp->offset) + " != " + std::to_string(rp.x));
        }
      }
      const auto signals = plant.read_signals();
      auto flag = [&](const char* address) { return std::get<bool>(signals.at(address)); };
      if (flag("conveyor1.BG56.detected") != ref.entrance()) return fail("BG56 differs");
      if (flag("conveyor1.BG51.detected") != ref.ready()) return fail("BG51 differs");
      if (flag("conveyor1.H1.engaged") != ref.holder) return fail("H1 differs");
      if (flag("conveyor1.C1.transit_overdue") != ref.overdue()) return fail("transit_overdue differs");
      if (std::get<std::string>(signals.at("conveyor1.C1.state")) != ref.belt()) return fail("C1 state differs");
      ++out.comparisons;
    }
    ++out.sequences;
  }
  return out;
}

}  // namespace prodcell::reference
