#!/usr/bin/env python3
"""Writes the named scenarios and the 100-scenario evaluation suite under data/."""
import json
import pathlib
import random

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"


def station(sid="conveyor1", next_agent="op_next", length=1.0):
    return {"id": sid, "belt_length_m": length, "belt_speed_mps": 0.2, "next_agent": next_agent}


def peers(busy_count, busy_delay=1000, final="ready"):
    return {"op_next": {"replies": [{"status": "busy", "delay_ms": busy_delay}] * busy_count,
                        "then": {"status": final, "delay_ms": 0}}}


def conveyor_points(busy_count, terminal_release=True):
    pts = [
        {"id": "entrance", "trigger": "Sensor BG56 detects an object at the entrance", "agent": "op_conveyor",
         "acceptable": ["conveyor_belt_run(forward, *)"], "optimal": ["conveyor_belt_run(forward, 10)"]},
        {"id": "ready", "trigger": "Sensor BG51 at the ready position detects the workpiece", "agent": "op_conveyor",
         "acceptable": ["activate_material_holder"]},
        {"id": "held", "trigger": "Holder H1 secures the position", "agent": "op_conveyor",
         "acceptable": ["rfid_read"]},
        {"id": "cleared", "trigger": "RFID check is successful", "agent": "op_conveyor",
         "acceptable": ["communicate_with_next_agent", "communicate_with_agent"]},
    ]
    if busy_count:
        pts.append({"id": "busy", "trigger": "The next operator agent is busy", "agent": "op_conveyor",
                    "acceptable": ["wait"], "optimal": ["wait(5)"]})
    pts.append({"id": "release", "trigger": "The next operator agent is ready", "agent": "op_conveyor",
                "acceptable": ["release_workpiece_to_next_agent"], "terminal": terminal_release})
    return pts


def handover_scenario(sid, category, spawn_at, busy_count, workpiece="W1", length=1.0, busy_delay=1000,
                      description=""):
    return {
        "id": sid,
        "category": category,
        "description": description or f"Workpiece {workpiece} arrives at {spawn_at} ms; the next operator is busy "
                                      f"{busy_count} time(s) before it is ready.",
        "agents": "agents/conveyor_cell.json",
        "plant": {"stations": [station(length=length)]},
        "timeline": [{"at": spawn_at, "spawn": {"station": "conveyor1", "workpiece": workpiece, "cleared": True}}],
        "peer_replies": peers(busy_count, busy_delay),
        "end": {"until_commands": ["release_workpiece_to_next_agent"], "time_limit_ms": spawn_at + 120000},
        "golden": {"points": conveyor_points(busy_count)},
    }


def stuck_scenario(sid, spawn_at, stuck_after, workpiece="W1", dropout=False):
    fault = ({"kind": "sensor_dropout", "target": "conveyor1.BG51", "at": spawn_at}
             if dropout else {"kind": "stuck_workpiece", "target": workpiece, "at": spawn_at + stuck_after})
    what = "sensor BG51 drops out" if dropout else f"the workpiece sticks {stuck_after} ms after arrival"
    return {
        "id": sid,
        "category": "novel",
        "description": f"Workpiece {workpiece} arrives at {spawn_at} ms and {what}; "
                       "the operator should wait, then alert once the belt stops.",
        "agents": "agents/conveyor_cell.json",
        "plant": {"stations": [station()]},
        "timeline": [
            {"at": spawn_at, "spawn": {"station": "conveyor1", "workpiece": workpiece, "cleared": True}},
            {"at": spawn_at, "fault": fault},
        ],
        "peer_replies": peers(0),
        "end": {"until_commands": ["send_alert_to_human_supervisor"], "time_limit_ms": spawn_at + 60000},
        "golden": {"points": [
            {"id": "entrance", "trigger": "Sensor BG56 detects an object at the entrance", "agent": "op_conveyor",
             "acceptable": ["conveyor_belt_run(forward, *)"]},
            {"id": "overdue", "trigger": "The workpiece has not reached the ready position yet", "agent": "op_conveyor",
             "acceptable": ["wait", "send_alert_to_human_supervisor", "conveyor_belt_stop"], "optimal": ["wait"]},
            {"id": "stopped", "trigger": "The conveyor stops", "agent": "op_conveyor",
             "acceptable": ["send_alert_to_human_supervisor"], "terminal": True},
        ]},
    }


def rfid_scenario(sid, spawn_at, cleared, workpiece="W1"):
    trigger = "RFID check failed" if cleared is False else "RFID check could not identify"
    spawn = {"station": "conveyor1", "workpiece": workpiece}
    if cleared is not None:
        spawn["cleared"] = cleared
    pts = conveyor_points(0)[:3]
    pts.append({"id": "rejected", "trigger": trigger, "agent": "op_conveyor",
                "acceptable": ["send_alert_to_human_supervisor"], "terminal": True})
    return {
        "id": sid,
        "category": "novel",
        "description": f"Workpiece {workpiece} fails the RFID check; it must not be handed over.",
        "agents": "agents/conveyor_cell.json",
        "plant": {"stations": [station()]},
        "timeline": [{"at": spawn_at, "spawn": spawn}],
        "peer_replies": peers(0),
        "end": {"until_commands": ["send_alert_to_human_supervisor"], "time_limit_ms": spawn_at + 60000},
        "golden": {"points": pts},
    }


def offline_scenario(sid, spawn_at, workpiece="W1"):
    pts = conveyor_points(0)[:4]
    pts.append({"id": "silent", "trigger": "The next operator agent does not respond", "agent": "op_conveyor",
                "acceptable": ["send_alert_to_human_supervisor", "wait"], "terminal": True})
    return {
        "id": sid,
        "category": "novel",
        "description": f"The next operator never answers while {workpiece} waits at the ready position.",
        "agents": "agents/conveyor_cell.json",
        "plant": {"stations": [station()]},
        "timeline": [{"at": spawn_at, "spawn": {"station": "conveyor1", "workpiece": workpiece, "cleared": True}}],
        "peer_replies": {"op_next": {"replies": [], "then": {"status": "offline", "delay_ms": 2000}}},
        "end": {"until_commands": ["send_alert_to_human_supervisor"], "time_limit_ms": spawn_at + 60000},
        "golden": {"points": pts},
    }


def transport_scenario(sid, spawn_at, destination="dock_b", workpiece="W1", start="dock_a"):
    return {
        "id": sid,
        "category": "routine",
        "description": f"A user asks to bring {workpiece} from conveyor1 to {destination}; the manager plans, "
                       "the conveyor operator hands over and the AGV operator delivers.",
        "agents": "agents/transport_cell.json",
        "manager": "manager",
        "plant": {
            "stations": [station(next_agent="op_agv")],
            "agvs": [{"id": "agv1", "location": start}],
            "docks": ["dock_a", "dock_b", "dock_c"],
        },
        "timeline": [
            {"at": 0, "task": f"Transport workpiece {workpiece} from conveyor1 to {destination}."},
            {"at": spawn_at, "spawn": {"station": "conveyor1", "workpiece": workpiece, "cleared": True}},
        ],
        "end": {"until_commands": ["unload_workpiece"], "time_limit_ms": spawn_at + 120000},
        "golden": {"points": [
            {"id": "plan", "trigger": "Plan step 1 for op_agv", "agent": "op_agv", "acceptable": ["move_to(conveyor1)"]},
            {"id": "release", "trigger": "The next operator agent is ready", "agent": "op_conveyor",
             "acceptable": ["release_workpiece_to_next_agent"]},
            {"id": "pickup", "trigger": f"AGV agv1 loads workpiece {workpiece}", "agent": "op_agv",
             "acceptable": [f"move_to({destination})"]},
            {"id": "deliver", "trigger": f"AGV agv1 arrives at {destination}", "agent": "op_agv",
             "acceptable": ["unload_workpiece"], "terminal": True},
        ]},
    }


def idle_scenario():
    return {
        "id": "idle",
        "category": "routine",
        "description": "Nothing arrives; the run ends quiescent without any decision.",
        "agents": "agents/conveyor_cell.json",
        "plant": {"stations": [station()]},
        "timeline": [],
        "golden": {"points": []},
    }


def write(path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2) + "\n")


def named():
    golden = handover_scenario("golden_run", "routine", 14300, 1,
                                 description="Single workpiece, next operator busy once, then ready.")
    golden["end"]["time_limit_ms"] = 60000
    stuck = stuck_scenario("stuck_workpiece", 14300, 1700)
    return {
        "golden_run": golden,
        "stuck_workpiece": stuck,
        "rfid_failed": rfid_scenario("rfid_failed", 2000, False),
        "peer_offline": offline_scenario("peer_offline", 2000),
        "transport_task": transport_scenario("transport_task", 4000),
        "idle": idle_scenario(),
    }


def suite(rng):
    scenarios = []
    for i in range(30):
        scenarios.append(handover_scenario(
            f"routine_handover_{i + 1:02d}", "routine", rng.randrange(1, 30) * 100 + 1000 * (i % 5),
            rng.randrange(0, 4), workpiece=f"W{100 + i}", length=rng.choice([0.8, 1.0, 1.2]),
            busy_delay=rng.choice([500, 1000, 2000])))
    for i in range(20):
        scenarios.append(transport_scenario(
            f"routine_transport_{i + 1:02d}", rng.randrange(30, 80) * 100, destination=rng.choice(["dock_b", "dock_c"]),
            workpiece=f"W{200 + i}", start=rng.choice(["dock_a", "dock_b", "dock_c"])))
    for i in range(15):
        scenarios.append(stuck_scenario(f"novel_stuck_{i + 1:02d}", rng.randrange(5, 60) * 100,
                                        rng.randrange(1, 40) * 100, workpiece=f"W{300 + i}"))
    for i in range(10):
        scenarios.append(stuck_scenario(f"novel_dropout_{i + 1:02d}", rng.randrange(5, 60) * 100, 0,
                                        workpiece=f"W{400 + i}", dropout=True))
    for i in range(10):
        scenarios.append(rfid_scenario(f"novel_rfid_{i + 1:02d}", rng.randrange(5, 60) * 100,
                                       False if i % 2 == 0 else None, workpiece=f"W{500 + i}"))
    for i in range(15):
        scenarios.append(offline_scenario(f"novel_offline_{i + 1:02d}", rng.randrange(5, 60) * 100,
                                          workpiece=f"W{600 + i}"))
    return {"id": "suite100", "scenarios": scenarios}


if __name__ == "__main__":
    for name, obj in named().items():
        write(DATA / "scenarios" / f"{name}.json", obj)
    write(DATA / "suites" / "suite100.json", suite(random.Random(20240611)))
