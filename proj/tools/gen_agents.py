#!/usr/bin/env python3
"""Writes the agent definition files under data/agents/."""
import json
import pathlib

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"

ROLE = ("You are an operator agent that is responsible for controlling the material transport "
        "on a conveyor before a production process.")

CONTEXT = "\n\n".join([
    "This conveyor belt is a straight, 1-meter-long system designed for material transport. "
    "At its entrance, sensor BG56 detects incoming workpieces. At the end of its path, sensor BG51 "
    "detects the workpiece at the ready position, actuator holder H1 can secure the workpieces in place, "
    "and an RFID sensor TF81 reads the workpiece IDs for processing validation.",
    "Components descriptions:",
    "Sensors:",
    "BG51: Detects workpieces at the ready position.",
    "RFID Sensor TF81: Reads workpiece IDs to validate processing criteria.",
    "Actuators:",
    "Conveyor C1: Controls the movement of the conveyor. It can be controlled via the following command(s):",
    "`conveyor_belt_run(direction, duration_in_second),`",
    "`conveyor_belt_stop()`.",
    "Material Holder H1: Holds workpieces at the ready position. It can be controlled via the following command(s):",
    "`activate_material_holder(), deactivate_material_holder()`.",
])

SOP = "\n".join([
    "Standard Operation Procedure:",
    "",
    "The process begin with a workpiece arriving at the entrance of the conveyor.",
    "1. If sensor BG56 detect an object, it indicates that a workpiece is detected at the entrance position. "
    "You should call `activate_conveyor(forward, 10)` to set the conveyor moving forward for 10 seconds, "
    "to transport the workpiece to the ready position.",
    "2. If sensor BG51 detect an object, it indicates that a workpiece is detected at the ready position. "
    "You should call `activate_material_holder()` to secure the workpiece in place, ensuring that the "
    "workpiece is securely positioned.",
    "3. If the workpiece is detected at the ready position and is being held, you should call `rfid_read()` "
    "to read the workpiece information, to determine whether the workpiece is suitable for further processing.",
    "4. If the workpiece information checks out OK, you should call `ask_next_operator()` to determine the "
    "status of the next operator agent, in order to decide whether to wait or to forward the workpiece to "
    "the next operator agent.",
    "5. If the next operator is busy, then call `wait(5)` to wait for 5 seconds before calling "
    "`ask_next_operator()` again to check the status of the next agent; if the next operator is ready, "
    "then call `release_workpiece()` to release the workpiece and hand it over to the next operator.",
])

IO = "\n\n".join([
    "Instructions for you:",
    "You will observe an event log in the following input section, and you shall generate your response "
    "in the output section.",
    "You should follow this input and output pattern to generate a response in JSON format:",
    "Input:",
    "// An event log will be given here.",
    "Output:",
    '{"reason": "a_reason", "command": "a_command()"}',
    "Now, you should generate a response:",
])

CONVEYOR_CATALOG = [
    {"name": "conveyor_belt_run", "signature": "conveyor_belt_run(direction, duration_in_second)",
     "description": "Moves the conveyor belt in the specified direction ('forward' or 'backward') for a set duration."},
    "conveyor_belt_stop",
    "activate_material_holder",
    "deactivate_material_holder",
    "communicate_with_next_agent",
    "release_ready_workpiece_to_next_agent",
    {"name": "wait", "signature": "wait(duration_in_second)"},
    {"name": "send_alert_to_human_supervisor", "signature": "send_alert_to_human_supervisor()"},
    {"name": "pass", "description": "Executes no operation, allowing the system to bypass this command "
                                    "without making any change"},
]

CONVEYOR_ALLOWED = [
    "conveyor_belt_run", "conveyor_belt_stop", "activate_material_holder", "deactivate_material_holder",
    "communicate_with_agent", "communicate_with_next_agent", "release_workpiece_to_next_agent", "wait",
    "send_alert_to_human_supervisor", "pass", "rfid_read",
    "activate_conveyor", "release_workpiece", "release_ready_workpiece_to_next_agent", "ask_next_operator",
]


def conveyor_operator(agent_id="op_conveyor", unit="conveyor1", next_agent="op_next"):
    return {
        "id": agent_id,
        "level": "operator",
        "speaker": "Operator agent",
        "unit": unit,
        "next_agent": next_agent,
        "prompt": {"role_goal": ROLE, "context": CONTEXT, "behavior": SOP, "io_pattern": IO},
        "subscription": {"tags": [unit], "window": 50},
        "allowed_services": CONVEYOR_ALLOWED,
        "catalog": CONVEYOR_CATALOG,
    }


AGV_OPERATOR = {
    "id": "op_agv",
    "level": "operator",
    "speaker": "AGV operator agent",
    "unit": "agv1",
    "prompt": {
        "role_goal": "You are an operator agent that is responsible for an automated guided vehicle (AGV) "
                     "that moves workpieces between stations.",
        "context": "AGV agv1 drives between the conveyor stations and the docks of the cell. It can load a "
                   "workpiece that has been handed over at its current location and unload it at another one.",
        "behavior": "\n".join([
            "Standard Operation Procedure:",
            "",
            "1. When a plan step asks you to fetch a workpiece, call `move_to(station)` to drive there.",
            "2. When the workpiece is handed over to you at your location, call `load_workpiece()`.",
            "3. After loading, call `move_to(destination)` with the destination of the plan step.",
            "4. When you arrive at the destination with a workpiece, call `unload_workpiece()`.",
        ]),
        "io_pattern": IO,
    },
    "subscription": {"tags": ["agv1", "op_agv"], "window": 50},
    "allowed_services": ["move_to", "load_workpiece", "unload_workpiece", "wait",
                         "send_alert_to_human_supervisor", "pass", "communicate_with_agent"],
}

MANAGER = {
    "id": "manager",
    "level": "manager",
    "speaker": "Manager agent",
    "prompt": {
        "role_goal": "You are a manager agent that decomposes user tasks into steps for the operator agents "
                     "of a production cell.",
        "context": "Operator agents: op_conveyor controls conveyor1; op_agv controls AGV agv1, which moves "
                   "workpieces between conveyor1 and the docks.",
        "behavior": "Break the task into ordered steps. Assign each step to exactly one operator agent.",
        "io_pattern": "\n\n".join([
            "Instructions for you:",
            "Respond with a JSON object of the form:",
            '{"goal": "a_goal", "steps": [{"id": "1", "assignee": "an_operator_id", "instruction": "what to do"}]}',
            "Now, you should generate a response:",
        ]),
    },
    "subscription": {"tags": ["task", "manager"], "window": 20},
    "allowed_services": [],
    "catalog": [],
}


def write(name, agents):
    path = DATA / "agents" / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"agents": agents}, indent=2, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    write("conveyor_cell.json", [conveyor_operator()])
    write("transport_cell.json", [conveyor_operator(next_agent="op_agv"), AGV_OPERATOR, MANAGER])
