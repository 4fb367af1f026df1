"""Scenario scripts and delivery transcripts for the simulation harness.

A scenario is a timed list of user actions against one room; a transcript is
the full list of frames the router delivered while executing it. Both have a
stable JSON form so runs can be replayed, diffed, and checked byte-for-byte.

Scenario file:

    {
      "seed": 0,
      "config": {"num_channels": 7, "max_users": 10, "hearing_radius": 25.0,
                 "spawn": [0.0, 0.0]},
      "actions": [
        {"t": 0,   "actor": "ann", "op": "join_room"},
        {"t": 40,  "actor": "ann", "op": "move", "x": 5, "y": 0},
        {"t": 80,  "actor": "ann", "op": "enter_channel", "channel": 3},
        {"t": 120, "actor": "ann", "op": "speak", "text": "hi"},
        {"t": 160, "actor": "ann", "op": "exit_channel"},
        {"t": 200, "actor": "ann", "op": "disconnect"}
      ]
    }

``config`` and its keys are optional; defaults above. ``t`` values are
milliseconds, non-decreasing. An actor's first action must be ``join_room``
and nothing may follow its ``disconnect``.

Transcript file:

    {
      "scenario_seed": 0,
      "records": [
        {"t": 0, "kind": "WELCOME", "from": "ann", "to": "ann", "detail": {...}}
      ]
    }

``detail`` is the delivered frame exactly as it appeared on the wire.
``from`` is the actor whose action caused the frame (for AUDIO and roster
updates, the subject user); ``to`` is the receiving actor.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from hushsim import core

OPS = ("join_room", "move", "speak", "enter_channel", "exit_channel", "disconnect")
_OP_FIELDS = {
    "join_room": (),
    "move": ("x", "y"),
    "speak": ("text",),
    "enter_channel": ("channel",),
    "exit_channel": (),
    "disconnect": (),
}
_ACTION_KEYS = {"t", "actor", "op", "x", "y", "text", "channel"}
_CONFIG_KEYS = {"num_channels", "max_users", "hearing_radius", "spawn"}
MAX_TEXT_CHARS = 4096


class ScenarioInvalid(Exception):
    """Malformed scenario; the message names the offending action or field."""


@dataclass(frozen=True)
class ScriptAction:
    t: int
    actor: str
    op: str
    x: float | None = None
    y: float | None = None
    text: str | None = None
    channel: int | None = None

    def to_dict(self) -> dict:
        out: dict = {"t": self.t, "actor": self.actor, "op": self.op}
        for key in _OP_FIELDS[self.op]:
            out[key] = getattr(self, key)
        return out


@dataclass(frozen=True)
class Scenario:
    seed: int = 0
    config: core.RoomConfig = core.RoomConfig()
    actions: tuple[ScriptAction, ...] = ()

    def actors(self) -> list[str]:
        seen: list[str] = []
        for action in self.actions:
            if action.actor not in seen:
                seen.append(action.actor)
        return seen

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "config": {
                "num_channels": self.config.num_channels,
                "max_users": self.config.max_users,
                "hearing_radius": self.config.hearing_radius,
                "spawn": [self.config.spawn.x, self.config.spawn.y],
            },
            "actions": [a.to_dict() for a in self.actions],
        }

    def to_json(self, indent: int | None = None) -> str:
        if indent is None:
            return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return json.dumps(self.to_dict(), indent=indent) + "\n"


def _fail(where: str, why: str) -> None:
    raise ScenarioInvalid(f"{where}: {why}")


def _config_from_dict(data: object) -> core.RoomConfig:
    if not isinstance(data, dict):
        _fail("config", "must be an object")
    for key in data:
        if key not in _CONFIG_KEYS:
            _fail("config", f"unknown key {key!r}")
    defaults = core.RoomConfig()
    num_channels = data.get("num_channels", defaults.num_channels)
    max_users = data.get("max_users", defaults.max_users)
    radius = data.get("hearing_radius", defaults.hearing_radius)
    spawn = data.get("spawn", [defaults.spawn.x, defaults.spawn.y])
    for name, value in (("num_channels", num_channels), ("max_users", max_users)):
        if not isinstance(value, int) or isinstance(value, bool):
            _fail(f"config.{name}", "must be an integer")
    if isinstance(radius, bool) or not isinstance(radius, (int, float)):
        _fail("config.hearing_radius", "must be a number")
    if (
        not isinstance(spawn, list)
        or len(spawn) != 2
        or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in spawn)
    ):
        _fail("config.spawn", "must be [x, y]")
    try:
        return core.RoomConfig(
            num_channels=num_channels,
            max_users=max_users,
            hearing_radius=float(radius),
            spawn=core.Position(float(spawn[0]), float(spawn[1])),
        )
    except (ValueError, core.RoomError) as exc:
        raise ScenarioInvalid(f"config: {exc}") from None


def _action_from_dict(data: object, index: int) -> ScriptAction:
    where = f"actions[{index}]"
    if not isinstance(data, dict):
        _fail(where, "must be an object")
    for key in data:
        if key not in _ACTION_KEYS:
            _fail(where, f"unknown key {key!r}")
    for key in ("t", "actor", "op"):
        if key not in data:
            _fail(where, f"missing key {key!r}")
    t, actor, op = data["t"], data["actor"], data["op"]
    if not isinstance(t, int) or isinstance(t, bool) or t < 0:
        _fail(where, "t must be an integer >= 0")
    if not isinstance(actor, str) or not actor:
        _fail(where, "actor must be a non-empty string")
    if op not in OPS:
        _fail(where, f"unknown op {op!r}")
    wanted = _OP_FIELDS[op]
    for key in ("x", "y", "text", "channel"):
        if key in wanted and key not in data:
            _fail(where, f"op {op!r} requires {key!r}")
        if key not in wanted and key in data:
            _fail(where, f"op {op!r} does not take {key!r}")
    kwargs: dict = {}
    if op == "move":
        for key in ("x", "y"):
            value = data[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                _fail(where, f"{key} must be a number")
            if not math.isfinite(value):
                _fail(where, f"{key} must be finite")
            kwargs[key] = float(value)
    elif op == "speak":
        text = data["text"]
        if not isinstance(text, str) or not 1 <= len(text) <= MAX_TEXT_CHARS:
            _fail(where, f"text must be a string of 1..{MAX_TEXT_CHARS} chars")
        kwargs["text"] = text
    elif op == "enter_channel":
        channel = data["channel"]
        if not isinstance(channel, int) or isinstance(channel, bool):
            _fail(where, "channel must be an integer")
        kwargs["channel"] = channel
    return ScriptAction(t=t, actor=actor, op=op, **kwargs)


def scenario_from_dict(data: object) -> Scenario:
    if not isinstance(data, dict):
        _fail("scenario", "must be an object")
    for key in data:
        if key not in {"seed", "config", "actions"}:
            _fail("scenario", f"unknown key {key!r}")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        _fail("seed", "must be an integer >= 0")
    config = _config_from_dict(data.get("config", {}))
    actions_data = data.get("actions", [])
    if not isinstance(actions_data, list):
        _fail("actions", "must be an array")
    actions = tuple(_action_from_dict(a, i) for i, a in enumerate(actions_data))
    scenario = Scenario(seed=seed, config=config, actions=actions)
    validate_scenario(scenario)
    return scenario


def validate_scenario(scenario: Scenario) -> None:
    """Check ordering and per-actor action legality."""
    joined: set[str] = set()
    gone: set[str] = set()
    last_t = 0
    for i, action in enumerate(scenario.actions):
        where = f"actions[{i}]"
        if action.t < last_t:
            _fail(where, f"t must be non-decreasing (got {action.t} after {last_t})")
        last_t = action.t
        if action.actor in gone:
            _fail(where, f"{action.actor!r} already disconnected")
        if action.op == "join_room":
            if action.actor in joined:
                _fail(where, f"{action.actor!r} already joined")
            joined.add(action.actor)
        else:
            if action.actor not in joined:
                _fail(where, f"{action.actor!r} must join_room first")
            if action.op == "disconnect":
                gone.add(action.actor)


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioInvalid(f"{path}: not valid JSON ({exc})") from None
    return scenario_from_dict(data)


@dataclass(frozen=True)
class DeliveryRecord:
    """One frame handed to one session, with causal attribution."""

    t: int
    kind: str
    sender: str
    recipient: str
    detail: dict

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "kind": self.kind,
            "from": self.sender,
            "to": self.recipient,
            "detail": self.detail,
        }


@dataclass
class Transcript:
    seed: int = 0
    records: list[DeliveryRecord] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "scenario_seed": self.seed,
            "records": [r.to_dict() for r in self.records],
        }

    def to_json(self, indent: int | None = None) -> str:
        if indent is None:
            return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return json.dumps(self.to_dict(), indent=indent) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "Transcript":
        records = [
            DeliveryRecord(
                t=r["t"],
                kind=r["kind"],
                sender=r["from"],
                recipient=r["to"],
                detail=r["detail"],
            )
            for r in data["records"]
        ]
        return cls(seed=data.get("scenario_seed", 0), records=records)
