"""Randomized scenario fuzzing against an independent shadow model.

Every generated action is applied twice: to the router (through the normal
runner) and to a deliberately naive shadow room that re-derives the expected
outcome from scratch. After each action the two states must match, every
SPEAK fan-out must equal the brute-force audibility oracle's answer, and at
the end the whole transcript goes through the leak scanner with the shadow's
acknowledgement history as ground truth. Any disagreement is a finding;
failing scenarios are shrunk by greedy action deletion before reporting.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from hushsim import core
from hushsim.leakscan import leak_scan
from hushsim.oracle import oracle_recipients
from hushsim.runner import ROOM_ID, Step, run_scenario
from hushsim.scenario import Scenario, ScenarioInvalid, ScriptAction, validate_scenario

_COORDS = [-40, -25, -10, -5, 0, 3, 5, 7, 10, 15, 20, 24, 25, 26, 30, 40, 100, 1000]
_NAMES = ["ann", "bob", "cam", "dee", "eli", "fay", "gus", "hal", "ivy", "joy", "kim"]


@dataclass
class ShadowUser:
    name: str
    x: float
    y: float
    channel: int | None


@dataclass
class Prediction:
    """What the shadow expects one action to produce."""

    error: str | None = None
    ack: tuple[int | None, str] | None = None
    audio_to: set[str] | None = None


class ShadowRoom:
    """Second opinion on room state, written against the rules, not the code."""

    def __init__(self, config: core.RoomConfig):
        self.config = config
        self.users: dict[str, ShadowUser] = {}

    def describe(self) -> dict:
        return {
            "hearing_radius": self.config.hearing_radius,
            "users": [
                {"name": u.name, "x": u.x, "y": u.y, "channel": u.channel}
                for u in self.users.values()
            ],
        }

    def apply(self, action: ScriptAction) -> Prediction:
        pred = Prediction()
        name = action.actor
        if action.op == "join_room":
            if len(self.users) >= self.config.max_users:
                pred.error = "ROOM_FULL"
            else:
                spawn = self.config.spawn
                self.users[name] = ShadowUser(name, spawn.x, spawn.y, None)
        elif name not in self.users:
            pred.error = "BAD_MESSAGE"
        elif action.op == "move":
            self.users[name].x = float(action.x)
            self.users[name].y = float(action.y)
        elif action.op == "speak":
            pred.audio_to = oracle_recipients(self.describe(), name)
        elif action.op == "enter_channel":
            channel = action.channel
            if not 1 <= channel <= self.config.num_channels:
                pred.error = "INVALID_CHANNEL"
            else:
                prev = self.users[name].channel
                effect = "switch" if prev is not None and prev != channel else "join"
                self.users[name].channel = channel
                pred.ack = (channel, effect)
        elif action.op == "exit_channel":
            if self.users[name].channel is None:
                pred.error = "NOT_IN_CHANNEL"
            else:
                self.users[name].channel = None
                pred.ack = (None, "leave")
        elif action.op == "disconnect":
            del self.users[name]
        return pred


def generate_scenario(
    rng: random.Random, seed: int = 0, max_users: int = 8, max_channels: int = 4
) -> Scenario:
    num_channels = rng.randint(1, max_channels)
    capacity = rng.randint(2, max(2, max_users))
    config = core.RoomConfig(
        num_channels=num_channels,
        max_users=capacity,
        hearing_radius=rng.choice([5.0, 10.0, 25.0, 50.0]),
    )
    joiners = rng.randint(2, capacity)
    # When the room fills up, sometimes script one refused join on top.
    extra = joiners == capacity and rng.random() < 0.15
    names = _NAMES[: joiners + (1 if extra else 0)]

    actions: list[ScriptAction] = []
    t = 0
    for name in names:
        actions.append(ScriptAction(t=t, actor=name, op="join_room"))
        t += rng.randint(0, 30)

    live = names[:joiners]
    msg_counter = 0
    for _ in range(rng.randint(5, 40)):
        if not live:
            break
        t += rng.randint(0, 80)
        actor = rng.choice(live)
        roll = rng.random()
        if roll < 0.30:
            actions.append(
                ScriptAction(
                    t=t,
                    actor=actor,
                    op="move",
                    x=float(rng.choice(_COORDS)),
                    y=float(rng.choice(_COORDS)),
                )
            )
        elif roll < 0.58:
            msg_counter += 1
            actions.append(ScriptAction(t=t, actor=actor, op="speak", text=f"msg-{msg_counter}"))
        elif roll < 0.80:
            if rng.random() < 0.10:
                channel = rng.choice([0, -2, num_channels + 1])
            else:
                channel = rng.randint(1, num_channels)
            actions.append(ScriptAction(t=t, actor=actor, op="enter_channel", channel=channel))
        elif roll < 0.93:
            actions.append(ScriptAction(t=t, actor=actor, op="exit_channel"))
        elif len(live) > 1:
            actions.append(ScriptAction(t=t, actor=actor, op="disconnect"))
            live.remove(actor)
        else:
            msg_counter += 1
            actions.append(ScriptAction(t=t, actor=actor, op="speak", text=f"msg-{msg_counter}"))

    return Scenario(seed=seed, config=config, actions=tuple(actions))


def check_scenario(scenario: Scenario, router_factory=None) -> list[str]:
    """Run one scenario; return human-readable violations (empty when clean)."""
    shadow = ShadowRoom(scenario.config)
    expected_acks: dict[str, list[tuple[int | None, str]]] = {}
    violations: list[str] = []
    counter = {"i": 0}

    def on_step(step: Step) -> None:
        i = counter["i"]
        counter["i"] += 1
        pred = shadow.apply(step.action)
        if pred.ack is not None:
            expected_acks.setdefault(step.action.actor, []).append(pred.ack)
        _check_step(step, pred, shadow, violations, i)

    transcript = run_scenario(scenario, on_step=on_step, router_factory=router_factory)
    for violation in leak_scan(transcript, expected_acks).violations:
        violations.append(str(violation))
    return violations


def _check_step(
    step: Step, pred: Prediction, shadow: ShadowRoom, violations: list[str], i: int
) -> None:
    act = step.action
    prefix = f"action[{i}] {act.op} by {act.actor}"
    errors = [r for r in step.records if r.kind == "ERROR"]
    acks = [r for r in step.records if r.kind == "CHANNEL_ACK"]
    audio = [r for r in step.records if r.kind == "AUDIO"]

    if pred.error is None:
        if errors:
            violations.append(f"{prefix}: unexpected ERROR {errors[0].detail}")
    elif (
        len(errors) != 1
        or errors[0].recipient != act.actor
        or errors[0].detail.get("code") != pred.error
    ):
        got = [(r.recipient, r.detail.get("code")) for r in errors]
        violations.append(f"{prefix}: expected {pred.error} to {act.actor!r}, got {got}")

    if pred.ack is None:
        if acks:
            violations.append(f"{prefix}: unexpected CHANNEL_ACK {acks[0].detail}")
    elif (
        len(acks) != 1
        or acks[0].recipient != act.actor
        or acks[0].detail.get("channel") != pred.ack[0]
        or acks[0].detail.get("effect") != pred.ack[1]
    ):
        got = [(r.recipient, r.detail) for r in acks]
        violations.append(f"{prefix}: expected ack {pred.ack} to {act.actor!r}, got {got}")

    if pred.audio_to is None:
        if audio:
            violations.append(f"{prefix}: unexpected AUDIO to {audio[0].recipient!r}")
    else:
        got_names = {r.recipient for r in audio}
        if got_names != pred.audio_to:
            violations.append(
                f"{prefix}: AUDIO reached {sorted(got_names)}, "
                f"oracle says {sorted(pred.audio_to)}"
            )
        if act.actor in got_names:
            violations.append(f"{prefix}: speaker heard their own AUDIO")
        if len(audio) != len(got_names):
            violations.append(f"{prefix}: duplicate AUDIO delivery")

    room = step.router.rooms[ROOM_ID]
    actual = {
        step.names.get(uid, uid): (user.position.x, user.position.y, user.channel)
        for uid, user in room.users.items()
    }
    wanted = {u.name: (u.x, u.y, u.channel) for u in shadow.users.values()}
    if actual != wanted:
        violations.append(f"{prefix}: state diverged; router={actual} shadow={wanted}")

    if len(room.users) > room.config.max_users:
        violations.append(f"{prefix}: room holds {len(room.users)} > {room.config.max_users}")
    for uid, user in room.users.items():
        if user.channel is not None and not 1 <= user.channel <= room.config.num_channels:
            violations.append(f"{prefix}: {uid} sits in out-of-range channel {user.channel}")


@dataclass
class FuzzFailure:
    scenario_seed: int
    violations: list[str]
    scenario: Scenario
    minimal: Scenario | None = None


@dataclass
class FuzzReport:
    seed: int
    scenarios_run: int = 0
    elapsed_s: float = 0.0
    failures: list[FuzzFailure] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def run_fuzz(
    seed: int,
    count: int,
    max_users: int = 8,
    max_channels: int = 4,
    router_factory=None,
    max_failures: int = 1,
    shrink: bool = True,
) -> FuzzReport:
    """Generate and check ``count`` scenarios derived from ``seed``."""
    master = random.Random(seed)
    report = FuzzReport(seed=seed)
    started = time.perf_counter()
    for _ in range(count):
        scenario_seed = master.getrandbits(48)
        scenario = generate_scenario(
            random.Random(scenario_seed), scenario_seed, max_users, max_channels
        )
        violations = check_scenario(scenario, router_factory)
        report.scenarios_run += 1
        if violations:
            minimal = shrink_scenario(scenario, router_factory) if shrink else None
            report.failures.append(
                FuzzFailure(scenario_seed, violations, scenario, minimal)
            )
            if len(report.failures) >= max_failures:
                break
    report.elapsed_s = time.perf_counter() - started
    return report


def shrink_scenario(scenario: Scenario, router_factory=None, max_rounds: int = 8) -> Scenario:
    """Greedy deletion: drop any action whose removal keeps the failure."""
    current = scenario
    for _ in range(max_rounds):
        changed = False
        i = len(current.actions) - 1
        while i >= 0:
            candidate = _delete_action(current, i)
            if candidate is not None and check_scenario(candidate, router_factory):
                current = candidate
                changed = True
                i = min(i, len(current.actions))
            i -= 1
        if not changed:
            break
    return current


def _delete_action(scenario: Scenario, i: int) -> Scenario | None:
    actions = list(scenario.actions)
    target = actions[i]
    if target.op == "join_room":
        # Everything the actor does rides on their join; drop it all.
        kept = [a for a in actions if a.actor != target.actor]
    else:
        kept = [a for j, a in enumerate(actions) if j != i]
    if len(kept) == len(actions):
        return None
    candidate = Scenario(seed=scenario.seed, config=scenario.config, actions=tuple(kept))
    try:
        validate_scenario(candidate)
    except ScenarioInvalid:
        return None
    return candidate
