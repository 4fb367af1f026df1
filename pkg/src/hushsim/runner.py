"""Executes scenarios against the router and records every delivered frame.

Two drive modes with one transcript format:

* in-process: the scenario clock is virtual (``t`` is fed straight into the
  router), so runs are fully deterministic and timer behavior is exact.
* live: each actor becomes a real websocket client against a running server.
  After every action the runner sends a PING as the actor and waits for the
  PONG (the action is fully processed), then does the same for every other
  client (their queues are flushed), so frame capture windows line up with
  actions without trusting wall-clock sleeps.

Frame attribution: for AUDIO and roster updates the sender is the subject
user; for actor-addressed frames (WELCOME, ROOM_STATE, CHANNEL_ACK, ERROR,
PONG) the sender is the actor whose action produced the window. A frame of
that second group delivered to anyone but its sender is a privacy violation,
which is exactly what the leak scanner checks.
"""

from __future__ import annotations

import asyncio
import json
from dataclasses import dataclass
from typing import Callable

from hushsim import faults, wire
from hushsim.config import RoomSpec, ServerConfig
from hushsim.router import RelayRouter
from hushsim.scenario import (
    DeliveryRecord,
    Scenario,
    ScriptAction,
    Transcript,
    validate_scenario,
)

ROOM_ID = "main"
_BARRIER_TIMEOUT_S = 5.0
# Frames addressed to the acting session only; sender == window actor.
ACTOR_ADDRESSED = ("WELCOME", "ROOM_STATE", "CHANNEL_ACK", "ERROR", "PONG")


class RunnerError(Exception):
    """Scenario could not be driven to completion."""


@dataclass
class Step:
    """One executed action plus the frames it caused; passed to on_step."""

    action: ScriptAction
    records: list[DeliveryRecord]
    router: RelayRouter
    names: dict[str, str]  # user_id -> actor name, as known after the action


StepHook = Callable[[Step], None]


class InProcessRunner:
    """Drives a scenario through a router instance with a virtual clock."""

    def __init__(
        self,
        scenario: Scenario,
        router_factory: Callable[[ServerConfig], RelayRouter] | None = None,
        on_step: StepHook | None = None,
    ):
        validate_scenario(scenario)
        self.scenario = scenario
        server_config = ServerConfig(rooms=(RoomSpec(ROOM_ID, scenario.config),))
        self.router = (router_factory or RelayRouter)(server_config)
        self.on_step = on_step
        self._sid_of: dict[str, str] = {}
        self._actor_of: dict[str, str] = {}
        self._name_of_uid: dict[str, str] = {}
        self._seq: dict[str, int] = {}
        self._closed: set[str] = set()
        self._counter = 0

    def run(self) -> Transcript:
        records: list[DeliveryRecord] = []
        for action in self.scenario.actions:
            self._drain_timers(records, upto=action.t)
            if action.actor in self._closed:
                # The router dropped this session mid-scenario; the script's
                # remaining lines for it have no one to speak them.
                continue
            step_records = self._apply(action)
            records.extend(step_records)
            if self.on_step is not None:
                self.on_step(
                    Step(
                        action=action,
                        records=step_records,
                        router=self.router,
                        names=dict(self._name_of_uid),
                    )
                )
        self._drain_timers(records, upto=None)
        return Transcript(seed=self.scenario.seed, records=records)

    # -- execution ---------------------------------------------------------

    def _apply(self, action: ScriptAction) -> list[DeliveryRecord]:
        t, actor = action.t, action.actor
        if action.op == "join_room":
            self._counter += 1
            sid = f"c{self._counter}"
            self._sid_of[actor] = sid
            self._actor_of[sid] = actor
            self._seq[actor] = 0
            self.router.connect(sid)
            hello = wire.Hello(proto_version=wire.PROTO_VERSION, display_name=actor)
            recs = self._collect(self.router.handle_message(sid, hello, t), t, actor)
            join = wire.JoinRoom(room_id=ROOM_ID)
            recs.extend(self._collect(self.router.handle_message(sid, join, t), t, actor))
            return recs
        sid = self._sid_of[actor]
        if action.op == "disconnect":
            self._closed.add(actor)
            return self._collect(self.router.disconnect(sid, t), t, actor)
        if action.op == "move":
            msg: wire.WireMessage = wire.Move(x=action.x, y=action.y)
        elif action.op == "speak":
            self._seq[actor] += 1
            msg = wire.Speak(seq=self._seq[actor], payload=action.text.encode("utf-8"))
        elif action.op == "enter_channel":
            msg = wire.EnterChannel(channel=action.channel)
        else:
            msg = wire.ExitChannel()
        return self._collect(self.router.handle_message(sid, msg, t), t, actor)

    def _collect(self, out, t: int, acting: str | None) -> list[DeliveryRecord]:
        recs: list[DeliveryRecord] = []
        for sid, msg in out.sends:
            recipient = self._actor_of.get(sid, sid)
            if isinstance(msg, faults.RawFrame):
                detail = msg.raw
            else:
                detail = wire.to_dict(msg)
            kind = detail.get("type", "?")
            if kind == "WELCOME":
                self._name_of_uid[detail["user_id"]] = recipient
            recs.append(
                DeliveryRecord(
                    t=t,
                    kind=kind,
                    sender=self._sender_for(kind, detail, acting),
                    recipient=recipient,
                    detail=detail,
                )
            )
        for sid in out.closes:
            victim = self._actor_of.get(sid)
            if victim is not None and victim not in self._closed:
                self._closed.add(victim)
                recs.extend(self._collect(self.router.disconnect(sid, t), t, victim))
        return recs

    def _sender_for(self, kind: str, detail: dict, acting: str | None) -> str:
        if kind == "AUDIO":
            return self._name_of_uid.get(detail.get("speaker_id"), "?")
        if kind == "USER_JOINED":
            return detail.get("display_name", "?")
        if kind in ("USER_LEFT", "USER_MOVED"):
            return self._name_of_uid.get(detail.get("user_id"), "?")
        return acting if acting is not None else "?"

    def _drain_timers(self, records: list[DeliveryRecord], upto: int | None) -> None:
        while True:
            due = self.router.next_timer_ms()
            if due is None or (upto is not None and due > upto):
                return
            out = self.router.poll_timers(due)
            records.extend(self._collect(out, due, acting=None))


# -- live mode ---------------------------------------------------------------


class _LiveClient:
    def __init__(self, actor: str, ws):
        self.actor = actor
        self.ws = ws
        self.inbox: list[dict] = []
        self.open = True
        self._nonce = 0
        self.seq = 0
        self._pong_waiters: dict[int, asyncio.Future] = {}
        self.reader = asyncio.create_task(self._read_loop())

    async def _read_loop(self) -> None:
        from websockets.exceptions import ConnectionClosed

        try:
            async for raw in self.ws:
                obj = json.loads(raw)
                if isinstance(obj, dict) and obj.get("type") == "PONG":
                    waiter = self._pong_waiters.pop(obj.get("nonce"), None)
                    if waiter is not None and not waiter.done():
                        waiter.set_result(None)
                    continue
                self.inbox.append(obj)
        except ConnectionClosed:
            pass
        finally:
            self.open = False

    async def send(self, msg: wire.WireMessage) -> None:
        await self.ws.send(wire.encode(msg))

    async def barrier(self) -> None:
        """Returns once every frame the server queued for us has arrived."""
        if not self.open:
            return
        self._nonce += 1
        waiter = asyncio.get_running_loop().create_future()
        self._pong_waiters[self._nonce] = waiter
        await self.send(wire.Ping(nonce=self._nonce))
        try:
            await asyncio.wait_for(waiter, timeout=_BARRIER_TIMEOUT_S)
        except asyncio.TimeoutError:
            raise RunnerError(f"no PONG for {self.actor!r} within {_BARRIER_TIMEOUT_S}s") from None

    async def close(self) -> None:
        self.open = False
        await self.ws.close()
        await self.reader


async def _run_live(scenario: Scenario, addr: str) -> Transcript:
    from websockets.asyncio.client import connect

    clients: dict[str, _LiveClient] = {}
    name_of_uid: dict[str, str] = {}
    records: list[DeliveryRecord] = []
    start = asyncio.get_running_loop().time()

    def flush(t: int, acting: str) -> None:
        for actor in sorted(clients):
            client = clients[actor]
            frames, client.inbox = client.inbox, []
            for detail in frames:
                kind = detail.get("type", "?") if isinstance(detail, dict) else "?"
                if kind == "WELCOME":
                    name_of_uid[detail["user_id"]] = actor
                elif kind == "USER_JOINED":
                    name_of_uid[detail["user_id"]] = detail.get("display_name", "?")
                if kind == "AUDIO":
                    sender = name_of_uid.get(detail.get("speaker_id"), "?")
                elif kind == "USER_JOINED":
                    sender = detail.get("display_name", "?")
                elif kind in ("USER_LEFT", "USER_MOVED"):
                    sender = name_of_uid.get(detail.get("user_id"), "?")
                else:
                    sender = acting
                records.append(
                    DeliveryRecord(t=t, kind=kind, sender=sender, recipient=actor, detail=detail)
                )

    async def settle(t: int, acting: str) -> None:
        actor_client = clients.get(acting)
        if actor_client is not None and actor_client.open:
            await actor_client.barrier()
        for name in sorted(clients):
            if name != acting and clients[name].open:
                await clients[name].barrier()
        flush(t, acting)

    try:
        for action in scenario.actions:
            loop = asyncio.get_running_loop()
            delay = start + action.t / 1000.0 - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            actor = action.actor
            if action.op == "join_room":
                try:
                    ws = await connect(f"ws://{addr}/", max_size=2 * wire.MAX_FRAME_BYTES)
                except OSError as exc:
                    raise RunnerError(f"cannot connect to {addr}: {exc}") from None
                client = _LiveClient(actor, ws)
                clients[actor] = client
                await client.send(
                    wire.Hello(proto_version=wire.PROTO_VERSION, display_name=actor)
                )
                await client.send(wire.JoinRoom(room_id=ROOM_ID))
            elif action.op == "disconnect":
                await clients[actor].close()
                # Give the server a beat to notice the closed socket before
                # other clients barrier, so the USER_LEFT lands in this window.
                await asyncio.sleep(0.08)
            else:
                client = clients[actor]
                if action.op == "move":
                    await client.send(wire.Move(x=action.x, y=action.y))
                elif action.op == "speak":
                    client.seq += 1
                    await client.send(
                        wire.Speak(seq=client.seq, payload=action.text.encode("utf-8"))
                    )
                elif action.op == "enter_channel":
                    await client.send(wire.EnterChannel(channel=action.channel))
                else:
                    await client.send(wire.ExitChannel())
            await settle(action.t, actor)

        # Catch stragglers such as coalesced position broadcasts.
        await asyncio.sleep(0.15)
        last_t = scenario.actions[-1].t if scenario.actions else 0
        await settle(last_t, "?")
    finally:
        for client in clients.values():
            if client.open:
                await client.close()
    return Transcript(seed=scenario.seed, records=records)


def run_scenario(
    scenario: Scenario,
    mode: str = "in-process",
    live_addr: str | None = None,
    router_factory: Callable[[ServerConfig], RelayRouter] | None = None,
    on_step: StepHook | None = None,
) -> Transcript:
    """Execute a scenario and return its transcript."""
    if mode == "in-process":
        return InProcessRunner(scenario, router_factory=router_factory, on_step=on_step).run()
    if mode == "live":
        if live_addr is None:
            raise ValueError("live mode needs live_addr")
        if router_factory is not None or on_step is not None:
            raise ValueError("live mode drives a real server; no hooks apply")
        validate_scenario(scenario)
        return asyncio.run(_run_live(scenario, live_addr))
    raise ValueError(f"unknown mode {mode!r}")
