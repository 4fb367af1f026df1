"""Deterministic relay core: serializes client commands into the room state
machine and computes exactly which session receives which frame.

Transport-free: callers inject the clock (``now_ms``) and deliver the returned
frames themselves. The websocket front end and the in-process simulation
harness share this path, so everything observable here is reproducible.

Privacy posture baked into the fan-out rules:
  * CHANNEL_ACK and ERROR go to the acting session only;
  * AUDIO goes to exactly ``compute_recipients`` at dequeue time;
  * roster broadcasts (USER_JOINED / USER_MOVED / USER_LEFT) carry positions,
    never channels, and a disconnect dissolves channel membership silently;
  * the structured event log carries no channel numbers at all.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from hushsim import core, wire
from hushsim.config import ServerConfig

# 20 position broadcasts per second per user; excess coalesced to the latest.
MOVE_BROADCAST_INTERVAL_MS = 50
# Consecutive BAD_MESSAGE errors before the session is dropped.
BAD_MESSAGE_DISCONNECT_STREAK = 10


@dataclass
class Session:
    """One connected client session; maps to at most one user in one room."""

    session_id: str
    display_name: str | None = None
    room_id: str | None = None
    user_id: str | None = None
    last_speak_seq: int | None = None
    bad_streak: int = 0
    last_move_broadcast_ms: int | None = None
    pending_move_due_ms: int | None = None


@dataclass
class TurnOutput:
    """Frames to deliver, then sessions to close, for one command."""

    sends: list[tuple[str, wire.WireMessage]] = field(default_factory=list)
    closes: list[str] = field(default_factory=list)

    def extend(self, other: "TurnOutput") -> None:
        self.sends.extend(other.sends)
        self.closes.extend(other.closes)


EventSink = Callable[[dict], None]


class RelayRouter:
    """Authoritative command router over one or more statically configured rooms.

    Not thread-safe; the caller provides the single serialized order per room
    (the in-process harness is single-threaded, the websocket server funnels
    each room through one queue).
    """

    def __init__(self, server_config: ServerConfig | None = None, on_event: EventSink | None = None):
        server_config = server_config or ServerConfig()
        self.rooms: dict[str, core.RoomState] = {
            spec.room_id: core.RoomState(spec.config) for spec in server_config.rooms
        }
        self.sessions: dict[str, Session] = {}
        self._session_by_user: dict[tuple[str, str], str] = {}
        self._on_event = on_event or (lambda event: None)
        self.routing_ns: deque[int] = deque(maxlen=20000)

    # -- session lifecycle ---------------------------------------------------

    def connect(self, session_id: str) -> None:
        if session_id in self.sessions:
            raise ValueError(f"session {session_id!r} already connected")
        self.sessions[session_id] = Session(session_id)

    def disconnect(self, session_id: str, now_ms: int) -> TurnOutput:
        """Remove the session; its room membership (and any private channel)
        dissolves with no channel-revealing message."""
        out = TurnOutput()
        sess = self.sessions.pop(session_id, None)
        if sess is None:
            return out
        if sess.room_id is not None and sess.user_id is not None:
            room = self.rooms[sess.room_id]
            self._session_by_user.pop((sess.room_id, sess.user_id), None)
            room.remove_user(sess.user_id)
            left = wire.UserLeft(user_id=sess.user_id)
            for sid in self._member_sessions(sess.room_id):
                out.sends.append((sid, left))
            self._log(now_ms, sess.room_id, "leave", sess.user_id, "ok")
        return out

    # -- command entry points --------------------------------------------------

    def handle_frame(
        self, session_id: str, frame: str | bytes, now_ms: int, *, binary: bool = False
    ) -> TurnOutput:
        """Decode and apply one raw frame from a session."""
        sess = self._session(session_id)
        out = TurnOutput()
        if binary:
            self._bad_message(out, sess, "binary frames are not allowed")
            return out
        try:
            msg = wire.decode(frame)
        except wire.WireError as exc:
            self._bad_message(out, sess, str(exc))
            return out
        return self.handle_message(session_id, msg, now_ms)

    def handle_message(self, session_id: str, msg: wire.WireMessage, now_ms: int) -> TurnOutput:
        """Apply one decoded message from a session."""
        sess = self._session(session_id)
        out = TurnOutput()

        if isinstance(msg, wire.Hello):
            self._on_hello(out, sess, msg)
        elif isinstance(msg, wire.Ping):
            self._on_ping(out, sess, msg)
        elif sess.display_name is None:
            self._bad_message(out, sess, "HELLO must come first")
        elif isinstance(msg, wire.JoinRoom):
            self._on_join(out, sess, msg, now_ms)
        elif sess.room_id is None:
            self._bad_message(out, sess, "not in a room")
        elif isinstance(msg, wire.Move):
            self._on_move(out, sess, msg, now_ms)
        elif isinstance(msg, wire.Speak):
            self._on_speak(out, sess, msg, now_ms)
        elif isinstance(msg, wire.EnterChannel):
            self._on_enter(out, sess, msg, now_ms)
        elif isinstance(msg, wire.ExitChannel):
            self._on_exit(out, sess, now_ms)
        else:
            # Server-to-client vocabulary arriving from a client.
            self._bad_message(out, sess, f"unexpected message type {msg.TYPE}")
        return out

    # -- coalesced position broadcasts -----------------------------------------

    def poll_timers(self, now_ms: int) -> TurnOutput:
        """Flush coalesced position broadcasts that have come due."""
        out = TurnOutput()
        due = [
            sess
            for sess in self.sessions.values()
            if sess.pending_move_due_ms is not None and sess.pending_move_due_ms <= now_ms
        ]
        due.sort(key=lambda s: (s.pending_move_due_ms, s.room_id or "", s.user_id or ""))
        for sess in due:
            self._flush_move(out, sess, now_ms)
        return out

    def next_timer_ms(self) -> int | None:
        """When the earliest pending position broadcast is due, if any."""
        pending = [
            s.pending_move_due_ms for s in self.sessions.values() if s.pending_move_due_ms is not None
        ]
        return min(pending) if pending else None

    # -- message handlers -------------------------------------------------------

    def _on_hello(self, out: TurnOutput, sess: Session, msg: wire.Hello) -> None:
        if sess.display_name is not None:
            self._bad_message(out, sess, "duplicate HELLO")
            return
        if msg.proto_version != wire.PROTO_VERSION:
            sess.bad_streak = 0
            out.sends.append(
                (
                    sess.session_id,
                    wire.ErrorMsg(
                        code=wire.ErrorCode.PROTOCOL_VERSION,
                        message=f"server speaks protocol version {wire.PROTO_VERSION}",
                    ),
                )
            )
            out.closes.append(sess.session_id)
            return
        sess.bad_streak = 0
        sess.display_name = msg.display_name

    def _on_ping(self, out: TurnOutput, sess: Session, msg: wire.Ping) -> None:
        if sess.display_name is None:
            self._bad_message(out, sess, "HELLO must come first")
            return
        sess.bad_streak = 0
        out.sends.append((sess.session_id, wire.Pong(nonce=msg.nonce)))

    def _on_join(self, out: TurnOutput, sess: Session, msg: wire.JoinRoom, now_ms: int) -> None:
        if sess.room_id is not None:
            self._bad_message(out, sess, "already in a room")
            return
        room = self.rooms.get(msg.room_id)
        if room is None:
            self._error(out, sess, wire.ErrorCode.UNKNOWN_ROOM, f"no room {msg.room_id!r}")
            self._log(now_ms, msg.room_id, "join_room", sess.session_id, "UNKNOWN_ROOM")
            return
        try:
            user_id = room.add_user(sess.display_name)
        except core.RoomFull as exc:
            self._error(out, sess, wire.ErrorCode.ROOM_FULL, str(exc))
            self._log(now_ms, msg.room_id, "join_room", sess.session_id, "ROOM_FULL")
            return
        sess.bad_streak = 0
        sess.room_id = msg.room_id
        sess.user_id = user_id
        self._session_by_user[(msg.room_id, user_id)] = sess.session_id

        spec = room.config
        out.sends.append(
            (
                sess.session_id,
                wire.Welcome(
                    user_id=user_id,
                    room_config=wire.RoomConfigInfo(
                        num_channels=spec.num_channels,
                        max_users=spec.max_users,
                        hearing_radius=spec.hearing_radius,
                    ),
                ),
            )
        )
        out.sends.append((sess.session_id, self._room_state_msg(room, user_id)))
        joined = wire.UserJoined(
            user_id=user_id,
            display_name=sess.display_name,
            x=room.users[user_id].position.x,
            y=room.users[user_id].position.y,
        )
        for sid in self._member_sessions(msg.room_id):
            out.sends.append((sid, joined))
        self._log(now_ms, msg.room_id, "join_room", user_id, "ok")

    def _on_move(self, out: TurnOutput, sess: Session, msg: wire.Move, now_ms: int) -> None:
        room = self.rooms[sess.room_id]
        room.move(sess.user_id, core.Position(msg.x, msg.y))
        sess.bad_streak = 0
        self._log(now_ms, sess.room_id, "move", sess.user_id, "ok")

        if sess.pending_move_due_ms is not None:
            # Already coalescing; the flush will pick up the newest position.
            if sess.pending_move_due_ms <= now_ms:
                self._flush_move(out, sess, now_ms)
            return
        last = sess.last_move_broadcast_ms
        if last is None or now_ms - last >= MOVE_BROADCAST_INTERVAL_MS:
            self._broadcast_move(out, sess, now_ms)
        else:
            sess.pending_move_due_ms = last + MOVE_BROADCAST_INTERVAL_MS

    def _flush_move(self, out: TurnOutput, sess: Session, now_ms: int) -> None:
        sess.pending_move_due_ms = None
        self._broadcast_move(out, sess, now_ms)

    def _broadcast_move(self, out: TurnOutput, sess: Session, now_ms: int) -> None:
        room = self.rooms[sess.room_id]
        pos = room.users[sess.user_id].position
        moved = wire.UserMoved(user_id=sess.user_id, x=pos.x, y=pos.y)
        for sid in self._member_sessions(sess.room_id):
            out.sends.append((sid, moved))
        sess.last_move_broadcast_ms = now_ms

    def _on_speak(self, out: TurnOutput, sess: Session, msg: wire.Speak, now_ms: int) -> None:
        if sess.last_speak_seq is not None and msg.seq <= sess.last_speak_seq:
            self._bad_message(
                out, sess, f"seq must increase (got {msg.seq} after {sess.last_speak_seq})"
            )
            return
        sess.bad_streak = 0
        sess.last_speak_seq = msg.seq
        room = self.rooms[sess.room_id]
        started = time.perf_counter_ns()
        recipients = self._recipients(room, sess.user_id)
        self.routing_ns.append(time.perf_counter_ns() - started)
        frame = wire.Audio(speaker_id=sess.user_id, seq=msg.seq, payload=msg.payload)
        for uid in sorted(recipients):
            sid = self._session_by_user.get((sess.room_id, uid))
            if sid is not None:
                out.sends.append((sid, frame))
        self._log(now_ms, sess.room_id, "speak", sess.user_id, "ok")

    def _on_enter(self, out: TurnOutput, sess: Session, msg: wire.EnterChannel, now_ms: int) -> None:
        room = self.rooms[sess.room_id]
        try:
            effect = room.enter_channel(sess.user_id, msg.channel)
        except core.InvalidChannel as exc:
            self._error(out, sess, wire.ErrorCode.INVALID_CHANNEL, str(exc))
            self._log(now_ms, sess.room_id, "enter_channel", sess.user_id, "INVALID_CHANNEL")
            return
        sess.bad_streak = 0
        self._send_ack(out, sess, effect)
        self._log(now_ms, sess.room_id, "enter_channel", sess.user_id, "ok")

    def _on_exit(self, out: TurnOutput, sess: Session, now_ms: int) -> None:
        room = self.rooms[sess.room_id]
        try:
            effect = room.exit_channel(sess.user_id)
        except core.NotInChannel as exc:
            self._error(out, sess, wire.ErrorCode.NOT_IN_CHANNEL, str(exc))
            self._log(now_ms, sess.room_id, "exit_channel", sess.user_id, "NOT_IN_CHANNEL")
            return
        sess.bad_streak = 0
        self._send_ack(out, sess, effect)
        self._log(now_ms, sess.room_id, "exit_channel", sess.user_id, "ok")

    # -- seams kept overridable for fault-injected variants (mutation testing) --

    def _recipients(self, room: core.RoomState, speaker_id: str) -> set[str]:
        return core.compute_recipients(room, speaker_id)

    def _ack_sessions(self, sess: Session) -> list[str]:
        return [sess.session_id]

    def _room_state_msg(self, room: core.RoomState, observer_id: str) -> wire.WireMessage:
        view = core.observable_view(room, observer_id)
        entries = tuple(
            wire.RosterEntry(u.user_id, u.display_name, u.x, u.y) for u in view.users
        )
        return wire.RoomStateMsg(users=entries)

    # -- plumbing ---------------------------------------------------------------

    def _send_ack(self, out: TurnOutput, sess: Session, effect: core.EffectEvent) -> None:
        ack = wire.ChannelAck(channel=effect.channel, effect=effect.kind)
        for sid in self._ack_sessions(sess):
            out.sends.append((sid, ack))

    def _member_sessions(self, room_id: str) -> list[str]:
        room = self.rooms[room_id]
        out = []
        for uid in sorted(room.users):
            sid = self._session_by_user.get((room_id, uid))
            if sid is not None:
                out.append(sid)
        return out

    def _session(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise ValueError(f"unknown session {session_id!r}") from None

    def _error(self, out: TurnOutput, sess: Session, code: wire.ErrorCode, message: str) -> None:
        if code is not wire.ErrorCode.BAD_MESSAGE:
            sess.bad_streak = 0
        out.sends.append((sess.session_id, wire.ErrorMsg(code=code, message=message)))

    def _bad_message(self, out: TurnOutput, sess: Session, reason: str) -> None:
        sess.bad_streak += 1
        out.sends.append(
            (sess.session_id, wire.ErrorMsg(code=wire.ErrorCode.BAD_MESSAGE, message=reason))
        )
        if sess.bad_streak >= BAD_MESSAGE_DISCONNECT_STREAK:
            out.closes.append(sess.session_id)

    def _log(self, now_ms: int, room: str | None, op: str, actor: str | None, outcome: str) -> None:
        # Deliberately no channel numbers here: log lines may be shipped.
        self._on_event({"time": now_ms, "room": room, "op": op, "actor": actor, "outcome": outcome})
