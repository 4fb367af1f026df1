"""Authoritative single-room state machine: membership, positions, voice routing.

Routing rules:
  * a speaker in a private channel is heard by the channel's other members,
    regardless of distance;
  * a speaker in the public space is heard by everyone within hearing radius,
    regardless of whether those listeners sit in a private channel themselves.

Channel membership is never exposed outside the acting user: see
``observable_view`` and the effect events returned by enter/exit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

PUBLIC = None  # voice state of a user in the shared public space


class RoomError(Exception):
    """Base class for room state machine violations.

    ``code`` is the stable wire-level error identifier for the violation.
    """

    code = "BAD_MESSAGE"


class RoomFull(RoomError):
    code = "ROOM_FULL"


class UnknownUser(RoomError):
    code = "BAD_MESSAGE"


class InvalidChannel(RoomError):
    code = "INVALID_CHANNEL"


class NotInChannel(RoomError):
    code = "NOT_IN_CHANNEL"


class NonFiniteCoordinate(RoomError):
    code = "BAD_MESSAGE"


@dataclass(frozen=True)
class Position:
    """A point on the room's 2D plane, in meters. Coordinates must be finite."""

    x: float
    y: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise NonFiniteCoordinate(f"non-finite coordinate ({self.x}, {self.y})")

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class RoomConfig:
    """Per-room knobs. Defaults: 7 channels, 10 participants, 25 m hearing radius."""

    num_channels: int = 7
    max_users: int = 10
    hearing_radius: float = 25.0
    spawn: Position = Position(0.0, 0.0)

    def __post_init__(self) -> None:
        if self.num_channels < 1:
            raise ValueError("num_channels must be >= 1")
        if self.max_users < 2:
            raise ValueError("max_users must be >= 2")
        if not (self.hearing_radius > 0 and math.isfinite(self.hearing_radius)):
            raise ValueError("hearing_radius must be finite and > 0")


@dataclass
class UserRecord:
    """One participant. ``channel`` is None in the public space (PUBLIC)."""

    user_id: str
    display_name: str
    position: Position
    channel: int | None = PUBLIC


@dataclass(frozen=True)
class EffectEvent:
    """Join/leave/switch feedback, addressed to the acting user and nobody else."""

    actor: str
    kind: str  # "join" | "leave" | "switch"
    channel: int | None = None


@dataclass(frozen=True)
class AudioFrame:
    """One opaque speech payload. ``seq`` strictly increases per speaker."""

    speaker: str
    seq: int
    payload: bytes


@dataclass(frozen=True)
class ViewEntry:
    user_id: str
    display_name: str
    x: float
    y: float


@dataclass(frozen=True)
class RoomView:
    """What one observer may know: everyone's position and name, own channel only."""

    observer: str
    channel: int | None
    users: tuple[ViewEntry, ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "observer": self.observer,
                "channel": self.channel,
                "users": [
                    {"user_id": u.user_id, "display_name": u.display_name, "x": u.x, "y": u.y}
                    for u in self.users
                ],
            },
            sort_keys=True,
            separators=(",", ":"),
        )


class RoomState:
    """Authoritative state of one world instance.

    All mutation goes through add_user / remove_user / enter_channel /
    exit_channel / move; callers apply those in a single serialized order.
    """

    def __init__(self, config: RoomConfig | None = None):
        self.config = config or RoomConfig()
        self.users: dict[str, UserRecord] = {}
        self._next_uid = 1

    def _user(self, user_id: str) -> UserRecord:
        try:
            return self.users[user_id]
        except KeyError:
            raise UnknownUser(f"no such user {user_id!r}") from None

    def add_user(self, display_name: str) -> str:
        """Admit a new participant in the public space; returns the assigned id."""
        if not display_name:
            raise ValueError("display_name must be non-empty")
        if len(self.users) >= self.config.max_users:
            raise RoomFull(f"room is at capacity ({self.config.max_users})")
        user_id = f"u{self._next_uid}"
        self._next_uid += 1
        self.users[user_id] = UserRecord(user_id, display_name, self.config.spawn)
        return user_id

    def remove_user(self, user_id: str) -> None:
        self._user(user_id)
        del self.users[user_id]

    def enter_channel(self, user_id: str, channel: int) -> EffectEvent:
        """Join a private channel. Switching channels and re-entry are both legal.

        Re-entering the current channel is a no-op acknowledged with a join
        effect; coming from another channel is an atomic switch.
        """
        user = self._user(user_id)
        if not 1 <= channel <= self.config.num_channels:
            raise InvalidChannel(
                f"channel {channel} out of range 1..{self.config.num_channels}"
            )
        if user.channel == channel:
            return EffectEvent(user_id, "join", channel)
        kind = "join" if user.channel is PUBLIC else "switch"
        user.channel = channel
        return EffectEvent(user_id, kind, channel)

    def exit_channel(self, user_id: str) -> EffectEvent:
        """Return to the public space."""
        user = self._user(user_id)
        if user.channel is PUBLIC:
            raise NotInChannel(f"user {user_id!r} is not in a channel")
        user.channel = PUBLIC
        return EffectEvent(user_id, "leave", None)

    def move(self, user_id: str, to: Position) -> None:
        """Update a participant's position; voice state is untouched."""
        user = self._user(user_id)
        if not (math.isfinite(to.x) and math.isfinite(to.y)):
            raise NonFiniteCoordinate(f"non-finite coordinate ({to.x}, {to.y})")
        user.position = to


def compute_recipients(state: RoomState, speaker: str) -> set[str]:
    """The exact set of users to whom one frame from ``speaker`` is delivered.

    Pure function of the room state; the speaker is never included.
    """
    sp = state._user(speaker)
    recipients: set[str] = set()
    if sp.channel is not PUBLIC:
        for uid, user in state.users.items():
            if uid != speaker and user.channel == sp.channel:
                recipients.add(uid)
    else:
        radius = state.config.hearing_radius
        for uid, user in state.users.items():
            if uid != speaker and user.position.distance_to(sp.position) <= radius:
                recipients.add(uid)
    return recipients


def observable_view(state: RoomState, observer: str) -> RoomView:
    """The room as ``observer`` may see it: positions and names for everyone,
    voice state for the observer alone. Pure function of the room state."""
    own = state._user(observer)
    entries = tuple(
        ViewEntry(u.user_id, u.display_name, u.position.x, u.position.y)
        for u in sorted(state.users.values(), key=lambda u: u.user_id)
    )
    return RoomView(observer=observer, channel=own.channel, users=entries)
