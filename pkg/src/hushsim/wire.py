"""Wire protocol: the framed JSON message vocabulary shared by server, harness,
and clients.

One message per transport text frame (reference binding: WebSocket text frames,
UTF-8, one JSON object per frame). Decoding is strict: unknown types, missing
fields, extra fields, wrong scalar kinds, duplicate keys, and trailing garbage
are all rejected with ``WireError``; ``decode`` never raises anything else.

Roster-bearing server messages (ROOM_STATE, USER_JOINED, USER_MOVED) carry no
channel field by construction, and AUDIO carries only speaker id, sequence
number, and payload: a listener cannot tell nearby public speech from
same-channel private speech by frame metadata.
"""

from __future__ import annotations

import base64
import binascii
import json
import math
from dataclasses import dataclass, fields
from enum import Enum
from typing import Any, Callable, ClassVar

PROTO_VERSION = 1
MAX_PAYLOAD_BYTES = 64 * 1024
MAX_FRAME_BYTES = 256 * 1024
# Keep integers inside the range every mainstream JSON implementation
# round-trips exactly.
_MAX_INT = 2**53

EFFECTS = ("join", "leave", "switch")


class ErrorCode(str, Enum):
    INVALID_CHANNEL = "INVALID_CHANNEL"
    NOT_IN_CHANNEL = "NOT_IN_CHANNEL"
    ROOM_FULL = "ROOM_FULL"
    UNKNOWN_ROOM = "UNKNOWN_ROOM"
    BAD_MESSAGE = "BAD_MESSAGE"
    PROTOCOL_VERSION = "PROTOCOL_VERSION"


class WireError(ValueError):
    """A malformed frame. The message is a human-readable reason."""


# ---------------------------------------------------------------------------
# Message vocabulary


@dataclass(frozen=True)
class Hello:
    TYPE: ClassVar[str] = "HELLO"
    proto_version: int
    display_name: str


@dataclass(frozen=True)
class JoinRoom:
    TYPE: ClassVar[str] = "JOIN_ROOM"
    room_id: str


@dataclass(frozen=True)
class Move:
    TYPE: ClassVar[str] = "MOVE"
    x: float
    y: float


@dataclass(frozen=True)
class Speak:
    TYPE: ClassVar[str] = "SPEAK"
    seq: int
    payload: bytes


@dataclass(frozen=True)
class EnterChannel:
    TYPE: ClassVar[str] = "ENTER_CHANNEL"
    channel: int


@dataclass(frozen=True)
class ExitChannel:
    TYPE: ClassVar[str] = "EXIT_CHANNEL"


@dataclass(frozen=True)
class Ping:
    TYPE: ClassVar[str] = "PING"
    nonce: int


@dataclass(frozen=True)
class RoomConfigInfo:
    num_channels: int
    max_users: int
    hearing_radius: float


@dataclass(frozen=True)
class Welcome:
    TYPE: ClassVar[str] = "WELCOME"
    user_id: str
    room_config: RoomConfigInfo


@dataclass(frozen=True)
class RosterEntry:
    user_id: str
    display_name: str
    x: float
    y: float


@dataclass(frozen=True)
class RoomStateMsg:
    TYPE: ClassVar[str] = "ROOM_STATE"
    users: tuple[RosterEntry, ...]


@dataclass(frozen=True)
class UserJoined:
    TYPE: ClassVar[str] = "USER_JOINED"
    user_id: str
    display_name: str
    x: float
    y: float


@dataclass(frozen=True)
class UserLeft:
    TYPE: ClassVar[str] = "USER_LEFT"
    user_id: str


@dataclass(frozen=True)
class UserMoved:
    TYPE: ClassVar[str] = "USER_MOVED"
    user_id: str
    x: float
    y: float


@dataclass(frozen=True)
class Audio:
    TYPE: ClassVar[str] = "AUDIO"
    speaker_id: str
    seq: int
    payload: bytes


@dataclass(frozen=True)
class ChannelAck:
    """Sent to the acting session only; the sole carrier of own-channel state."""

    TYPE: ClassVar[str] = "CHANNEL_ACK"
    channel: int | None
    effect: str  # "join" | "leave" | "switch"


@dataclass(frozen=True)
class ErrorMsg:
    TYPE: ClassVar[str] = "ERROR"
    code: ErrorCode
    message: str


@dataclass(frozen=True)
class Pong:
    TYPE: ClassVar[str] = "PONG"
    nonce: int


WireMessage = (
    Hello
    | JoinRoom
    | Move
    | Speak
    | EnterChannel
    | ExitChannel
    | Ping
    | Welcome
    | RoomStateMsg
    | UserJoined
    | UserLeft
    | UserMoved
    | Audio
    | ChannelAck
    | ErrorMsg
    | Pong
)

CLIENT_TYPES = ("HELLO", "JOIN_ROOM", "MOVE", "SPEAK", "ENTER_CHANNEL", "EXIT_CHANNEL", "PING")
SERVER_TYPES = (
    "WELCOME",
    "ROOM_STATE",
    "USER_JOINED",
    "USER_LEFT",
    "USER_MOVED",
    "AUDIO",
    "CHANNEL_ACK",
    "ERROR",
    "PONG",
)


# ---------------------------------------------------------------------------
# Field parsers (strict: wrong scalar kinds always rejected)


def _parse_int(value: Any, what: str, minimum: int | None = None) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise WireError(f"{what} must be an integer")
    if abs(value) > _MAX_INT:
        raise WireError(f"{what} out of range")
    if minimum is not None and value < minimum:
        raise WireError(f"{what} must be >= {minimum}")
    return value


def _parse_number(value: Any, what: str, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise WireError(f"{what} must be a number")
    out = float(value)
    if not math.isfinite(out):
        raise WireError(f"{what} must be finite")
    if positive and out <= 0:
        raise WireError(f"{what} must be > 0")
    return out


def _parse_str(value: Any, what: str, max_len: int, min_len: int = 1) -> str:
    if not isinstance(value, str):
        raise WireError(f"{what} must be a string")
    if not min_len <= len(value) <= max_len:
        raise WireError(f"{what} length must be {min_len}..{max_len}")
    return value


def _parse_payload(value: Any, what: str = "payload") -> bytes:
    if not isinstance(value, str):
        raise WireError(f"{what} must be base64 text")
    try:
        raw = base64.b64decode(value, validate=True)
    except (binascii.Error, ValueError):
        raise WireError(f"{what} is not valid base64") from None
    if len(raw) > MAX_PAYLOAD_BYTES:
        raise WireError(f"{what} exceeds {MAX_PAYLOAD_BYTES} bytes")
    return raw


def _parse_channel_or_null(value: Any, what: str) -> int | None:
    if value is None:
        return None
    return _parse_int(value, what)


def _parse_effect(value: Any, what: str) -> str:
    if value not in EFFECTS:
        raise WireError(f"{what} must be one of {EFFECTS}")
    return value


def _parse_error_code(value: Any, what: str) -> ErrorCode:
    if not isinstance(value, str):
        raise WireError(f"{what} must be a string")
    try:
        return ErrorCode(value)
    except ValueError:
        raise WireError(f"unknown error code {value!r}") from None


def _parse_room_config(value: Any, what: str) -> RoomConfigInfo:
    obj = _require_object(value, what, ("num_channels", "max_users", "hearing_radius"))
    return RoomConfigInfo(
        num_channels=_parse_int(obj["num_channels"], f"{what}.num_channels", minimum=1),
        max_users=_parse_int(obj["max_users"], f"{what}.max_users", minimum=2),
        hearing_radius=_parse_number(obj["hearing_radius"], f"{what}.hearing_radius", positive=True),
    )


def _parse_roster(value: Any, what: str) -> tuple[RosterEntry, ...]:
    if not isinstance(value, list):
        raise WireError(f"{what} must be a list")
    entries = []
    for i, item in enumerate(value):
        obj = _require_object(item, f"{what}[{i}]", ("user_id", "display_name", "x", "y"))
        entries.append(
            RosterEntry(
                user_id=_parse_str(obj["user_id"], f"{what}[{i}].user_id", 64),
                display_name=_parse_str(obj["display_name"], f"{what}[{i}].display_name", 64),
                x=_parse_number(obj["x"], f"{what}[{i}].x"),
                y=_parse_number(obj["y"], f"{what}[{i}].y"),
            )
        )
    return tuple(entries)


def _require_object(value: Any, what: str, keys: tuple[str, ...]) -> dict:
    if not isinstance(value, dict):
        raise WireError(f"{what} must be an object")
    missing = [k for k in keys if k not in value]
    if missing:
        raise WireError(f"{what} missing field {missing[0]!r}")
    extra = [k for k in value if k not in keys]
    if extra:
        raise WireError(f"{what} has unknown field {extra[0]!r}")
    return value


_Parser = Callable[[Any, str], Any]

_FIELD_PARSERS: dict[str, dict[str, _Parser]] = {
    "HELLO": {
        "proto_version": lambda v, w: _parse_int(v, w),
        "display_name": lambda v, w: _parse_str(v, w, 64),
    },
    "JOIN_ROOM": {"room_id": lambda v, w: _parse_str(v, w, 128)},
    "MOVE": {"x": _parse_number, "y": _parse_number},
    "SPEAK": {"seq": lambda v, w: _parse_int(v, w, minimum=0), "payload": _parse_payload},
    "ENTER_CHANNEL": {"channel": lambda v, w: _parse_int(v, w)},
    "EXIT_CHANNEL": {},
    "PING": {"nonce": lambda v, w: _parse_int(v, w)},
    "WELCOME": {
        "user_id": lambda v, w: _parse_str(v, w, 64),
        "room_config": _parse_room_config,
    },
    "ROOM_STATE": {"users": _parse_roster},
    "USER_JOINED": {
        "user_id": lambda v, w: _parse_str(v, w, 64),
        "display_name": lambda v, w: _parse_str(v, w, 64),
        "x": _parse_number,
        "y": _parse_number,
    },
    "USER_LEFT": {"user_id": lambda v, w: _parse_str(v, w, 64)},
    "USER_MOVED": {
        "user_id": lambda v, w: _parse_str(v, w, 64),
        "x": _parse_number,
        "y": _parse_number,
    },
    "AUDIO": {
        "speaker_id": lambda v, w: _parse_str(v, w, 64),
        "seq": lambda v, w: _parse_int(v, w, minimum=0),
        "payload": _parse_payload,
    },
    "CHANNEL_ACK": {"channel": _parse_channel_or_null, "effect": _parse_effect},
    "ERROR": {
        "code": _parse_error_code,
        "message": lambda v, w: _parse_str(v, w, 1024, min_len=0),
    },
    "PONG": {"nonce": lambda v, w: _parse_int(v, w)},
}

_CLASSES: dict[str, type] = {
    cls.TYPE: cls
    for cls in (
        Hello,
        JoinRoom,
        Move,
        Speak,
        EnterChannel,
        ExitChannel,
        Ping,
        Welcome,
        RoomStateMsg,
        UserJoined,
        UserLeft,
        UserMoved,
        Audio,
        ChannelAck,
        ErrorMsg,
        Pong,
    )
}


# ---------------------------------------------------------------------------
# Encode / decode


def _field_to_json(value: Any) -> Any:
    if isinstance(value, bytes):
        return base64.b64encode(value).decode("ascii")
    if isinstance(value, ErrorCode):
        return value.value
    if isinstance(value, RoomConfigInfo):
        return {
            "num_channels": value.num_channels,
            "max_users": value.max_users,
            "hearing_radius": value.hearing_radius,
        }
    if isinstance(value, tuple):
        return [_field_to_json(v) for v in value]
    if isinstance(value, RosterEntry):
        return {
            "user_id": value.user_id,
            "display_name": value.display_name,
            "x": value.x,
            "y": value.y,
        }
    return value


def to_dict(msg: WireMessage) -> dict:
    """The frame object for ``msg``, with the ``type`` discriminator first."""
    out: dict[str, Any] = {"type": msg.TYPE}
    for f in fields(msg):
        out[f.name] = _field_to_json(getattr(msg, f.name))
    return out


def encode(msg: WireMessage) -> str:
    """Serialize one message as one UTF-8 text frame."""
    return json.dumps(to_dict(msg), separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def _reject_constant(_name: str) -> Any:
    raise WireError("non-finite numbers are not allowed")


def _object_no_duplicates(pairs: list[tuple[str, Any]]) -> dict:
    obj: dict[str, Any] = {}
    for key, value in pairs:
        if key in obj:
            raise WireError(f"duplicate key {key!r}")
        obj[key] = value
    return obj


def from_dict(obj: Any) -> WireMessage:
    """Validate a frame object and build the typed message. Strict."""
    if not isinstance(obj, dict):
        raise WireError("frame must be a JSON object")
    msg_type = obj.get("type")
    if not isinstance(msg_type, str):
        raise WireError("frame has no string 'type' field")
    parsers = _FIELD_PARSERS.get(msg_type)
    if parsers is None:
        raise WireError(f"unknown message type {msg_type!r}")
    expected = set(parsers) | {"type"}
    for key in obj:
        if key not in expected:
            raise WireError(f"{msg_type} has unknown field {key!r}")
    values = {}
    for name, parser in parsers.items():
        if name not in obj:
            raise WireError(f"{msg_type} missing field {name!r}")
        values[name] = parser(obj[name], f"{msg_type}.{name}")
    if msg_type == "CHANNEL_ACK":
        # leave acks carry no channel; join/switch acks always do
        if (values["effect"] == "leave") != (values["channel"] is None):
            raise WireError("CHANNEL_ACK channel/effect mismatch")
    return _CLASSES[msg_type](**values)


def decode(frame: str | bytes) -> WireMessage:
    """Parse one frame. Total: raises WireError on any malformed input."""
    if isinstance(frame, (bytes, bytearray)):
        if len(frame) > MAX_FRAME_BYTES:
            raise WireError("frame too large")
        try:
            frame = bytes(frame).decode("utf-8")
        except UnicodeDecodeError:
            raise WireError("frame is not valid UTF-8") from None
    elif isinstance(frame, str):
        if len(frame) > MAX_FRAME_BYTES:
            raise WireError("frame too large")
    else:
        raise WireError("frame must be text or bytes")
    try:
        obj = json.loads(
            frame,
            parse_constant=_reject_constant,
            object_pairs_hook=_object_no_duplicates,
        )
    except WireError:
        raise
    except (ValueError, RecursionError) as exc:
        raise WireError(f"frame is not valid JSON: {exc}") from None
    return from_dict(obj)
