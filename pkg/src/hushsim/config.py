"""Relay server configuration: a TOML file with a listen address and one table
per room. Absent file means built-in defaults (one room "main", 7 channels,
10 participants, 25 m hearing radius).

    listen = "127.0.0.1:8765"
    log_level = "info"

    [[rooms]]
    room_id = "main"
    num_channels = 7
    max_users = 10
    hearing_radius = 25.0
    spawn = [0.0, 0.0]
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from hushsim import core

DEFAULT_LISTEN = "127.0.0.1:8765"
_TOP_KEYS = {"listen", "log_level", "rooms"}
_ROOM_KEYS = {"room_id", "num_channels", "max_users", "hearing_radius", "spawn"}
_LOG_LEVELS = {"debug", "info", "warning", "error"}


class ConfigInvalid(Exception):
    """Bad configuration; the message names the offending field."""


@dataclass(frozen=True)
class RoomSpec:
    room_id: str
    config: core.RoomConfig


@dataclass(frozen=True)
class ServerConfig:
    listen: str = DEFAULT_LISTEN
    log_level: str = "info"
    rooms: tuple[RoomSpec, ...] = field(
        default_factory=lambda: (RoomSpec("main", core.RoomConfig()),)
    )


def split_listen(listen: str) -> tuple[str, int]:
    """Validate and split an addr:port string."""
    host, sep, port_text = listen.rpartition(":")
    if not sep or not host:
        raise ConfigInvalid(f"listen: expected host:port, got {listen!r}")
    try:
        port = int(port_text)
    except ValueError:
        raise ConfigInvalid(f"listen: port must be an integer, got {port_text!r}") from None
    if not 0 <= port <= 65535:
        raise ConfigInvalid(f"listen: port {port} out of range")
    return host, port


def _int_field(table: dict, key: str, where: str, default: int, minimum: int) -> int:
    value = table.get(key, default)
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigInvalid(f"{where}.{key}: must be an integer")
    if value < minimum:
        raise ConfigInvalid(f"{where}.{key}: must be >= {minimum}")
    return value


def _room_spec(table: dict, index: int) -> RoomSpec:
    where = f"rooms[{index}]"
    if not isinstance(table, dict):
        raise ConfigInvalid(f"{where}: must be a table")
    for key in table:
        if key not in _ROOM_KEYS:
            raise ConfigInvalid(f"{where}: unknown key {key!r}")
    room_id = table.get("room_id", "main")
    if not isinstance(room_id, str) or not room_id:
        raise ConfigInvalid(f"{where}.room_id: must be a non-empty string")
    radius = table.get("hearing_radius", 25.0)
    if isinstance(radius, bool) or not isinstance(radius, (int, float)) or radius <= 0:
        raise ConfigInvalid(f"{where}.hearing_radius: must be a number > 0")
    spawn = table.get("spawn", [0.0, 0.0])
    if (
        not isinstance(spawn, list)
        or len(spawn) != 2
        or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in spawn)
    ):
        raise ConfigInvalid(f"{where}.spawn: must be [x, y]")
    try:
        room_config = core.RoomConfig(
            num_channels=_int_field(table, "num_channels", where, 7, 1),
            max_users=_int_field(table, "max_users", where, 10, 2),
            hearing_radius=float(radius),
            spawn=core.Position(float(spawn[0]), float(spawn[1])),
        )
    except (ValueError, core.RoomError) as exc:
        raise ConfigInvalid(f"{where}: {exc}") from None
    return RoomSpec(room_id=room_id, config=room_config)


def load_config(path: str | None = None) -> ServerConfig:
    """Load a server config; an absent file yields the defaults."""
    if path is None or not os.path.exists(path):
        return ServerConfig()
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigInvalid(f"{path}: {exc}") from None

    for key in data:
        if key not in _TOP_KEYS:
            raise ConfigInvalid(f"unknown key {key!r}")

    listen = data.get("listen", DEFAULT_LISTEN)
    if not isinstance(listen, str):
        raise ConfigInvalid("listen: must be a string")
    split_listen(listen)

    log_level = data.get("log_level", "info")
    if log_level not in _LOG_LEVELS:
        raise ConfigInvalid(f"log_level: must be one of {sorted(_LOG_LEVELS)}")

    rooms_data = data.get("rooms", None)
    if rooms_data is None:
        rooms = (RoomSpec("main", core.RoomConfig()),)
    else:
        if not isinstance(rooms_data, list) or not rooms_data:
            raise ConfigInvalid("rooms: must be a non-empty array of tables")
        rooms = tuple(_room_spec(t, i) for i, t in enumerate(rooms_data))
        seen: set[str] = set()
        for spec in rooms:
            if spec.room_id in seen:
                raise ConfigInvalid(f"rooms: duplicate room_id {spec.room_id!r}")
            seen.add(spec.room_id)

    return ServerConfig(listen=listen, log_level=log_level, rooms=rooms)
