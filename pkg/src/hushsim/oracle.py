"""Brute-force audibility oracle, independent of the room state machine.

Re-derives who hears a spoken frame from first principles, by enumerating
every listener against the two routing rules. Operates on a plain dict
state description and deliberately shares no code with ``hushsim.core``;
it exists to catch that module lying.

State description format (also accepted from JSON via the CLI):

    {
      "hearing_radius": 25.0,
      "users": [
        {"name": "A", "x": 0.0, "y": 0.0, "channel": 3},
        {"name": "C", "x": 10.0, "y": 0.0, "channel": null}
      ]
    }

``channel`` null or missing means the user is in the public space.
"""

from __future__ import annotations


def oracle_recipients(state: dict, speaker: str) -> set[str]:
    """Everyone who hears one frame from ``speaker``, recomputed by brute force."""
    users = {u["name"]: u for u in state["users"]}
    if speaker not in users:
        raise KeyError(f"speaker {speaker!r} not in state description")
    radius = float(state.get("hearing_radius", 25.0))
    sp = users[speaker]
    sp_channel = sp.get("channel")

    heard_by: set[str] = set()
    for name, listener in users.items():
        if name == speaker:
            continue  # nobody hears themselves
        if sp_channel is not None:
            # Private speech: channel co-members only, at any distance.
            if listener.get("channel") == sp_channel:
                heard_by.add(name)
        else:
            # Public speech: a hard cutoff at the hearing radius, closed boundary.
            # Deliberately compared in squared space, unlike the routing path.
            dx = float(listener["x"]) - float(sp["x"])
            dy = float(listener["y"]) - float(sp["y"])
            if dx * dx + dy * dy <= radius * radius:
                heard_by.add(name)
    return heard_by


def describe_users(users: list[dict], hearing_radius: float = 25.0) -> dict:
    """Convenience constructor for a state description."""
    return {"hearing_radius": hearing_radius, "users": users}
