"""Scans delivery transcripts for frames that reveal channel membership.

The privacy contract: nothing a client receives may say which channel any
other user is in, or that they are in one at all. Concretely:

* no frame carries a channel- or voice-related field, except the actor's own
  CHANNEL_ACK (and the room-wide channel count inside WELCOME's config);
* actor-addressed frames (WELCOME, ROOM_STATE, CHANNEL_ACK, ERROR, PONG)
  reach only the actor that caused them;
* AUDIO carries exactly speaker, sequence number, and payload; which channel
  carried it is not observable;
* optionally, each user's CHANNEL_ACK stream must equal the acks their own
  actions should have produced, so acks cannot echo someone else's activity.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from hushsim.scenario import DeliveryRecord, Transcript

SENSITIVE_KEY = re.compile(r"channel|voice", re.IGNORECASE)
ACTOR_ADDRESSED = {"WELCOME", "ROOM_STATE", "CHANNEL_ACK", "ERROR", "PONG"}
AUDIO_KEYS = {"type", "speaker_id", "seq", "payload"}
# (frame kind, key path) pairs that legitimately name channels.
ALLOWED_KEY_PATHS = {
    ("CHANNEL_ACK", ("channel",)),
    ("WELCOME", ("room_config", "num_channels")),
}


@dataclass(frozen=True)
class Violation:
    index: int
    reason: str

    def __str__(self) -> str:
        return f"record[{self.index}]: {self.reason}"


@dataclass
class LeakReport:
    frames_scanned: int = 0
    violations: list[Violation] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.violations


def _sensitive_paths(value: object, path: tuple[str, ...] = ()) -> list[tuple[str, ...]]:
    found: list[tuple[str, ...]] = []
    if isinstance(value, dict):
        for key, inner in value.items():
            key_path = path + (str(key),)
            if isinstance(key, str) and SENSITIVE_KEY.search(key):
                found.append(key_path)
            found.extend(_sensitive_paths(inner, key_path))
    elif isinstance(value, list):
        for inner in value:
            found.extend(_sensitive_paths(inner, path))
    return found


def leak_scan(
    transcript: Transcript | list[DeliveryRecord],
    expected_acks: dict[str, list[tuple[int | None, str]]] | None = None,
) -> LeakReport:
    """Check every delivered frame against the privacy contract.

    ``expected_acks`` maps actor name to the ordered (channel, effect) pairs
    that actor's own channel actions should have acknowledged.
    """
    records = transcript.records if isinstance(transcript, Transcript) else transcript
    report = LeakReport(frames_scanned=len(records))
    seen_acks: dict[str, list[tuple[int | None, str]]] = {}

    for i, record in enumerate(records):
        detail = record.detail
        if not isinstance(detail, dict):
            report.violations.append(Violation(i, "frame is not a JSON object"))
            continue
        kind = record.kind

        for path in _sensitive_paths(detail):
            if (kind, path) in ALLOWED_KEY_PATHS:
                continue
            dotted = ".".join(path)
            report.violations.append(
                Violation(i, f"{kind} to {record.recipient!r} carries key {dotted!r}")
            )

        if kind in ACTOR_ADDRESSED and record.recipient != record.sender:
            report.violations.append(
                Violation(
                    i,
                    f"{kind} for {record.sender!r} was delivered to {record.recipient!r}",
                )
            )

        if kind == "AUDIO" and set(detail.keys()) != AUDIO_KEYS:
            extra = sorted(set(detail.keys()) ^ AUDIO_KEYS)
            report.violations.append(
                Violation(i, f"AUDIO must carry exactly {sorted(AUDIO_KEYS)}; diff {extra}")
            )

        if kind == "CHANNEL_ACK" and expected_acks is not None:
            seen_acks.setdefault(record.recipient, []).append(
                (detail.get("channel"), detail.get("effect"))
            )

    if expected_acks is not None:
        actors = set(expected_acks) | set(seen_acks)
        for actor in sorted(actors):
            want = expected_acks.get(actor, [])
            got = seen_acks.get(actor, [])
            if want != [(c, e) for c, e in got]:
                report.violations.append(
                    Violation(
                        -1,
                        f"CHANNEL_ACK stream for {actor!r} is {got}, "
                        f"their own actions produce {want}",
                    )
                )
    return report
