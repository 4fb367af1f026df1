"""Deliberately broken router variants for exercising the harness.

Each variant re-introduces one plausible routing or privacy bug through a
single overridable seam on RelayRouter. The fuzz and leak-scan checks must
flag every one of them; a harness that stays green here proves nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

from hushsim import core, wire
from hushsim.router import RelayRouter, Session


@dataclass(frozen=True)
class RawFrame:
    """Pre-encoded frame that bypasses the strict wire vocabulary.

    Only fault-injected routers produce these; the in-process delivery path
    passes ``raw`` through unchanged so scanners see the leaked fields.
    """

    raw: dict


class ProximityGatedPrivateSpeech(RelayRouter):
    """Bug: private speech obeys the hearing radius like public speech."""

    def _recipients(self, room: core.RoomState, speaker_id: str) -> set[str]:
        hearers = super()._recipients(room, speaker_id)
        speaker = room.users[speaker_id]
        if speaker.channel is core.PUBLIC:
            return hearers
        return {
            uid
            for uid in hearers
            if room.users[uid].position.distance_to(speaker.position)
            <= room.config.hearing_radius
        }


class BroadcastChannelAck(RelayRouter):
    """Bug: channel acknowledgements go to the whole room, not the actor."""

    def _ack_sessions(self, sess: Session) -> list[str]:
        if sess.room_id is None:
            return [sess.session_id]
        return self._member_sessions(sess.room_id)


class ChannelLeakingRoomState(RelayRouter):
    """Bug: the room snapshot includes every user's channel assignment."""

    def _room_state_msg(self, room: core.RoomState, observer_id: str) -> RawFrame:
        base = wire.to_dict(super()._room_state_msg(room, observer_id))
        for entry in base["users"]:
            entry["channel"] = room.users[entry["user_id"]].channel
        return RawFrame(base)


MUTANTS = {
    "private-proximity": ProximityGatedPrivateSpeech,
    "ack-broadcast": BroadcastChannelAck,
    "roomstate-channel": ChannelLeakingRoomState,
}
