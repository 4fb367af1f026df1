"""Room state machine: transitions, routing rules, and redacted views."""

import copy

import pytest
from hypothesis import given, strategies as st

from hushsim import core


def make_room(names, config=None):
    room = core.RoomState(config or core.RoomConfig())
    return room, {name: room.add_user(name) for name in names}


def place(room, uid, x, y, channel=None):
    room.move(uid, core.Position(x, y))
    if channel is not None:
        room.enter_channel(uid, channel)


# -- admission ---------------------------------------------------------------


def test_add_user_starts_public_at_spawn():
    room = core.RoomState()
    uid = room.add_user("ann")
    user = room.users[uid]
    assert user.channel is core.PUBLIC
    assert (user.position.x, user.position.y) == (0.0, 0.0)


def test_add_user_rejects_when_full():
    room = core.RoomState()
    for i in range(10):
        room.add_user(f"user{i}")
    with pytest.raises(core.RoomFull):
        room.add_user("eleventh")
    assert len(room.users) == 10


def test_all_new_users_are_public():
    room, uids = make_room(["ann", "bob", "cam"])
    assert all(room.users[uid].channel is core.PUBLIC for uid in uids.values())


def test_user_ids_unique_and_stable():
    room, uids = make_room(["ann", "bob"])
    assert len(set(uids.values())) == 2
    room.remove_user(uids["ann"])
    third = room.add_user("cam")
    assert third not in uids.values()


def test_remove_unknown_user():
    room = core.RoomState()
    with pytest.raises(core.UnknownUser):
        room.remove_user("u99")


# -- channel transitions -----------------------------------------------------


def test_enter_channel_from_public_is_join():
    room, uids = make_room(["ann"])
    event = room.enter_channel(uids["ann"], 3)
    assert event == core.EffectEvent(uids["ann"], "join", 3)
    assert room.users[uids["ann"]].channel == 3


def test_reenter_same_channel_is_idempotent_join():
    room, uids = make_room(["ann"])
    room.enter_channel(uids["ann"], 3)
    event = room.enter_channel(uids["ann"], 3)
    assert event.kind == "join" and event.channel == 3
    assert room.users[uids["ann"]].channel == 3


def test_enter_out_of_range_channel():
    room, uids = make_room(["ann"])
    for bad in (0, 8, 9, -1):
        with pytest.raises(core.InvalidChannel):
            room.enter_channel(uids["ann"], bad)
    assert room.users[uids["ann"]].channel is core.PUBLIC


def test_enter_other_channel_is_atomic_switch():
    room, uids = make_room(["ann"])
    room.enter_channel(uids["ann"], 3)
    event = room.enter_channel(uids["ann"], 5)
    assert event == core.EffectEvent(uids["ann"], "switch", 5)
    assert room.users[uids["ann"]].channel == 5


def test_enter_does_not_touch_other_users():
    room, uids = make_room(["ann", "bob"])
    before = copy.deepcopy(room.users[uids["bob"]])
    room.enter_channel(uids["ann"], 2)
    assert room.users[uids["bob"]] == before


def test_exit_returns_to_public():
    room, uids = make_room(["ann"])
    room.enter_channel(uids["ann"], 3)
    event = room.exit_channel(uids["ann"])
    assert event == core.EffectEvent(uids["ann"], "leave", None)
    assert room.users[uids["ann"]].channel is core.PUBLIC


def test_exit_while_public_rejected():
    room, uids = make_room(["ann"])
    with pytest.raises(core.NotInChannel):
        room.exit_channel(uids["ann"])


def test_enter_exit_enter_composes():
    room, uids = make_room(["ann"])
    room.enter_channel(uids["ann"], 3)
    room.exit_channel(uids["ann"])
    room.enter_channel(uids["ann"], 3)
    assert room.users[uids["ann"]].channel == 3


# -- movement ----------------------------------------------------------------


def test_move_updates_position():
    room, uids = make_room(["ann"])
    room.move(uids["ann"], core.Position(12.0, -3.5))
    pos = room.users[uids["ann"]].position
    assert (pos.x, pos.y) == (12.0, -3.5)


def test_move_keeps_voice_state():
    room, uids = make_room(["ann"])
    room.enter_channel(uids["ann"], 3)
    room.move(uids["ann"], core.Position(50.0, 50.0))
    assert room.users[uids["ann"]].channel == 3


def test_non_finite_coordinates_rejected():
    for bad in (float("nan"), float("inf"), float("-inf")):
        with pytest.raises(core.NonFiniteCoordinate):
            core.Position(bad, 0.0)
        with pytest.raises(core.NonFiniteCoordinate):
            core.Position(0.0, bad)


# -- recipient computation ---------------------------------------------------


def test_public_room_everyone_in_range_hears():
    room, uids = make_room(["ann", "bob", "cam", "dee"])
    got = core.compute_recipients(room, uids["ann"])
    assert got == {uids["bob"], uids["cam"], uids["dee"]}


def test_private_speech_reaches_co_members_only():
    room, uids = make_room(["ann", "bob", "cam", "dee"])
    place(room, uids["ann"], 0, 0, channel=3)
    place(room, uids["bob"], 1, 0, channel=3)
    place(room, uids["cam"], 2, 0)
    place(room, uids["dee"], 3, 0, channel=5)
    assert core.compute_recipients(room, uids["ann"]) == {uids["bob"]}


def test_public_speech_reaches_private_members_in_range():
    room, uids = make_room(["cam", "ann", "dee", "bob"])
    place(room, uids["cam"], 0, 0)
    place(room, uids["ann"], 10, 0, channel=3)
    place(room, uids["dee"], 0, 10)
    place(room, uids["bob"], 60, 0, channel=3)
    assert core.compute_recipients(room, uids["cam"]) == {uids["ann"], uids["dee"]}


def test_private_speech_ignores_distance():
    room, uids = make_room(["ann", "bob"])
    place(room, uids["ann"], 0, 0, channel=3)
    place(room, uids["bob"], 1000, 0, channel=3)
    assert core.compute_recipients(room, uids["ann"]) == {uids["bob"]}
    assert core.compute_recipients(room, uids["bob"]) == {uids["ann"]}


def test_hearing_boundary_is_closed():
    room, uids = make_room(["ann", "bob", "cam", "dee"])
    place(room, uids["ann"], 0, 0)
    place(room, uids["bob"], 25, 0)  # exactly at the cutoff: audible
    place(room, uids["cam"], 7, 24)  # 7-24-25 triangle: exactly at the cutoff
    place(room, uids["dee"], 25.000001, 0)  # just past: silent
    assert core.compute_recipients(room, uids["ann"]) == {uids["bob"], uids["cam"]}


def test_recipients_unknown_speaker():
    room, _ = make_room(["ann"])
    with pytest.raises(core.UnknownUser):
        core.compute_recipients(room, "u99")


# -- redacted views ----------------------------------------------------------


def test_view_shows_positions_never_other_channels():
    room, uids = make_room(["dee", "ann"])
    place(room, uids["ann"], 4, 5, channel=3)
    view = core.observable_view(room, uids["dee"])
    assert view.channel is core.PUBLIC
    entry = next(u for u in view.users if u.user_id == uids["ann"])
    assert (entry.x, entry.y) == (4.0, 5.0)
    assert not hasattr(entry, "channel")
    # Only the observer's own (public: null) channel field may appear at all.
    assert "channel" not in view.to_json().replace('"channel":null', "", 1)


def test_view_includes_own_channel():
    room, uids = make_room(["ann"])
    room.enter_channel(uids["ann"], 3)
    assert core.observable_view(room, uids["ann"]).channel == 3


def test_co_members_cannot_see_each_other():
    room, uids = make_room(["ann", "bob"])
    room.enter_channel(uids["ann"], 3)
    room.enter_channel(uids["bob"], 3)
    view = core.observable_view(room, uids["bob"])
    entry = next(u for u in view.users if u.user_id == uids["ann"])
    assert not hasattr(entry, "channel")
    assert view.to_json().count('"channel":3') == 1  # bob's own state only


# -- properties --------------------------------------------------------------

coords = st.integers(min_value=-60, max_value=60)
voice = st.one_of(st.none(), st.integers(min_value=1, max_value=7))


@st.composite
def rooms(draw, min_users=2, max_users=6):
    n = draw(st.integers(min_users, max_users))
    room = core.RoomState(core.RoomConfig())
    uids = []
    for i in range(n):
        uid = room.add_user(f"user{i}")
        room.move(uid, core.Position(float(draw(coords)), float(draw(coords))))
        channel = draw(voice)
        if channel is not None:
            room.enter_channel(uid, channel)
        uids.append(uid)
    return room, uids


@given(rooms())
def test_property_speaker_never_hears_self(room_uids):
    room, uids = room_uids
    for uid in uids:
        assert uid not in core.compute_recipients(room, uid)


@given(rooms())
def test_property_private_routing_matches_membership(room_uids):
    room, uids = room_uids
    for uid in uids:
        channel = room.users[uid].channel
        if channel is core.PUBLIC:
            continue
        members = {u for u, rec in room.users.items() if rec.channel == channel}
        assert core.compute_recipients(room, uid) == members - {uid}


@given(rooms(), st.integers(min_value=1, max_value=7))
def test_property_public_speech_unaffected_by_listener_channel(room_uids, channel):
    """Joining a channel never removes audible public speech."""
    room, uids = room_uids
    speaker, listener = uids[0], uids[1]
    if room.users[speaker].channel is not core.PUBLIC:
        room.exit_channel(speaker)
    before = listener in core.compute_recipients(room, speaker)
    room.enter_channel(listener, channel)
    assert (listener in core.compute_recipients(room, speaker)) == before
    room.exit_channel(listener)
    assert (listener in core.compute_recipients(room, speaker)) == before


@given(rooms())
def test_property_views_identical_across_other_channel_states(room_uids):
    """Another user's voice state is information-theoretically absent."""
    room, uids = room_uids
    observer, other = uids[0], uids[1]
    baseline = core.observable_view(room, observer).to_json()
    for state in (1, 4, 7, None, 2):
        if state is None:
            if room.users[other].channel is not core.PUBLIC:
                room.exit_channel(other)
        else:
            room.enter_channel(other, state)
        assert core.observable_view(room, observer).to_json() == baseline


@given(rooms())
def test_property_compute_recipients_is_pure(room_uids):
    room, uids = room_uids
    before = copy.deepcopy(room.users)
    first = core.compute_recipients(room, uids[0])
    second = core.compute_recipients(room, uids[0])
    assert first == second
    assert room.users == before


@given(rooms())
def test_property_effect_locality(room_uids):
    room, uids = room_uids
    for uid in uids:
        event = room.enter_channel(uid, 1)
        assert event.actor == uid
        event = room.exit_channel(uid)
        assert event.actor == uid
