"""Scenario and transcript JSON formats: parsing, validation, round-trips."""

import json
import pathlib

import pytest

from hushsim import core, scenario

SCENARIOS = pathlib.Path(__file__).resolve().parent.parent / "scenarios"


def minimal(actions):
    return {"seed": 1, "actions": actions}


def test_bundled_scenario_loads():
    scn = scenario.load_scenario(str(SCENARIOS / "routing-story.json"))
    assert scn.actors() == ["ann", "bob", "cam", "dee"]
    assert scn.config == core.RoomConfig()
    assert len(scn.actions) == 14
    assert scn.actions[0] == scenario.ScriptAction(t=0, actor="ann", op="join_room")


def test_round_trip_through_dict_and_json():
    scn = scenario.load_scenario(str(SCENARIOS / "routing-story.json"))
    again = scenario.scenario_from_dict(scn.to_dict())
    assert again == scn
    again = scenario.scenario_from_dict(json.loads(scn.to_json()))
    assert again == scn
    # Canonical form is stable and compact.
    assert scn.to_json() == again.to_json()
    assert "\n" not in scn.to_json()
    assert scn.to_json(indent=2).endswith("\n")


def test_defaults_fill_in():
    scn = scenario.scenario_from_dict({"actions": [{"t": 0, "actor": "a", "op": "join_room"}]})
    assert scn.seed == 0
    assert scn.config == core.RoomConfig()


def test_config_overrides():
    scn = scenario.scenario_from_dict(
        {
            "config": {"num_channels": 3, "max_users": 4, "hearing_radius": 10, "spawn": [1, 2]},
            "actions": [],
        }
    )
    assert scn.config.num_channels == 3
    assert scn.config.max_users == 4
    assert scn.config.hearing_radius == 10.0
    assert scn.config.spawn == core.Position(1.0, 2.0)


@pytest.mark.parametrize(
    "data,fragment",
    [
        ([], "must be an object"),
        ({"seed": -1, "actions": []}, "seed"),
        ({"seed": True, "actions": []}, "seed"),
        ({"bogus": 1, "actions": []}, "unknown key"),
        ({"actions": {}}, "must be an array"),
        ({"config": {"volume": 9}, "actions": []}, "unknown key"),
        ({"config": {"num_channels": "7"}, "actions": []}, "num_channels"),
        ({"config": {"max_users": 1}, "actions": []}, "config"),
        ({"config": {"spawn": [1.0]}, "actions": []}, "spawn"),
        ({"config": {"hearing_radius": -5}, "actions": []}, "config"),
    ],
)
def test_invalid_top_level(data, fragment):
    with pytest.raises(scenario.ScenarioInvalid) as err:
        scenario.scenario_from_dict(data)
    assert fragment in str(err.value)


@pytest.mark.parametrize(
    "action,fragment",
    [
        ("not a dict", "must be an object"),
        ({"actor": "a", "op": "join_room"}, "missing key 't'"),
        ({"t": 0, "op": "join_room"}, "missing key 'actor'"),
        ({"t": 0, "actor": "a"}, "missing key 'op'"),
        ({"t": -1, "actor": "a", "op": "join_room"}, "t must be"),
        ({"t": 0.5, "actor": "a", "op": "join_room"}, "t must be"),
        ({"t": 0, "actor": "", "op": "join_room"}, "actor"),
        ({"t": 0, "actor": "a", "op": "teleport"}, "unknown op"),
        ({"t": 0, "actor": "a", "op": "join_room", "x": 1}, "does not take"),
        ({"t": 0, "actor": "a", "op": "move", "x": 1}, "requires 'y'"),
        ({"t": 0, "actor": "a", "op": "move", "x": 1, "y": "2"}, "must be a number"),
        ({"t": 0, "actor": "a", "op": "speak"}, "requires 'text'"),
        ({"t": 0, "actor": "a", "op": "speak", "text": ""}, "text"),
        ({"t": 0, "actor": "a", "op": "speak", "text": "x" * 4097}, "text"),
        ({"t": 0, "actor": "a", "op": "enter_channel"}, "requires 'channel'"),
        ({"t": 0, "actor": "a", "op": "enter_channel", "channel": True}, "integer"),
        ({"t": 0, "actor": "a", "op": "enter_channel", "channel": 1.5}, "integer"),
        ({"t": 0, "actor": "a", "op": "exit_channel", "channel": 1}, "does not take"),
        ({"t": 0, "actor": "a", "op": "speak", "text": "x", "why": 1}, "unknown key"),
    ],
)
def test_invalid_actions(action, fragment):
    join = {"t": 0, "actor": "a", "op": "join_room"}
    with pytest.raises(scenario.ScenarioInvalid) as err:
        scenario.scenario_from_dict(minimal([join, action]))
    assert fragment in str(err.value)


def test_move_coords_must_be_finite():
    # JSON cannot carry NaN, but the dict path must still refuse it.
    join = {"t": 0, "actor": "a", "op": "join_room"}
    move = {"t": 1, "actor": "a", "op": "move", "x": float("nan"), "y": 0}
    with pytest.raises(scenario.ScenarioInvalid, match="finite"):
        scenario.scenario_from_dict(minimal([join, move]))


@pytest.mark.parametrize(
    "actions,fragment",
    [
        # Time travels backward.
        (
            [
                {"t": 10, "actor": "a", "op": "join_room"},
                {"t": 5, "actor": "a", "op": "exit_channel"},
            ],
            "non-decreasing",
        ),
        # Acting before joining.
        ([{"t": 0, "actor": "a", "op": "move", "x": 1, "y": 2}], "join_room first"),
        # Double join.
        (
            [
                {"t": 0, "actor": "a", "op": "join_room"},
                {"t": 1, "actor": "a", "op": "join_room"},
            ],
            "already joined",
        ),
        # Acting after disconnect.
        (
            [
                {"t": 0, "actor": "a", "op": "join_room"},
                {"t": 1, "actor": "a", "op": "disconnect"},
                {"t": 2, "actor": "a", "op": "speak", "text": "hi"},
            ],
            "already disconnected",
        ),
    ],
)
def test_ordering_rules(actions, fragment):
    with pytest.raises(scenario.ScenarioInvalid) as err:
        scenario.scenario_from_dict(minimal(actions))
    assert fragment in str(err.value)


def test_enter_channel_range_is_not_checked_at_parse_time():
    # Out-of-range channels stay scriptable so scenarios can probe the
    # server's INVALID_CHANNEL behaviour.
    scn = scenario.scenario_from_dict(
        minimal(
            [
                {"t": 0, "actor": "a", "op": "join_room"},
                {"t": 1, "actor": "a", "op": "enter_channel", "channel": 99},
            ]
        )
    )
    assert scn.actions[1].channel == 99


def test_load_scenario_rejects_bad_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{nope", encoding="utf-8")
    with pytest.raises(scenario.ScenarioInvalid, match="not valid JSON"):
        scenario.load_scenario(str(path))


# -- transcripts -------------------------------------------------------------------


def test_transcript_round_trip():
    rec = scenario.DeliveryRecord(
        t=5, kind="AUDIO", sender="ann", recipient="bob", detail={"type": "AUDIO"}
    )
    tr = scenario.Transcript(seed=9, records=[rec])
    data = tr.to_dict()
    assert data == {
        "scenario_seed": 9,
        "records": [
            {"t": 5, "kind": "AUDIO", "from": "ann", "to": "bob", "detail": {"type": "AUDIO"}}
        ],
    }
    again = scenario.Transcript.from_dict(json.loads(tr.to_json()))
    assert again.seed == tr.seed
    assert again.records == tr.records


def test_transcript_json_is_deterministic():
    rec = scenario.DeliveryRecord(t=0, kind="PONG", sender="a", recipient="a", detail={})
    one = scenario.Transcript(seed=1, records=[rec]).to_json()
    two = scenario.Transcript(seed=1, records=[rec]).to_json()
    assert one == two
