import json

import pytest

from fanetsim.scenario import Publisher, ScenarioError, load_scenario, scenario_from_dict

from conftest import BUNDLED, scenario_dict, static_node


def test_minimal_valid(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"format": 1, "duration_ms": 1000,
                             "nodes": [static_node("gcs", (0, 0, 0), role="GCS")]}))
    s = load_scenario(p)
    assert len(s.nodes) == 1 and s.nodes[0].mobility.model == "static"


def test_gcs_position_shorthand():
    s = scenario_from_dict({"format": 1, "duration_ms": 10,
                            "nodes": [{"id": "g", "role": "GCS", "position": [1, 2, 0]}]})
    assert s.nodes[0].mobility.position == (1, 2, 0)


def test_duplicate_id_names_both_locations():
    d = scenario_dict([static_node("a", (0, 0, 0)), static_node("b", (1, 0, 0)),
                       static_node("a", (2, 0, 0))])
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(d)
    msg, = err.value.errors
    assert "$.nodes[2].id" in msg and "$.nodes[0]" in msg


def test_wildcard_publisher_key():
    d = scenario_dict([static_node("a", (0, 0, 0), [{"type": "publisher", "key": "a/*",
                                                     "period_ms": 10, "payload_bytes": 1}])])
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(d)
    assert "publisher key must be concrete" in str(err.value)


def test_all_errors_reported_together():
    d = scenario_dict([
        static_node("a", (0, 0, 0), [{"type": "subscriber", "expr": "a//b"}]),
        {"id": "u", "mobility": {"model": "random_waypoint", "speed": [9, 3], "pause_ms": 0}},
        static_node("a", (0, 0, 0), [{"type": "publisher", "key": "x", "period_ms": 0,
                                      "payload_bytes": 1}]),
    ], duration_ms=-5)
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(d)
    text = "\n".join(err.value.errors)
    for needle in ("duration_ms", "a//b", "v_min", "duplicate", "period_ms"):
        assert needle in text
    assert len(err.value.errors) >= 5


def test_parse_error_has_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "format": 1,\n  "nodes": [\n}\n')
    with pytest.raises(ScenarioError) as err:
        load_scenario(p)
    assert "line 4" in err.value.errors[0]


def test_unknown_protocol_and_channel_keys():
    d = scenario_dict([static_node("a", (0, 0, 0))], protocol={"ttl": 3},
                      channel={"gain": 1.0, "extra_loss_prob": 2})
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(d)
    text = str(err.value)
    assert "ttl" in text and "gain" in text and "extra_loss_prob" in text


def test_missing_file_is_oserror(tmp_path):
    with pytest.raises(OSError):
        load_scenario(tmp_path / "nope.json")


@pytest.mark.parametrize("path", BUNDLED, ids=lambda p: p.stem)
def test_round_trip(path):
    s = load_scenario(path)
    again = scenario_from_dict(json.loads(s.to_json()))
    assert again == s
    assert again.digest() == s.digest()


@pytest.mark.parametrize("dur,start,period", [(10000, 0, 100), (10000, 50, 100), (999, 0, 1000),
                                              (1000, 1000, 7), (5, 10, 1)])
def test_publisher_count_formula(dur, start, period):
    expected = (dur - start) // period + 1 if start <= dur else 0
    assert Publisher("k", period, 1, start).count(dur) == expected
