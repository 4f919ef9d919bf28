"""End-to-end acceptance checks, one test per criterion.

The terminal summary hook in conftest prints a PASS/FAIL line for each
``test_criterion_*`` function.
"""

import json
import math
import random
import time
from collections import defaultdict

import pytest

from fanetsim.channel import ChannelParams, broadcast, snr_db
from fanetsim.cli import main
from fanetsim.keyexpr import key_expr_intersects, key_expr_match
from fanetsim.metrics import (Flow, delivery_ratio, flow_published, rfc3550_jitter, summarize,
                              throughput)
from fanetsim.mobility import Position
from fanetsim.runner import run_scenario
from fanetsim.scenario import load_scenario
from fanetsim.trace import TraceRecord, parse_trace

from conftest import BUNDLED, SCENARIO_DIR, load_bundled, run_dict, run_text, scenario_dict, static_node
from oracles import (all_exprs, bfs_ball, bisect_root, brute_match, concrete_keys,
                     free_space_ref_loss, jitter_by_hand, match_bitsets)


def oracle_snr(d, freq=5.9e9, n=2.75, tx=23.0, noise=-95.0):
    """Link budget written out from scratch, shared by criteria 2 and 10."""
    return tx - (free_space_ref_loss(freq) + 10 * n * math.log10(d)) - noise


def oracle_range(threshold=5.0):
    return bisect_root(lambda d: oracle_snr(d) - threshold, 1.0, 10_000.0)


def test_criterion_01_multihop_line():
    start = time.perf_counter()
    trace = run_dict(load_bundled("line4"))
    elapsed = time.perf_counter() - start
    flow = Flow("n0", "n3", "mission/**")
    hops = {r.hops_taken for r in trace.records if r.event == "Deliver" and r.node == "n3"}
    assert hops == {3}
    assert delivery_ratio(trace, flow) == 1.0
    assert elapsed < 5.0

    cut = load_bundled("line4")
    cut["protocol"] = {**cut.get("protocol", {}), "hop_limit": 1}
    cut_trace = run_dict(cut)
    assert flow_published(cut_trace, flow)
    assert delivery_ratio(cut_trace, flow) == 0.0
    assert not [r for r in cut_trace.records if r.event == "Deliver" and r.node == "n3"]


def test_criterion_02_decode_range():
    p = ChannelParams()
    root = oracle_range(p.snr_threshold)
    assert root == pytest.approx(233.7, abs=0.1)
    assert oracle_snr(100.0) == pytest.approx(15.14, abs=0.01)
    assert snr_db(p, 100.0) == pytest.approx(oracle_snr(100.0), abs=0.01)
    lib_root = bisect_root(lambda d: snr_db(p, d) - p.snr_threshold, 1.0, 10_000.0)
    assert lib_root == pytest.approx(root, abs=0.1)

    positions = {"tx": Position(0, 0, 0), "near": Position(100, 0, 0), "far": Position(300, 0, 0)}
    got = broadcast("tx", 100, 0, positions, p, None)
    assert [r.rx_node for r in got] == ["near"]

    d = scenario_dict([static_node("a", (0, 0, 50), [{"type": "publisher", "key": "k",
                                                      "period_ms": 500, "payload_bytes": 100}]),
                       static_node("b", (100, 0, 50), [{"type": "subscriber", "expr": "k"}]),
                       static_node("c", (0, 300, 50), [{"type": "subscriber", "expr": "k"}])],
                      protocol={"hop_limit": 1})
    trace = run_dict(d)
    delivered = {r.node for r in trace.records if r.event == "Deliver" and r.node != "a"}
    assert delivered == {"b"}


def _without_header_and_beacons(text):
    lines = text.splitlines()[1:]
    return [ln for ln in lines if '"kind":"Beacon"' not in ln]


@pytest.mark.parametrize("path", BUNDLED, ids=lambda p: p.stem)
def test_criterion_03_determinism(path):
    raw = json.loads(path.read_text())
    first, second = run_text(raw), run_text(raw)
    assert first == second
    other = run_text(raw, seed=raw["seed"] + 1)
    moving = any(n.get("mobility", {}).get("model") == "random_waypoint" for n in raw["nodes"])
    if moving:
        assert _without_header_and_beacons(other) != _without_header_and_beacons(first)
    else:
        assert _without_header_and_beacons(other) == _without_header_and_beacons(first)


def test_criterion_04_keyexpr_oracle():
    exprs = all_exprs(4)
    keys = concrete_keys("ab", 6)
    mismatches = 0
    for e in exprs:
        for k in keys:
            mismatches += key_expr_match(e, k) != brute_match(e, k)
    # Two expressions of at most 4 chunks each, when they overlap, share a key
    # of at most 6 chunks, so enumerating that far decides intersection.
    wide_keys = concrete_keys("abc", 6)
    sets = match_bitsets(exprs, wide_keys)
    for a in exprs:
        for b in exprs:
            mismatches += key_expr_intersects(a, b) != bool(sets[a] & sets[b])
    assert len(exprs) * (len(keys) + len(exprs)) > 10_000
    assert mismatches == 0


def test_criterion_05_beacon_confinement(tmp_path):
    for path in BUNDLED:
        trace = run_dict(json.loads(path.read_text()))
        beacon_sends = [r for r in trace.records if r.kind == "Beacon" and r.event == "Send"]
        assert beacon_sends
        assert all(r.node == r.origin for r in beacon_sends)
        assert all(r.hops_taken <= 1 for r in trace.records if r.kind == "Beacon")


def test_criterion_06_dedup_and_hops():
    raw = load_bundled("diamond")
    trace = run_dict(raw)
    sink = [r for r in trace.records if r.node == "d" and r.kind == "Publish"]
    assert sum(r.event == "Deliver" for r in sink) == 1
    assert sum(r.event == "DupDrop" for r in sink) >= 1
    for path in BUNDLED:
        raw = json.loads(path.read_text())
        t = run_dict(raw)
        limit = raw.get("protocol", {}).get("hop_limit", 8)
        assert max(r.hops_taken for r in t.records) <= limit


def test_criterion_07_jitter_fixture():
    send, recv = [0, 20_000, 40_000], [5_000, 30_000, 45_000]
    steps = jitter_by_hand(send, recv)
    assert steps == [312.5, 605.46875]
    assert rfc3550_jitter(zip(send[:2], recv[:2])) == pytest.approx(312.5, rel=1e-9)
    assert rfc3550_jitter(zip(send, recv)) == pytest.approx(605.46875, rel=1e-9)


def test_criterion_08_schedule_and_throughput():
    trace = run_dict(load_bundled("two_node"))
    origin_sends = [r for r in trace.records
                    if r.event == "Send" and r.kind == "Publish" and r.node == r.origin == "gcs"]
    assert len(origin_sends) == 100
    flow = Flow("gcs", "uav1", "gcs/**")
    assert throughput(trace, flow, (0, 1_000_000)) == 116160.0

    recs = [TraceRecord(100_000 * i + 1000, "b", "Deliver", f"a:{i}", "Publish", "s/x", 1452, 1,
                        100_000 * i) for i in range(10)]
    assert throughput(recs, Flow("a", "b", "s/x"), (0, 1_000_000)) == 116160.0


def test_criterion_09_offline_recompute(tmp_path, capsys):
    for name in ("line4", "query_line", "rwp_swarm"):
        out = tmp_path / name
        result = run_scenario(load_scenario(SCENARIO_DIR / f"{name}.json"), out, figures=False)
        capsys.readouterr()
        assert main(["metrics", "--trace", str(result.trace_path)]) == 0
        assert capsys.readouterr().out == result.summary_path.read_text()
        again = summarize(parse_trace(result.trace_path.read_text().splitlines()))
        assert again == result.summary


def _random_topology(rng, n):
    return {f"n{i}": (rng.uniform(0, 700), rng.uniform(0, 700), rng.uniform(20, 120))
            for i in range(n)}


def test_criterion_10_flooding_completeness():
    rng = random.Random(2024)
    radius = oracle_range()
    for case in range(20):
        pos = _random_topology(rng, rng.randint(6, 14))
        hop_limit = rng.randint(1, 5)
        ids = sorted(pos)
        adj = defaultdict(set)
        for a in ids:
            for b in ids:
                if a != b and math.dist(pos[a], pos[b]) <= radius:
                    adj[a].add(b)
        origin = ids[0]
        nodes = [static_node(i, pos[i], [{"type": "subscriber", "expr": "f/**"}]) for i in ids]
        nodes[0]["apps"].append({"type": "publisher", "key": "f/x", "period_ms": 10_000,
                                 "payload_bytes": 200, "start_ms": 100})
        d = scenario_dict(nodes, duration_ms=1000, seed=case,
                          protocol={"hop_limit": hop_limit, "beacon_interval_ms": 0})
        trace = run_dict(d)
        delivered = {r.node for r in trace.records
                     if r.event == "Deliver" and r.msg_id == f"{origin}:0"}
        assert delivered == bfs_ball(adj, origin, hop_limit), f"case {case}"
