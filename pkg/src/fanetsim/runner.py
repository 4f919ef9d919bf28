"""Run orchestration: build nodes from a scenario, drive the event loop, emit outputs."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import IO, Any

from . import __version__
from .channel import ChannelParams, Drop, broadcast
from .core import US_PER_MS, RandomStream, Simulator, rng_stream
from .keyexpr import key_expr_match, key_expr_normalize
from .mobility import Bounds, CircularOrbit, Position, Static, Trajectory, random_waypoint
from .pubsub import Message, Peer, ProtocolParams
from .scenario import NodeSpec, Publisher, Querier, Scenario, Subscriber
from .trace import TraceRecord, TraceWriter

log = logging.getLogger(__name__)


class Network:
    """Shared medium: turns transmissions into scheduled receptions and trace records."""

    def __init__(self, sim: Simulator, writer: TraceWriter, channel: ChannelParams,
                 protocol: ProtocolParams, seed: int) -> None:
        self.sim = sim
        self.writer = writer
        self.channel = channel
        self.protocol = protocol
        self.seed = seed
        self.peers: dict[str, Peer] = {}
        self.trajectories: dict[str, Trajectory] = {}
        self._channel_rng: dict[str, RandomStream] = {}

    def add_node(self, node_id: str, trajectory: Trajectory) -> Peer:
        peer = Peer(node_id, self, self.protocol)
        self.peers[node_id] = peer
        self.trajectories[node_id] = trajectory
        self._channel_rng[node_id] = rng_stream(self.seed, node_id, "channel")
        return peer

    def now(self) -> int:
        return self.sim.now()

    def positions(self, t: int) -> dict[str, Position]:
        return {nid: tr.at(t) for nid, tr in self.trajectories.items()}

    def log(self, event: str, node: str, msg: Message, hops: int,
            peer: str | None = None) -> None:
        self.writer.record(TraceRecord(self.sim.now(), node, event, msg.msg_id, msg.kind.value,
                                       msg.key.text, msg.payload_bytes, hops, msg.origin_time,
                                       peer, msg.query_ref))

    def transmit(self, node: str, msg: Message, dest: str | None = None) -> None:
        t = self.sim.now()
        self.log("Send", node, msg, msg.hops_taken, peer=dest)
        dropped: list[Drop] = []
        receptions = broadcast(node, msg.payload_bytes, t, self.positions(t), self.channel,
                               self._channel_rng[node],
                               receivers=None if dest is None else [dest], dropped=dropped)
        for d in dropped:
            self.log("RangeDrop" if d.reason == "range" else "LossDrop", d.rx_node, msg,
                     msg.hops_taken + 1, peer=node)
        for r in receptions:
            self.sim.schedule(r.arrive_at, r.rx_node,
                              partial(self.peers[r.rx_node].handle_message, msg, node))


def build_trajectory(spec: NodeSpec, scenario: Scenario, seed: int) -> Trajectory:
    m = spec.mobility
    if m.model == "static":
        return Trajectory(Static(Position(*m.position)))
    if m.model == "orbit":
        return Trajectory(CircularOrbit(Position(*m.center), m.radius, m.angular_speed, m.phase))
    rng = rng_stream(seed, spec.id, "mobility")
    bounds = Bounds(Position(*scenario.bounds[0]), Position(*scenario.bounds[1]))
    start = Position(*m.position) if m.position is not None else None
    state = random_waypoint(bounds, m.speed[0], m.speed[1], m.pause_ms * US_PER_MS, rng, start)
    return Trajectory(state, rng)


def scenario_flows(scenario: Scenario) -> list[dict[str, str]]:
    """Measurement series: every (publisher, subscriber) pair whose keys match, plus queriers."""
    flows = []
    publishers = [(n.id, a) for n in scenario.nodes for a in n.apps if isinstance(a, Publisher)]
    for n in scenario.nodes:
        for a in n.apps:
            if isinstance(a, Subscriber):
                expr = key_expr_normalize(a.expr)
                origins = []
                for origin, p in publishers:
                    if key_expr_match(expr, p.key) and origin not in origins:
                        origins.append(origin)
                for origin in origins:
                    flows.append({"origin": origin, "subscriber": n.id, "expr": expr.text,
                                  "kind": "publish"})
            elif isinstance(a, Querier):
                flows.append({"origin": n.id, "subscriber": n.id,
                              "expr": key_expr_normalize(a.expr).text, "kind": "query"})
    return flows


def _periodic(sim: Simulator, target: str, first: int, period: int, last: int,
              fn) -> None:
    def fire(t: int) -> None:
        fn()
        nxt = t + period
        if nxt <= last:
            sim.schedule(nxt, target, partial(fire, nxt))

    if first <= last:
        sim.schedule(first, target, partial(fire, first))


def trace_header(scenario: Scenario, seed: int) -> dict[str, Any]:
    return {
        "tool": "fanetsim",
        "version": __version__,
        "format": 1,
        "seed": seed,
        "scenario_digest": scenario.digest(),
        "scenario_name": scenario.name,
        "duration_us": scenario.duration_ms * US_PER_MS,
        "channel": scenario.channel.to_dict(),
        "protocol": scenario.protocol.to_dict(),
        "nodes": [{"id": n.id, "role": n.role, "model": n.mobility.model} for n in scenario.nodes],
        "flows": scenario_flows(scenario),
    }


def simulate(scenario: Scenario, fh: IO[str], seed: int | None = None) -> Network:
    """Run the scenario, writing the JSONL trace to ``fh``."""
    seed = scenario.seed if seed is None else seed
    sim = Simulator()
    writer = TraceWriter(fh)
    writer.header(trace_header(scenario, seed))
    net = Network(sim, writer, scenario.channel, scenario.protocol, seed)
    end = scenario.duration_ms * US_PER_MS

    for spec in scenario.nodes:
        peer = net.add_node(spec.id, build_trajectory(spec, scenario, seed))
        for app in spec.apps:
            if isinstance(app, Subscriber):
                peer.subscribe(app.expr)
            elif isinstance(app, Publisher):
                peer.declare_queryable(app.key, app.payload_bytes)

    interval = scenario.protocol.beacon_interval
    if interval > 0:
        for spec in scenario.nodes:
            phase = int(rng_stream(seed, spec.id, "beacon").random() * interval)
            _periodic(sim, spec.id, phase, interval, end, net.peers[spec.id].emit_beacon)

    for spec in scenario.nodes:
        peer = net.peers[spec.id]
        for app in spec.apps:
            if isinstance(app, Publisher):
                _periodic(sim, spec.id, app.start_ms * US_PER_MS, app.period_ms * US_PER_MS, end,
                          partial(peer.publish, app.key, app.payload_bytes))
            elif isinstance(app, Querier):
                _periodic(sim, spec.id, app.start_ms * US_PER_MS, app.period_ms * US_PER_MS, end,
                          partial(peer.query, app.expr))

    if scenario.position_sample_ms > 0:
        def sample() -> None:
            t = sim.now()
            for nid, pos in net.positions(t).items():
                writer.position(t, nid, pos)

        _periodic(sim, "*", 0, scenario.position_sample_ms * US_PER_MS, end, sample)

    fired = sim.run_until(end)
    log.info("simulated %s: %d events, %d trace records", scenario.name or "scenario", fired,
             writer.count)
    return net


@dataclass
class RunResult:
    trace_path: Path
    summary_path: Path
    summary: dict[str, Any]
    figures: list[Path]


def run_scenario(scenario: Scenario, out_dir: str | Path, seed: int | None = None,
                 figures: bool = True) -> RunResult:
    from .metrics import flows_csv, summarize, summary_json
    from .trace import read_trace

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace_path = out / "trace.jsonl"
    with open(trace_path, "w", encoding="utf-8", newline="\n") as fh:
        simulate(scenario, fh, seed)
    # Summary is computed from the file, same path as the offline `metrics` command.
    trace = read_trace(trace_path)
    summary = summarize(trace)
    summary_path = out / "summary.json"
    summary_path.write_text(summary_json(summary), encoding="utf-8")
    (out / "flows.csv").write_text(flows_csv(summary), encoding="utf-8")
    paths: list[Path] = []
    if figures:
        from .plotting import render_report
        paths = render_report(trace, summary, out)
    return RunResult(trace_path, summary_path, summary, paths)

