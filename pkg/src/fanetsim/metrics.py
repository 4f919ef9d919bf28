"""Offline metrics over a finished trace: latency, jitter, throughput, delivery, hops."""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

from .channel import HEADER_OVERHEAD
from .core import US_PER_S
from .keyexpr import key_expr_match, key_expr_normalize
from .trace import Trace, TraceRecord


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class Flow:
    origin: str
    subscriber: str
    expr: str
    kind: str = "publish"  # or "query"

    @classmethod
    def parse(cls, text: str, known: Iterable["Flow"] = ()) -> "Flow":
        parts = text.split(":")
        if len(parts) != 3 or not all(parts):
            raise MetricsError(f"flow must be origin:subscriber:expr, got {text!r}")
        origin, sub, expr = parts
        expr = key_expr_normalize(expr).text
        for f in known:
            if (f.origin, f.subscriber, f.expr) == (origin, sub, expr):
                return f
        return cls(origin, sub, expr)

    def label(self) -> str:
        return f"{self.origin}:{self.subscriber}:{self.expr}"


@dataclass(frozen=True)
class Delivery:
    msg_id: str
    sent: int
    received: int
    payload_bytes: int
    hops: int

    @property
    def latency(self) -> int:
        return self.received - self.sent


def _records(trace: Trace | Iterable[TraceRecord]) -> Sequence[TraceRecord]:
    if isinstance(trace, Trace):
        return trace.records
    return trace if isinstance(trace, Sequence) else list(trace)


def _query_exprs(records: Sequence[TraceRecord]) -> dict[str, str]:
    return {r.msg_id: r.key for r in records
            if r.event == "Send" and r.kind == "Query" and r.hops_taken == 0
            and r.node == r.origin}


def flow_deliveries(trace, flow: Flow) -> list[Delivery]:
    """First Deliver per msg_id at the flow's subscriber, in trace order."""
    records = _records(trace)
    expr = key_expr_normalize(flow.expr)
    queries = _query_exprs(records) if flow.kind == "query" else {}
    out, seen = [], set()
    for r in records:
        if r.event != "Deliver" or r.node != flow.subscriber or r.msg_id in seen:
            continue
        if flow.kind == "query":
            if r.kind != "Reply" or queries.get(r.ref) != flow.expr:
                continue
        elif r.kind != "Publish" or r.origin != flow.origin or not key_expr_match(expr, r.key):
            continue
        seen.add(r.msg_id)
        out.append(Delivery(r.msg_id, r.origin_time, r.t, r.payload_bytes, r.hops_taken))
    return out


def flow_published(trace, flow: Flow) -> list[str]:
    """msg_ids the flow's source put on the air (publishes, or queries for query flows)."""
    records = _records(trace)
    if flow.kind == "query":
        return [m for m, k in _query_exprs(records).items()
                if k == flow.expr and m.rsplit(":", 1)[0] == flow.subscriber]
    expr = key_expr_normalize(flow.expr)
    return [r.msg_id for r in records
            if r.event == "Send" and r.kind == "Publish" and r.node == flow.origin
            and r.origin == flow.origin and r.hops_taken == 0 and key_expr_match(expr, r.key)]


def nearest_rank(sorted_values: Sequence[int], pct: float) -> int:
    rank = max(1, math.ceil(pct / 100.0 * len(sorted_values)))
    return sorted_values[rank - 1]


def latency_summary(latencies: Iterable[int]) -> dict[str, float] | None:
    """mean/p50/p95/max in microseconds; None when there is no data."""
    values = sorted(latencies)
    if not values:
        return None
    return {"mean": sum(values) / len(values), "p50": nearest_rank(values, 50),
            "p95": nearest_rank(values, 95), "max": values[-1]}


def latency_stats(trace, flow: Flow) -> dict[str, float] | None:
    return latency_summary(d.latency for d in flow_deliveries(trace, flow))


def rfc3550_jitter(samples: Iterable[tuple[int, int]]) -> float | None:
    """Interarrival jitter over (send, receive) pairs already ordered by send time."""
    samples = list(samples)
    if len(samples) < 2:
        return None
    j = 0.0
    for (s0, r0), (s1, r1) in zip(samples, samples[1:]):
        d = (r1 - r0) - (s1 - s0)
        j += (abs(d) - j) / 16.0
    return j


def jitter(trace, flow: Flow) -> float | None:
    ds = sorted(flow_deliveries(trace, flow), key=lambda d: (d.sent, d.received))
    return rfc3550_jitter((d.sent, d.received) for d in ds)


def _check_window(window: tuple[int, int]) -> tuple[int, int]:
    t0, t1 = window
    if t1 <= t0:
        raise MetricsError(f"window end {t1} must be after start {t0}")
    return t0, t1


def throughput(trace, flow: Flow, window: tuple[int, int]) -> float:
    """Delivered payload bits/s over the half-open window [t0, t1)."""
    t0, t1 = _check_window(window)
    records = _records(trace)
    ids = {d.msg_id for d in flow_deliveries(records, flow)}
    bits = 8 * sum(r.payload_bytes for r in records
                   if r.event == "Deliver" and r.node == flow.subscriber and r.msg_id in ids
                   and t0 <= r.t < t1)
    return bits / ((t1 - t0) / US_PER_S)


def on_air_load(trace, window: tuple[int, int]) -> float:
    """Bits/s of every transmission, header overhead included."""
    t0, t1 = _check_window(window)
    bits = 8 * sum(r.payload_bytes + HEADER_OVERHEAD for r in _records(trace)
                   if r.event == "Send" and t0 <= r.t < t1)
    return bits / ((t1 - t0) / US_PER_S)


def goodput(trace, window: tuple[int, int]) -> float:
    t0, t1 = _check_window(window)
    bits = 8 * sum(r.payload_bytes for r in _records(trace)
                   if r.event == "Deliver" and t0 <= r.t < t1)
    return bits / ((t1 - t0) / US_PER_S)


def _delivered_count(records: Sequence[TraceRecord], flow: Flow, published: list[str]) -> int:
    if flow.kind == "query":
        answered = {r.ref for r in records
                    if r.event == "Deliver" and r.node == flow.subscriber and r.kind == "Reply"}
        return sum(1 for m in published if m in answered)
    pub = set(published)
    return sum(1 for d in flow_deliveries(records, flow) if d.msg_id in pub)


def delivery_ratio(trace, flow: Flow) -> float | None:
    """Fraction of the flow's messages that reached the subscriber (queries: got a reply)."""
    records = _records(trace)
    published = flow_published(records, flow)
    if not published:
        return None
    return _delivered_count(records, flow, published) / len(published)


def hop_histogram(trace, flow: Flow) -> dict[int, int]:
    return dict(sorted(Counter(d.hops for d in flow_deliveries(trace, flow)).items()))


def discovery_convergence(trace: Trace) -> int | None:
    """Time at which beacon-derived neighbor pairs first cover every pair heard early on.

    The reference set is every (receiver, sender) pair with a beacon reception
    inside the first neighbor-expiry window (3 beacon intervals).
    """
    interval = trace.header.get("protocol", {}).get("beacon_interval_ms", 0) * 1000
    if interval <= 0:
        return None
    horizon = 3 * interval
    beacons = [(r.t, r.node, r.peer) for r in trace.records
               if r.event == "Recv" and r.kind == "Beacon" and r.t <= horizon]
    target = {(n, p) for _, n, p in beacons}
    if not target:
        return None
    found: set[tuple[str, str]] = set()
    for t, n, p in beacons:
        found.add((n, p))
        if found == target:
            return t
    return None


def trace_flows(trace: Trace) -> list[Flow]:
    return [Flow(f["origin"], f["subscriber"], f["expr"], f.get("kind", "publish"))
            for f in trace.header.get("flows", [])]


def default_window(trace: Trace) -> tuple[int, int]:
    return 0, int(trace.header["duration_us"])


def flow_summary(trace, flow: Flow, window: tuple[int, int]) -> dict[str, Any]:
    records = _records(trace)
    deliveries = flow_deliveries(records, flow)
    published = flow_published(records, flow)
    delivered = _delivered_count(records, flow, published)
    return {
        "origin": flow.origin,
        "subscriber": flow.subscriber,
        "expr": flow.expr,
        "kind": flow.kind,
        "published": len(published),
        "delivered": delivered,
        "delivery_ratio": delivered / len(published) if published else None,
        "latency_us": latency_summary(d.latency for d in deliveries),
        "jitter_us": jitter(records, flow),
        "throughput_bps": throughput(records, flow, window),
        "hop_histogram": {str(k): v for k, v in hop_histogram(records, flow).items()},
    }


def summarize(trace: Trace, flows: Sequence[Flow] | None = None,
              window: tuple[int, int] | None = None) -> dict[str, Any]:
    records = trace.records
    window = default_window(trace) if window is None else _check_window(window)
    flows = trace_flows(trace) if flows is None else flows
    events = Counter(r.event for r in records)
    flow_blocks = [flow_summary(records, f, window) for f in flows]

    published = sum(b["published"] for b in flow_blocks)
    delivered = sum(b["delivered"] for b in flow_blocks)
    all_latency = [d.latency for f in flows for d in flow_deliveries(records, f)]
    all_hops = Counter(d.hops for f in flows for d in flow_deliveries(records, f))
    aggregate = {
        "records": len(records),
        "sends": events["Send"],
        "receptions": events["Recv"],
        "deliveries": events["Deliver"],
        "dup_drops": events["DupDrop"],
        "range_drops": events["RangeDrop"],
        "loss_drops": events["LossDrop"],
        "expired": events["Expire"],
        "malformed": events["Malformed"],
        "publishes": sum(1 for r in records if r.event == "Send" and r.kind == "Publish"
                         and r.node == r.origin and r.hops_taken == 0),
        "beacons": sum(1 for r in records if r.event == "Send" and r.kind == "Beacon"),
        "flow_messages": published,
        "flow_delivered": delivered,
        "delivery_ratio": delivered / published if published else None,
        "latency_us": latency_summary(all_latency),
        "hop_histogram": {str(k): v for k, v in sorted(all_hops.items())},
        "goodput_bps": goodput(records, window),
        "on_air_bps": on_air_load(records, window),
        "discovery_convergence_us": discovery_convergence(trace),
    }
    return {
        "tool": trace.header.get("tool"),
        "version": trace.header.get("version"),
        "seed": trace.header.get("seed"),
        "scenario_digest": trace.header.get("scenario_digest"),
        "window_us": list(window),
        "aggregate": aggregate,
        "flows": flow_blocks,
    }


def summary_json(summary: dict[str, Any]) -> str:
    return json.dumps(summary, indent=2) + "\n"


def flows_csv(summary: dict[str, Any]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["origin", "subscriber", "expr", "kind", "published", "delivered",
                "delivery_ratio", "latency_mean_us", "latency_p50_us", "latency_p95_us",
                "latency_max_us", "jitter_us", "throughput_bps"])
    for f in summary["flows"]:
        lat = f["latency_us"] or {}
        w.writerow([f["origin"], f["subscriber"], f["expr"], f["kind"], f["published"],
                    f["delivered"], _blank(f["delivery_ratio"]), _blank(lat.get("mean")),
                    _blank(lat.get("p50")), _blank(lat.get("p95")), _blank(lat.get("max")),
                    _blank(f["jitter_us"]), f["throughput_bps"]])
    return buf.getvalue()


def _blank(v: Any) -> Any:
    return "" if v is None else v
