"""Report figures rendered next to the trace and summary files."""

from __future__ import annotations

from collections import defaultdict
from math import sqrt
from pathlib import Path
from typing import Any

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import flow_deliveries, trace_flows  # noqa: E402
from .trace import Trace  # noqa: E402

golden_mean = (sqrt(5.0) - 1.0) / 2.0
fig_width = 6.0

RC = {
    "figure.figsize": (fig_width, fig_width * golden_mean),
    "figure.dpi": 100,
    "savefig.dpi": 120,
    "axes.labelsize": 10,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "fanetsim",
}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def latency_figure(trace: Trace, path: Path) -> Path | None:
    series = []
    for flow in trace_flows(trace):
        lat = sorted(d.latency / 1000.0 for d in flow_deliveries(trace, flow))
        if lat:
            series.append((flow.label(), lat))
    if not series:
        return None
    fig, ax = plt.subplots()
    for label, lat in series:
        n = len(lat)
        ax.step(lat, [(i + 1) / n for i in range(n)], where="post", label=label)
    ax.set_xlabel("latency (ms, round trip for queries)")
    ax.set_ylabel("CDF")
    ax.set_ylim(0, 1.02)
    if len(series) <= 12:
        ax.legend(loc="lower right")
    return _save(fig, path)


def hop_figure(summary: dict[str, Any], path: Path) -> Path | None:
    hist = {int(k): v for k, v in summary["aggregate"]["hop_histogram"].items()}
    if not hist:
        return None
    fig, ax = plt.subplots()
    ax.bar(list(hist), list(hist.values()), color="C0")
    ax.set_xlabel("hops taken")
    ax.set_ylabel("deliveries")
    ax.set_xticks(sorted(hist))
    return _save(fig, path)


def throughput_figure(trace: Trace, path: Path, bin_us: int = 1_000_000) -> Path | None:
    end = int(trace.header["duration_us"])
    nbins = max(1, -(-end // bin_us))
    good = [0] * nbins
    air = [0] * nbins
    for r in trace.records:
        b = min(r.t // bin_us, nbins - 1)
        if r.event == "Deliver":
            good[b] += 8 * r.payload_bytes
        elif r.event == "Send":
            air[b] += 8 * (r.payload_bytes + 48)
    if not any(air):
        return None
    scale = 1e3 * bin_us / 1e6
    xs = [(i + 0.5) * bin_us / 1e6 for i in range(nbins)]
    fig, ax = plt.subplots()
    ax.plot(xs, [a / scale for a in air], label="on air (incl. headers)")
    ax.plot(xs, [g / scale for g in good], label="delivered payload")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("kbit/s")
    ax.legend()
    return _save(fig, path)


def trajectory_figure(trace: Trace, path: Path) -> Path | None:
    if not trace.positions:
        return None
    tracks: dict[str, list[tuple[float, float]]] = defaultdict(list)
    for _, node, pos in trace.positions:
        tracks[node].append((pos[0], pos[1]))
    fig, ax = plt.subplots(figsize=(fig_width * 0.8, fig_width * 0.8))
    for node, pts in tracks.items():
        xs, ys = zip(*pts)
        line, = ax.plot(xs, ys, lw=0.8)
        ax.plot(xs[-1:], ys[-1:], "o", color=line.get_color(), ms=4)
        ax.annotate(node, (xs[-1], ys[-1]), fontsize=7, xytext=(3, 3),
                    textcoords="offset points")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_aspect("equal", adjustable="datalim")
    return _save(fig, path)


def render_report(trace: Trace, summary: dict[str, Any], out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    with plt.rc_context(RC):
        made = [
            latency_figure(trace, out / "latency_cdf.png"),
            hop_figure(summary, out / "hop_histogram.png"),
            throughput_figure(trace, out / "throughput.png"),
            trajectory_figure(trace, out / "trajectories.png"),
        ]
    return [p for p in made if p is not None]
