"""Scenario files: JSON, ``format: 1``, all times in milliseconds.

Validation collects every problem it finds and reports them together, each
prefixed with the JSON path of the offending field.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from .channel import ChannelParams
from .keyexpr import KeyExprError, key_expr_normalize
from .pubsub import ProtocolParams

FORMAT = 1
ROLES = ("UAV", "GCS")
MODELS = ("static", "random_waypoint", "orbit")
_NODE_ID = re.compile(r"[A-Za-z0-9_.-]+")


class ScenarioError(ValueError):
    def __init__(self, errors: list[str], source: str | None = None) -> None:
        self.errors = list(errors)
        self.source = source
        prefix = f"{source}: " if source else ""
        super().__init__(prefix + "; ".join(self.errors))


@dataclass(frozen=True)
class Publisher:
    key: str
    period_ms: int
    payload_bytes: int
    start_ms: int = 0
    type: str = "publisher"

    def count(self, duration_ms: int) -> int:
        if self.start_ms > duration_ms:
            return 0
        return (duration_ms - self.start_ms) // self.period_ms + 1


@dataclass(frozen=True)
class Subscriber:
    expr: str
    type: str = "subscriber"


@dataclass(frozen=True)
class Querier:
    expr: str
    period_ms: int
    start_ms: int = 0
    type: str = "querier"


App = Publisher | Subscriber | Querier


@dataclass(frozen=True)
class MobilitySpec:
    model: str = "static"
    position: tuple[float, float, float] | None = None
    speed: tuple[float, float] | None = None
    pause_ms: int = 0
    center: tuple[float, float, float] | None = None
    radius: float = 0.0
    angular_speed: float = 0.0
    phase: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        if self.model == "static":
            return {"model": "static", "position": list(self.position)}
        if self.model == "random_waypoint":
            d: dict[str, Any] = {"model": self.model, "speed": list(self.speed),
                                 "pause_ms": self.pause_ms}
            if self.position is not None:
                d["start"] = list(self.position)
            return d
        return {"model": "orbit", "center": list(self.center), "radius": self.radius,
                "angular_speed": self.angular_speed, "phase": self.phase}


@dataclass(frozen=True)
class NodeSpec:
    id: str
    role: str
    mobility: MobilitySpec
    apps: tuple[App, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.id, "role": self.role, "mobility": self.mobility.to_dict(),
                "apps": [asdict(a) for a in self.apps]}


@dataclass(frozen=True)
class Scenario:
    duration_ms: int
    seed: int
    bounds: tuple[tuple[float, float, float], tuple[float, float, float]]
    nodes: tuple[NodeSpec, ...]
    channel: ChannelParams = field(default_factory=ChannelParams)
    protocol: ProtocolParams = field(default_factory=ProtocolParams)
    position_sample_ms: int = 1000
    name: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": FORMAT,
            "name": self.name,
            "duration_ms": self.duration_ms,
            "seed": self.seed,
            "bounds": {"lo": list(self.bounds[0]), "hi": list(self.bounds[1])},
            "position_sample_ms": self.position_sample_ms,
            "channel": self.channel.to_dict(),
            "protocol": self.protocol.to_dict(),
            "nodes": [n.to_dict() for n in self.nodes],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


class _Checker:
    def __init__(self) -> None:
        self.errors: list[str] = []

    def err(self, path: str, msg: str) -> None:
        self.errors.append(f"{path}: {msg}")

    def number(self, obj: dict, key: str, path: str, default: Any = None, *,
               integer: bool = False, required: bool = False) -> Any:
        if key not in obj:
            if required:
                self.err(f"{path}.{key}", "missing required field")
            return default
        v = obj[key]
        ok = isinstance(v, int) if integer else isinstance(v, (int, float))
        if isinstance(v, bool) or not ok:
            self.err(f"{path}.{key}", f"expected {'integer' if integer else 'number'}, got {v!r}")
            return default
        return v

    def vec3(self, obj: dict, key: str, path: str, required: bool = True):
        if key not in obj:
            if required:
                self.err(f"{path}.{key}", "missing required field")
            return None
        v = obj[key]
        if (not isinstance(v, list) or len(v) != 3
                or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in v)):
            self.err(f"{path}.{key}", f"expected [x, y, z], got {v!r}")
            return None
        return (float(v[0]), float(v[1]), float(v[2]))

    def keyexpr(self, text: Any, path: str, concrete: bool = False, what: str = "key") -> str | None:
        if not isinstance(text, str):
            self.err(path, f"expected key expression string, got {text!r}")
            return None
        try:
            expr = key_expr_normalize(text)
        except KeyExprError as exc:
            self.err(path, f"invalid key expression: {exc}")
            return None
        if concrete and not expr.is_concrete:
            self.err(path, f"{what} must be concrete (got {text!r})")
            return None
        return expr.text


def _parse_mobility(c: _Checker, raw: dict, path: str, role: str,
                    bounds_ok: bool) -> MobilitySpec | None:
    mob = raw.get("mobility")
    if mob is None:
        if "position" not in raw:
            c.err(path, f"{role} node needs a 'mobility' block or a 'position'")
            return None
        pos = c.vec3(raw, "position", path)
        return MobilitySpec("static", pos) if pos else None
    mpath = f"{path}.mobility"
    if not isinstance(mob, dict):
        c.err(mpath, "expected object")
        return None
    model = mob.get("model", "static")
    if model not in MODELS:
        c.err(f"{mpath}.model", f"unknown model {model!r}, expected one of {MODELS}")
        return None
    if model == "static":
        pos = c.vec3(mob, "position", mpath)
        if pos and pos[2] < 0:
            c.err(f"{mpath}.position", "altitude z must be >= 0")
        return MobilitySpec("static", pos) if pos else None
    if model == "random_waypoint":
        speed = mob.get("speed")
        if (not isinstance(speed, list) or len(speed) != 2
                or any(isinstance(s, bool) or not isinstance(s, (int, float)) for s in speed)):
            c.err(f"{mpath}.speed", f"expected [v_min, v_max], got {speed!r}")
            return None
        v_min, v_max = float(speed[0]), float(speed[1])
        if v_min > v_max:
            c.err(f"{mpath}.speed", f"v_min ({v_min}) > v_max ({v_max})")
        if v_min <= 0:
            c.err(f"{mpath}.speed", "v_min must be > 0")
        pause = c.number(mob, "pause_ms", mpath, 0, integer=True)
        if pause is not None and pause < 0:
            c.err(f"{mpath}.pause_ms", "must be >= 0")
        start = c.vec3(mob, "start", mpath, required=False)
        if not bounds_ok:
            c.err(mpath, "random_waypoint requires a valid top-level 'bounds' box")
        return MobilitySpec("random_waypoint", start, (v_min, v_max), pause or 0)
    center = c.vec3(mob, "center", mpath)
    radius = c.number(mob, "radius", mpath, required=True)
    omega = c.number(mob, "angular_speed", mpath, required=True)
    phase = c.number(mob, "phase", mpath, 0.0)
    if radius is not None and radius < 0:
        c.err(f"{mpath}.radius", "must be >= 0")
    if center and center[2] < 0:
        c.err(f"{mpath}.center", "altitude z must be >= 0")
    if center is None or radius is None or omega is None:
        return None
    return MobilitySpec("orbit", center=center, radius=float(radius),
                        angular_speed=float(omega), phase=float(phase))


def _parse_app(c: _Checker, app: Any, path: str) -> App | None:
    if not isinstance(app, dict):
        c.err(path, "expected object")
        return None
    kind = app.get("type")
    if kind == "subscriber":
        expr = c.keyexpr(app.get("expr"), f"{path}.expr")
        return Subscriber(expr) if expr else None
    if kind in ("publisher", "querier"):
        period = c.number(app, "period_ms", path, integer=True, required=True)
        if period is not None and period <= 0:
            c.err(f"{path}.period_ms", "must be > 0")
        start = c.number(app, "start_ms", path, 0, integer=True)
        if start is not None and start < 0:
            c.err(f"{path}.start_ms", "must be >= 0")
        if kind == "querier":
            expr = c.keyexpr(app.get("expr"), f"{path}.expr")
            if expr and period and period > 0:
                return Querier(expr, period, start or 0)
            return None
        key = c.keyexpr(app.get("key"), f"{path}.key", concrete=True, what="publisher key")
        size = c.number(app, "payload_bytes", path, integer=True, required=True)
        if size is not None and size < 0:
            c.err(f"{path}.payload_bytes", "must be >= 0")
        if key and period and period > 0 and size is not None and size >= 0:
            return Publisher(key, period, size, start or 0)
        return None
    c.err(f"{path}.type", f"unknown app type {kind!r}, expected publisher|subscriber|querier")
    return None


def scenario_from_dict(raw: Any, source: str | None = None) -> Scenario:
    c = _Checker()
    if not isinstance(raw, dict):
        raise ScenarioError(["$: top level must be a JSON object"], source)
    if raw.get("format") != FORMAT:
        c.err("$.format", f"expected {FORMAT}, got {raw.get('format')!r}")
    duration = c.number(raw, "duration_ms", "$", integer=True, required=True)
    if duration is not None and duration <= 0:
        c.err("$.duration_ms", "must be > 0")
    seed = c.number(raw, "seed", "$", 0, integer=True)
    if seed is not None and not 0 <= seed < 2**64:
        c.err("$.seed", "must fit in an unsigned 64-bit integer")
    sample = c.number(raw, "position_sample_ms", "$", 1000, integer=True)
    if sample is not None and sample < 0:
        c.err("$.position_sample_ms", "must be >= 0 (0 disables sampling)")

    bounds = None
    braw = raw.get("bounds")
    if braw is not None:
        if isinstance(braw, dict):
            lo, hi = c.vec3(braw, "lo", "$.bounds"), c.vec3(braw, "hi", "$.bounds")
            if lo and hi:
                if any(l > h for l, h in zip(lo, hi)):
                    c.err("$.bounds", "empty box: lo exceeds hi on some axis")
                elif lo[2] < 0:
                    c.err("$.bounds.lo", "altitude z must be >= 0")
                else:
                    bounds = (lo, hi)
        else:
            c.err("$.bounds", "expected {lo: [x,y,z], hi: [x,y,z]}")

    channel = ChannelParams()
    craw = raw.get("channel", {})
    if not isinstance(craw, dict):
        c.err("$.channel", "expected object")
    else:
        known = set(ChannelParams.field_names())
        vals = {}
        for k, v in craw.items():
            if k not in known:
                c.err(f"$.channel.{k}", "unknown channel parameter")
            elif isinstance(v, bool) or not isinstance(v, (int, float)):
                c.err(f"$.channel.{k}", f"expected number, got {v!r}")
            else:
                vals[k] = float(v)
        channel = ChannelParams(**vals)
        for e in channel.validate():
            c.err("$.channel", e)

    protocol = ProtocolParams()
    praw = raw.get("protocol", {})
    if not isinstance(praw, dict):
        c.err("$.protocol", "expected object")
    else:
        known = set(ProtocolParams().to_dict())
        bad = [k for k in praw if k not in known]
        for k in bad:
            c.err(f"$.protocol.{k}", "unknown protocol constant")
        protocol = ProtocolParams(**{k: v for k, v in praw.items() if k in known})
        for e in protocol.validate():
            c.err("$.protocol", e)

    nodes = []
    nraw = raw.get("nodes")
    if not isinstance(nraw, list) or not nraw:
        c.err("$.nodes", "must be a non-empty list of nodes")
        nraw = []
    first_seen: dict[str, int] = {}
    for i, n in enumerate(nraw):
        path = f"$.nodes[{i}]"
        if not isinstance(n, dict):
            c.err(path, "expected object")
            continue
        nid = n.get("id")
        if not isinstance(nid, str) or not _NODE_ID.fullmatch(nid):
            c.err(f"{path}.id", f"node id must match [A-Za-z0-9_.-]+, got {nid!r}")
            nid = None
        elif nid in first_seen:
            c.err(f"{path}.id", f"duplicate node id {nid!r} (also at $.nodes[{first_seen[nid]}])")
        else:
            first_seen[nid] = i
        role = n.get("role", "UAV")
        if role not in ROLES:
            c.err(f"{path}.role", f"expected UAV or GCS, got {role!r}")
        mob = _parse_mobility(c, n, path, role, bounds is not None)
        apps = []
        araw = n.get("apps", [])
        if not isinstance(araw, list):
            c.err(f"{path}.apps", "expected list")
            araw = []
        for j, a in enumerate(araw):
            app = _parse_app(c, a, f"{path}.apps[{j}]")
            if app is not None:
                apps.append(app)
        if nid and mob:
            nodes.append(NodeSpec(nid, role, mob, tuple(apps)))

    if c.errors:
        raise ScenarioError(c.errors, source)
    return Scenario(duration_ms=duration, seed=seed, bounds=bounds or ((0.0,) * 3, (0.0,) * 3),
                    nodes=tuple(nodes), channel=channel, protocol=protocol,
                    position_sample_ms=sample, name=str(raw.get("name", "")))


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate. OSError propagates; content problems raise ScenarioError."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"line {exc.lineno} column {exc.colno}: {exc.msg}"], str(path)) from exc
    return scenario_from_dict(raw, str(path))
