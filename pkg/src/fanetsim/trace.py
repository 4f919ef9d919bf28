"""JSONL trace: a header line followed by one record per event, fixed field order."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Any, Iterable, Iterator

EVENTS = ("Send", "Recv", "DupDrop", "RangeDrop", "LossDrop", "Deliver", "Expire",
          "Malformed")
POSITION = "Position"

RECORD_FIELDS = ("t", "node", "event", "msg_id", "kind", "key", "payload_bytes",
                 "hops_taken", "origin_time", "peer", "ref")


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class TraceRecord:
    t: int
    node: str
    event: str
    msg_id: str
    kind: str
    key: str
    payload_bytes: int
    hops_taken: int
    origin_time: int
    peer: str | None = None
    ref: str | None = None

    def to_json(self) -> str:
        return _dumps(dict(zip(RECORD_FIELDS, (self.t, self.node, self.event, self.msg_id,
                                               self.kind, self.key, self.payload_bytes,
                                               self.hops_taken, self.origin_time, self.peer,
                                               self.ref))))

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TraceRecord":
        try:
            return cls(**{f: d.get(f) for f in RECORD_FIELDS})
        except TypeError as exc:
            raise TraceError(f"bad trace record {d!r}: {exc}") from exc

    @property
    def origin(self) -> str:
        return self.msg_id.rsplit(":", 1)[0]


_ENCODER = json.JSONEncoder(separators=(",", ":"), ensure_ascii=True)


def _dumps(obj: Any) -> str:
    return _ENCODER.encode(obj)


class TraceWriter:
    def __init__(self, fh: IO[str]) -> None:
        self._fh = fh
        self._last_t = 0
        self.count = 0

    def header(self, header: dict[str, Any]) -> None:
        self._fh.write(_dumps({"type": "header", **header}) + "\n")

    def record(self, rec: TraceRecord) -> None:
        if rec.t < self._last_t:
            raise TraceError(f"trace time went backwards: {rec.t} < {self._last_t}")
        self._last_t = rec.t
        self._fh.write(rec.to_json() + "\n")
        self.count += 1

    def position(self, t: int, node: str, pos: Iterable[float]) -> None:
        self._fh.write(_dumps({"t": t, "node": node, "event": POSITION,
                               "pos": [round(c, 3) for c in pos]}) + "\n")


@dataclass
class Trace:
    header: dict[str, Any]
    records: list[TraceRecord]
    positions: list[tuple[int, str, tuple[float, float, float]]]


def iter_lines(lines: Iterable[str], source: str = "<trace>") -> Iterator[dict[str, Any]]:
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            yield json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceError(f"{source}:{lineno}: invalid JSON: {exc.msg}") from exc


def parse_trace(lines: Iterable[str], source: str = "<trace>") -> Trace:
    objs = iter_lines(lines, source)
    header = next(objs, None)
    if not header or header.get("type") != "header":
        raise TraceError(f"{source}: first line must be the trace header")
    header = {k: v for k, v in header.items() if k != "type"}
    records, positions = [], []
    for obj in objs:
        if obj.get("event") == POSITION:
            positions.append((obj["t"], obj["node"], tuple(obj["pos"])))
        else:
            records.append(TraceRecord.from_dict(obj))
    return Trace(header, records, positions)


def read_trace(path: str | Path) -> Trace:
    with open(path, encoding="utf-8") as fh:
        return parse_trace(fh, str(path))
