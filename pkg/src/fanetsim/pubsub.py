"""Brokerless named-data layer: discovery beacons, flooding with dedup, query/reply.

Publications and queries are flooded with a hop budget and a per-node seen-set.
Queries leave pending-query breadcrumbs so replies retrace the reverse path,
and replies are cached in a small per-node content store.
"""

from __future__ import annotations

from collections import OrderedDict, deque
from dataclasses import asdict, dataclass, replace
from enum import Enum
from typing import Protocol

from .core import US_PER_MS
from .keyexpr import KeyExpr, KeyExprError, key_expr_intersects, key_expr_match, key_expr_normalize


class Kind(str, Enum):
    BEACON = "Beacon"
    PUBLISH = "Publish"
    QUERY = "Query"
    REPLY = "Reply"


@dataclass(frozen=True)
class ProtocolParams:
    hop_limit: int = 8
    beacon_interval_ms: int = 1000
    pit_lifetime_ms: int = 2000
    pit_capacity: int = 1024
    cs_capacity: int = 64
    seen_set_capacity: int = 4096

    @property
    def beacon_interval(self) -> int:
        return self.beacon_interval_ms * US_PER_MS

    @property
    def neighbor_expiry(self) -> int:
        return 3 * self.beacon_interval

    @property
    def pit_lifetime(self) -> int:
        return self.pit_lifetime_ms * US_PER_MS

    def validate(self) -> list[str]:
        errors = []
        for name, value in asdict(self).items():
            if not isinstance(value, int) or isinstance(value, bool):
                errors.append(f"{name} must be an integer")
            elif name == "beacon_interval_ms" and value < 0:
                errors.append("beacon_interval_ms must be >= 0 (0 disables beacons)")
            elif name != "beacon_interval_ms" and value < 1:
                errors.append(f"{name} must be >= 1")
        return errors

    def to_dict(self) -> dict[str, int]:
        return asdict(self)


@dataclass(frozen=True)
class Message:
    msg_id: str
    origin: str
    kind: Kind
    key: KeyExpr
    payload_bytes: int
    hop_budget: int
    hops_taken: int
    origin_time: int
    query_ref: str | None = None

    def forwarded(self) -> "Message":
        return replace(self, hop_budget=self.hop_budget - 1, hops_taken=self.hops_taken + 1)


class Net(Protocol):
    """What a node needs from the surrounding network."""

    def now(self) -> int: ...

    def transmit(self, node: str, msg: Message, dest: str | None = None) -> None: ...

    def log(self, event: str, node: str, msg: Message, hops: int,
            peer: str | None = None) -> None: ...


class NeighborTable:
    def __init__(self, expiry: int) -> None:
        self.expiry = expiry
        self.last_seen: dict[str, int] = {}

    def refresh(self, node: str, t: int) -> None:
        self.last_seen[node] = t

    def neighbors(self, t: int) -> set[str]:
        return {n for n, seen in self.last_seen.items() if t - seen <= self.expiry}


@dataclass
class PendingQuery:
    upstream: set[str]
    key: KeyExpr
    expires_at: int


class PendingQueryTable:
    def __init__(self, capacity: int) -> None:
        self.capacity = capacity
        self.entries: OrderedDict[str, PendingQuery] = OrderedDict()

    def add(self, query_id: str, upstream: str, key: KeyExpr, expires_at: int) -> None:
        entry = self.entries.get(query_id)
        if entry is not None:
            entry.upstream.add(upstream)
            return
        self.entries[query_id] = PendingQuery({upstream}, key, expires_at)
        while len(self.entries) > self.capacity:
            self.entries.popitem(last=False)

    def lookup(self, query_id: str, t: int) -> PendingQuery | None:
        """Live entry or None; an expired entry is removed on access."""
        entry = self.entries.get(query_id)
        if entry is not None and t >= entry.expires_at:
            del self.entries[query_id]
            return None
        return entry

    def consume(self, query_id: str) -> None:
        self.entries.pop(query_id, None)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class CacheEntry:
    payload_bytes: int
    stored_at: int
    origin_msg: str


class ContentStore:
    """LRU cache of concrete keys."""

    def __init__(self, capacity: int) -> None:
        self.capacity = capacity
        self._data: OrderedDict[KeyExpr, CacheEntry] = OrderedDict()

    def put(self, key: KeyExpr, entry: CacheEntry) -> None:
        self._data[key] = entry
        self._data.move_to_end(key)
        while len(self._data) > self.capacity:
            self._data.popitem(last=False)

    def get(self, key: KeyExpr) -> CacheEntry | None:
        entry = self._data.get(key)
        if entry is not None:
            self._data.move_to_end(key)
        return entry

    def matching(self, expr: KeyExpr) -> list[tuple[KeyExpr, CacheEntry]]:
        hits = [(k, e) for k, e in self._data.items() if key_expr_intersects(expr, k)]
        for k, _ in hits:
            self._data.move_to_end(k)
        return hits

    def __len__(self) -> int:
        return len(self._data)

    def __contains__(self, key: KeyExpr) -> bool:
        return key in self._data


class SeenSet:
    """Bounded msg-id set with FIFO eviction."""

    def __init__(self, capacity: int) -> None:
        self.capacity = capacity
        self._order: deque[str] = deque()
        self._ids: set[str] = set()

    def add(self, msg_id: str) -> bool:
        """Record ``msg_id``; False if it was already present."""
        if msg_id in self._ids:
            return False
        self._ids.add(msg_id)
        self._order.append(msg_id)
        if len(self._order) > self.capacity:
            self._ids.discard(self._order.popleft())
        return True

    def __contains__(self, msg_id: str) -> bool:
        return msg_id in self._ids

    def __len__(self) -> int:
        return len(self._ids)


class Peer:
    """Per-node protocol state and message handling."""

    def __init__(self, node_id: str, net: Net, params: ProtocolParams | None = None) -> None:
        self.id = node_id
        self.net = net
        self.params = params or ProtocolParams()
        self.neighbors = NeighborTable(self.params.neighbor_expiry)
        self.pit = PendingQueryTable(self.params.pit_capacity)
        self.cs = ContentStore(self.params.cs_capacity)
        self.seen = SeenSet(self.params.seen_set_capacity)
        self.subscriptions: list[KeyExpr] = []
        self.queryables: dict[KeyExpr, int] = {}
        self.local_queries: dict[str, PendingQuery] = {}
        self._seq = 0
        self._beacon_seq = 0

    def _next_id(self) -> str:
        msg_id = f"{self.id}:{self._seq}"
        self._seq += 1
        return msg_id

    # local API

    def subscribe(self, expr: KeyExpr | str) -> int:
        if not isinstance(expr, KeyExpr):
            expr = key_expr_normalize(expr)
        self.subscriptions.append(expr)
        return len(self.subscriptions) - 1

    def declare_queryable(self, key: KeyExpr | str, payload_bytes: int) -> None:
        if not isinstance(key, KeyExpr):
            key = key_expr_normalize(key)
        if not key.is_concrete:
            raise KeyExprError(f"queryable key {key.text!r} must be concrete")
        self.queryables[key] = payload_bytes

    def emit_beacon(self) -> Message:
        msg = Message(f"{self.id}:b{self._beacon_seq}", self.id, Kind.BEACON,
                      KeyExpr(("beacon",)), 0, 1, 0, self.net.now())
        self._beacon_seq += 1
        self.net.transmit(self.id, msg)
        return msg

    def publish(self, key: KeyExpr | str, payload_bytes: int) -> Message:
        if not isinstance(key, KeyExpr):
            key = key_expr_normalize(key)
        if not key.is_concrete:
            raise KeyExprError(f"publish key {key.text!r} must be wildcard-free")
        t = self.net.now()
        msg = Message(self._next_id(), self.id, Kind.PUBLISH, key, payload_bytes,
                      self.params.hop_limit, 0, t)
        self.seen.add(msg.msg_id)
        self.net.transmit(self.id, msg)
        if self._wants(key):
            self.net.log("Deliver", self.id, msg, 0)
        return msg

    def query(self, expr: KeyExpr | str) -> str:
        if not isinstance(expr, KeyExpr):
            expr = key_expr_normalize(expr)
        t = self.net.now()
        msg = Message(self._next_id(), self.id, Kind.QUERY, expr, 0,
                      self.params.hop_limit, 0, t)
        self.seen.add(msg.msg_id)
        self.local_queries[msg.msg_id] = PendingQuery(set(), expr, t + self.params.pit_lifetime)
        self.net.transmit(self.id, msg)
        return msg.msg_id

    def _wants(self, key: KeyExpr) -> bool:
        return any(key_expr_match(s, key) for s in self.subscriptions)

    # network input

    def handle_message(self, msg: Message, sender: str) -> None:
        hops = msg.hops_taken + 1
        self.net.log("Recv", self.id, msg, hops, peer=sender)
        if not self._well_formed(msg):
            self.net.log("Malformed", self.id, msg, hops, peer=sender)
            return
        if msg.kind is Kind.BEACON:
            self.neighbors.refresh(sender, self.net.now())
            return
        if not self.seen.add(msg.msg_id):
            self.net.log("DupDrop", self.id, msg, hops, peer=sender)
            return
        if msg.kind is Kind.PUBLISH:
            self._on_publish(msg, hops)
        elif msg.kind is Kind.QUERY:
            self._on_query(msg, sender, hops)
        else:
            self._on_reply(msg, hops)

    @staticmethod
    def _well_formed(msg: Message) -> bool:
        if not isinstance(msg.kind, Kind) or not isinstance(msg.key, KeyExpr):
            return False
        if msg.hop_budget < 1 or msg.hops_taken < 0 or msg.payload_bytes < 0:
            return False
        if msg.kind in (Kind.PUBLISH, Kind.REPLY) and not msg.key.is_concrete:
            return False
        if msg.kind is Kind.REPLY and msg.query_ref is None:
            return False
        return True

    def _on_publish(self, msg: Message, hops: int) -> None:
        if self._wants(msg.key):
            self.net.log("Deliver", self.id, msg, hops)
        if msg.hop_budget > 1:
            self.net.transmit(self.id, msg.forwarded())

    def _on_query(self, msg: Message, sender: str, hops: int) -> None:
        answers: dict[KeyExpr, tuple[int, str]] = {}
        for key, entry in self.cs.matching(msg.key):
            answers[key] = (entry.payload_bytes, entry.origin_msg)
        for key, size in self.queryables.items():
            if key_expr_match(msg.key, key):
                answers[key] = (size, msg.msg_id)
        if answers:
            for key in sorted(answers, key=lambda k: k.text):
                reply = Message(self._next_id(), self.id, Kind.REPLY, key, answers[key][0],
                                self.params.hop_limit, 0, msg.origin_time, msg.msg_id)
                self.seen.add(reply.msg_id)
                self.net.transmit(self.id, reply, dest=sender)
            return
        self.pit.add(msg.msg_id, sender, msg.key, self.net.now() + self.params.pit_lifetime)
        if msg.hop_budget > 1:
            self.net.transmit(self.id, msg.forwarded())

    def _on_reply(self, msg: Message, hops: int) -> None:
        t = self.net.now()
        self.cs.put(msg.key, CacheEntry(msg.payload_bytes, t, msg.msg_id))
        mine = self.local_queries.get(msg.query_ref)
        if mine is not None:
            if t < mine.expires_at:
                self.net.log("Deliver", self.id, msg, hops)
            else:
                del self.local_queries[msg.query_ref]
                self.net.log("Expire", self.id, msg, hops)
            return
        entry = self.pit.lookup(msg.query_ref, t)
        if entry is None:
            self.net.log("Expire", self.id, msg, hops)
            return
        self.pit.consume(msg.query_ref)
        if msg.hop_budget > 1:
            fwd = msg.forwarded()
            for up in sorted(entry.upstream):
                self.net.transmit(self.id, fwd, dest=up)
