"""Hierarchical key expressions with ``*`` and ``**`` wildcards."""

from __future__ import annotations

import re
from functools import lru_cache

_CHUNK = re.compile(r"[a-z0-9_-]+")


class KeyExprError(ValueError):
    pass


class KeyExpr:
    """Normalized key expression. Compares and hashes by its text form."""

    __slots__ = ("chunks", "text")

    def __init__(self, chunks: tuple[str, ...]) -> None:
        self.chunks = chunks
        self.text = "/".join(chunks)

    @classmethod
    def parse(cls, text: str) -> "KeyExpr":
        return key_expr_normalize(text)

    @property
    def is_concrete(self) -> bool:
        return not any(c in ("*", "**") for c in self.chunks)

    def __str__(self) -> str:
        return self.text

    def __repr__(self) -> str:
        return f"KeyExpr({self.text!r})"

    def __eq__(self, other: object) -> bool:
        if isinstance(other, KeyExpr):
            return self.text == other.text
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.text)


def _as_expr(e: KeyExpr | str) -> KeyExpr:
    return e if isinstance(e, KeyExpr) else key_expr_normalize(e)


def key_expr_normalize(text: str) -> KeyExpr:
    if not isinstance(text, str) or text == "":
        raise KeyExprError("key expression must be a non-empty string")
    chunks: list[str] = []
    for i, chunk in enumerate(text.split("/")):
        if chunk == "":
            raise KeyExprError(f"empty chunk at position {i} in {text!r}")
        if chunk == "**":
            if chunks and chunks[-1] == "**":
                continue
        elif chunk != "*" and not _CHUNK.fullmatch(chunk):
            if "*" in chunk:
                raise KeyExprError(f"chunk {chunk!r} mixes wildcard and literal characters")
            raise KeyExprError(f"illegal characters in chunk {chunk!r}")
        chunks.append(chunk)
    return KeyExpr(tuple(chunks))


def key_expr_match(expr: KeyExpr | str, key: KeyExpr | str) -> bool:
    """True if the concrete ``key`` is matched by ``expr``."""
    expr, key = _as_expr(expr), _as_expr(key)
    if not key.is_concrete:
        raise KeyExprError(f"key {key.text!r} must be wildcard-free")
    return _match(expr.chunks, key.chunks)


@lru_cache(maxsize=8192)
def _match(pattern: tuple[str, ...], key: tuple[str, ...]) -> bool:
    # reachable[j]: pattern prefix consumed so far can match key[:j]
    reachable = [True] + [False] * len(key)
    for chunk in pattern:
        nxt = [False] * (len(key) + 1)
        if chunk == "**":
            seen = False
            for j in range(len(key) + 1):
                seen = seen or reachable[j]
                nxt[j] = seen
        else:
            for j in range(len(key)):
                if reachable[j] and (chunk == "*" or chunk == key[j]):
                    nxt[j + 1] = True
        reachable = nxt
    return reachable[-1]


def key_expr_intersects(a: KeyExpr | str, b: KeyExpr | str) -> bool:
    """True if at least one concrete key is matched by both expressions."""
    return _intersects(_as_expr(a).chunks, _as_expr(b).chunks)


@lru_cache(maxsize=8192)
def _intersects(a: tuple[str, ...], b: tuple[str, ...]) -> bool:
    na, nb = len(a), len(b)
    memo: dict[tuple[int, int], bool] = {}

    def go(i: int, j: int) -> bool:
        k = (i, j)
        if k in memo:
            return memo[k]
        if i == na and j == nb:
            r = True
        elif i == na:
            r = all(c == "**" for c in b[j:])
        elif j == nb:
            r = all(c == "**" for c in a[i:])
        elif a[i] == "**":
            # either it stops here, or it swallows whatever b[j] produces
            r = go(i + 1, j) or go(i, j + 1)
        elif b[j] == "**":
            r = go(i, j + 1) or go(i + 1, j)
        else:
            r = (a[i] == "*" or b[j] == "*" or a[i] == b[j]) and go(i + 1, j + 1)
        memo[k] = r
        return r

    return go(0, 0)
