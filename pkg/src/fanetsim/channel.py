"""Log-distance link budget standing in for a 5G sidelink broadcast medium."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Any, Iterable, Mapping, NamedTuple

from .core import US_PER_S, RandomStream
from .mobility import Position, distance

HEADER_OVERHEAD = 48  # bytes added to every message on air


@dataclass(frozen=True)
class ChannelParams:
    carrier_freq: float = 5.9e9
    ref_dist: float = 1.0
    pathloss_exponent: float = 2.75
    tx_power: float = 23.0
    noise_floor: float = -95.0
    snr_threshold: float = 5.0
    bitrate: float = 12e6
    extra_loss_prob: float = 0.0
    propagation_speed: float = 2.998e8

    def validate(self) -> list[str]:
        errors = []
        if not self.pathloss_exponent > 0:
            errors.append("pathloss_exponent must be > 0")
        if not self.ref_dist > 0:
            errors.append("ref_dist must be > 0")
        if not self.bitrate > 0:
            errors.append("bitrate must be > 0")
        if not 0.0 <= self.extra_loss_prob <= 1.0:
            errors.append("extra_loss_prob must be within [0, 1]")
        if not self.carrier_freq > 0 or not self.propagation_speed > 0:
            errors.append("carrier_freq and propagation_speed must be > 0")
        return errors

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def ref_loss_db(params: ChannelParams) -> float:
    """Free-space loss at the reference distance."""
    return 20.0 * math.log10(4.0 * math.pi * params.ref_dist * params.carrier_freq
                             / params.propagation_speed)


def path_loss_db(params: ChannelParams, d: float) -> float:
    if d <= 0:
        raise ValueError(f"distance must be > 0, got {d}")
    pl0 = ref_loss_db(params)
    if d <= params.ref_dist:
        return pl0
    return pl0 + 10.0 * params.pathloss_exponent * math.log10(d / params.ref_dist)


def snr_db(params: ChannelParams, d: float) -> float:
    return params.tx_power - path_loss_db(params, d) - params.noise_floor


def decode_range(params: ChannelParams) -> float:
    """Distance at which SNR equals the decode threshold (closed form)."""
    margin = params.tx_power - params.noise_floor - params.snr_threshold - ref_loss_db(params)
    return params.ref_dist * 10.0 ** (margin / (10.0 * params.pathloss_exponent))


def tx_delay(payload_bytes: int, params: ChannelParams) -> int:
    if payload_bytes < 0:
        raise ValueError("payload_bytes must be >= 0")
    bits = 8 * (payload_bytes + HEADER_OVERHEAD)
    # Integer ceil when bitrate is integral keeps exact cases exact.
    if float(params.bitrate).is_integer():
        return -(-bits * US_PER_S // int(params.bitrate))
    return math.ceil(bits / params.bitrate * US_PER_S)


def prop_delay(d: float, params: ChannelParams) -> int:
    return round(d / params.propagation_speed * US_PER_S)


class Reception(NamedTuple):
    rx_node: str
    arrive_at: int
    snr: float
    distance: float


class Drop(NamedTuple):
    rx_node: str
    reason: str  # "range" or "loss"
    snr: float


def broadcast(tx: str, payload_bytes: int, t: int, positions: Mapping[str, Position],
              params: ChannelParams, rng: RandomStream | None,
              receivers: Iterable[str] | None = None,
              dropped: list[Drop] | None = None) -> list[Reception]:
    """Evaluate one transmission against every other node.

    ``positions`` are sampled at the send instant. ``receivers`` restricts the
    evaluation (unicast); iteration follows the mapping's order so random
    draws are reproducible.
    """
    src = positions[tx]
    candidates = positions.keys() if receivers is None else receivers
    delay = tx_delay(payload_bytes, params)
    out = []
    for rx in candidates:
        if rx == tx:
            continue
        d = distance(src, positions[rx])
        snr = snr_db(params, d) if d > 0 else snr_db(params, params.ref_dist)
        if snr < params.snr_threshold:
            if dropped is not None:
                dropped.append(Drop(rx, "range", snr))
            continue
        if params.extra_loss_prob > 0.0 and rng is not None:
            if rng.random() < params.extra_loss_prob:
                if dropped is not None:
                    dropped.append(Drop(rx, "loss", snr))
                continue
        out.append(Reception(rx, t + delay + prop_delay(d, params), snr, d))
    return out


def params_from_overrides(overrides: Mapping[str, Any] | None) -> ChannelParams:
    if not overrides:
        return ChannelParams()
    return ChannelParams(**{k: float(v) for k, v in overrides.items()})
