"""Link gains, Shannon rates and client participation costs.

Unit convention: rates are reported in bit/s by :func:`shannon_rate`; the
cost model takes them in Mbit/s so that ``alpha * R`` and ``beta * d`` (d in
MB) are of comparable magnitude.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_DISTANCE = 1.0  # m


class DegenerateCostError(ValueError):
    pass


@dataclass(frozen=True)
class ClientProfile:
    alpha: float  # cost per Mbit/s
    beta: float  # cost per MB
    data_size: float  # MB

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta >= 0 and self.data_size > 0):
            raise ValueError(f"invalid client profile {self}")


@dataclass(frozen=True)
class ClientCostReport:
    rate: float  # bit/s
    cost: float
    type_value: float
    type_index: int | None = None


def pathloss(distance, ref_gain: float, exponent: float):
    d = np.maximum(np.asarray(distance, dtype=float), MIN_DISTANCE)
    return ref_gain * d ** (-exponent)


def rayleigh_power(rng: np.random.Generator, size=None):
    """|h|^2 for unit-power Rayleigh fading, i.e. Exp(1)."""
    return rng.exponential(1.0, size=size)


def channel_gain(server_pos, client_pos, rng: np.random.Generator | None, ref_gain: float = 1e-3,
                 exponent: float = 3.0, fading: bool = True):
    """Path loss times Rayleigh power; ``rng=None`` or ``fading=False`` fixes |h|^2 = 1."""
    diff = np.asarray(client_pos, dtype=float) - np.asarray(server_pos, dtype=float)
    dist = np.hypot(diff[..., 0], diff[..., 1])
    g = pathloss(dist, ref_gain, exponent)
    if fading and rng is not None:
        g = g * rayleigh_power(rng, size=np.shape(dist) or None)
    return g


def shannon_rate(bandwidth, tx_power, gain, noise_psd):
    """B * log2(1 + p G / (N0 B)) in bit/s."""
    bandwidth = np.asarray(bandwidth, dtype=float)
    if np.any(bandwidth <= 0):
        raise ValueError("bandwidth must be > 0")
    snr = np.asarray(tx_power) * np.asarray(gain) / (noise_psd * bandwidth)
    out = bandwidth * np.log2(1.0 + snr)
    return float(out) if out.ndim == 0 else out


def bandwidth_share(total_bandwidth: float, participant_count: int) -> float:
    if participant_count < 1:
        raise ValueError("bandwidth share undefined for zero participants")
    return total_bandwidth / participant_count


def participation_cost(profile: ClientProfile, rate: float, grid=None) -> ClientCostReport:
    """alpha * R[Mbit/s] + beta * d; the type is the reciprocal of the cost.

    ``grid`` (a :class:`famus.contract.TypeGrid`) fills in the type index.
    """
    if rate < 0:
        raise ValueError("rate must be >= 0")
    cost = profile.alpha * rate / 1e6 + profile.beta * profile.data_size
    if cost <= 0:
        raise DegenerateCostError("participation cost is zero")
    gamma = 1.0 / cost
    idx = grid.level_of(gamma) if grid is not None else None
    return ClientCostReport(rate=rate, cost=cost, type_value=gamma, type_index=idx)


def costs_vectorized(alpha, beta, data_size, rate):
    """Array form of :func:`participation_cost`, returning the costs."""
    return np.asarray(alpha) * np.asarray(rate) / 1e6 + np.asarray(beta) * np.asarray(data_size)
