"""Service quality, Beta reputation, virtual queues and Jain's index."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


class UndefinedQualityError(ValueError):
    pass


@dataclass(frozen=True)
class ReputationState:
    positive_count: int = 0
    negative_count: int = 0

    @property
    def reputation(self) -> float:
        return reputation(self.positive_count, self.negative_count)


def reputation(phi, psi):
    """Mean of Beta(phi + 1, psi + 1)."""
    return (np.asarray(phi) + 1.0) / (np.asarray(phi) + np.asarray(psi) + 2.0)


@dataclass(frozen=True)
class VirtualQueue:
    backlog: float = 0.0
    discount: float = 1.0

    def __post_init__(self):
        if self.backlog < 0:
            raise ValueError("backlog must be >= 0")
        if not 0 <= self.discount <= 1:
            raise ValueError("discount must lie in [0, 1]")


def service_quality(al_values) -> np.ndarray:
    """exp(-AL_n / sum_j AL_j) for every server."""
    al = np.asarray(al_values, dtype=float)
    if np.any(al < 0):
        raise ValueError("accuracy losses must be >= 0")
    total = al.sum()
    if total <= 0:
        raise UndefinedQualityError("all accuracy losses are zero")
    return np.exp(-al / total)


def update_reputation(state: ReputationState, sigma: float, sigma0: float) -> ReputationState:
    if not 0 < sigma0 <= 1:
        raise ValueError("sigma0 must lie in (0, 1]")
    if sigma >= sigma0:
        return replace(state, positive_count=state.positive_count + 1)
    return replace(state, negative_count=state.negative_count + 1)


def queue_step(backlog, reputation_value, delegated, discount):
    """max(Q + eps * g * [idle] - delegated, 0), elementwise."""
    delegated = np.asarray(delegated, dtype=float)
    arrival = discount * np.asarray(reputation_value) * (delegated == 0)
    return np.maximum(np.asarray(backlog, dtype=float) + arrival - delegated, 0.0)


def update_queue(queue: VirtualQueue, reputation_value: float, delegated: int) -> VirtualQueue:
    if delegated not in (0, 1):
        raise ValueError("a server holds at most one task per slot")
    q = float(queue_step(queue.backlog, reputation_value, delegated, queue.discount))
    return replace(queue, backlog=q)


def lyapunov(backlogs) -> float:
    q = np.asarray(backlogs, dtype=float)
    return 0.5 * float(np.dot(q, q))


def drift_bound(backlogs, reputation_values, delegated, discount, theta: float = 1.0) -> float:
    """N * theta + sum_n Q_n (eps g_n [idle] - delegated_n)."""
    q = np.asarray(backlogs, dtype=float)
    d = np.asarray(delegated, dtype=float)
    arrival = discount * np.asarray(reputation_values) * (d == 0)
    return q.size * theta + float(np.dot(q, arrival - d))


def _slope(y: np.ndarray) -> np.ndarray:
    """Least-squares slope of each column of ``y`` against 0..len-1."""
    n = y.shape[0]
    if n < 2:
        return np.zeros(y.shape[1:])
    t = np.arange(n, dtype=float)
    t -= t.mean()
    return (t @ (y - y.mean(axis=0))) / (t @ t)


def stability_stat(history, window: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Per-server time-averaged backlog and trailing least-squares slope.

    ``history`` has shape (T, N).  The slope is fitted over the last
    ``window`` slots, by default the last half of the horizon.
    """
    h = np.asarray(history, dtype=float)
    if h.ndim == 1:
        h = h[:, None]
    if h.shape[0] < 1:
        raise ValueError("need at least one slot of history")
    window = window or max(h.shape[0] // 2, 1)
    return h.mean(axis=0), _slope(h[-window:])


@dataclass
class FairnessLedger:
    delegation_counts: np.ndarray
    quality_sums: np.ndarray

    @classmethod
    def empty(cls, n: int) -> "FairnessLedger":
        return cls(np.zeros(n), np.zeros(n))

    def record(self, delegated, sigma) -> None:
        self.delegation_counts = self.delegation_counts + np.asarray(delegated, dtype=float)
        self.quality_sums = self.quality_sums + np.asarray(sigma, dtype=float)


def jfi_ratios(ratios) -> float:
    x = np.asarray(ratios, dtype=float)
    denom = x.size * float(np.dot(x, x))
    if denom == 0:
        raise ZeroDivisionError("JFI undefined when every ratio is zero")
    return float(x.sum() ** 2 / denom)


def jfi(ledger: FairnessLedger) -> float:
    """Jain's index over delegation counts normalised by accumulated quality."""
    sigma = np.asarray(ledger.quality_sums, dtype=float)
    if np.any(sigma <= 0):
        raise ZeroDivisionError("JFI undefined: a server has zero accumulated service quality")
    return jfi_ratios(np.asarray(ledger.delegation_counts, dtype=float) / sigma)
