"""Drift-plus-penalty control: per-server client selection and task delegation.

Every server solves its own subproblem from local state (queue backlog,
reputation, candidate clients); the task requester then picks the servers
with the most negative ``delta = omega_delegated - omega_idle``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ControllerParams:
    balance: float = 10.0  # V
    mu1: float = 0.1
    mu2: float = 0.9
    tau: float = 1.0
    slot_len: float = 0.1
    task_count: int = 8
    epsilon: float = 0.8
    al_max: float | None = None
    force_assign_all: bool = True

    def __post_init__(self):
        if self.balance < 0 or self.mu1 < 0 or self.mu2 < 0:
            raise ValueError("V, mu1, mu2 must be >= 0")
        if not 0 < self.slot_len <= self.tau:
            raise ValueError("need 0 < slot_len <= tau")

    @property
    def rounds(self) -> float:
        return self.tau / self.slot_len

    @property
    def sentinel(self) -> float:
        return 1.0 + self.slot_len / self.tau if self.al_max is None else self.al_max


def accuracy_loss(mass, tau: float, slot_len: float, sentinel: float | None = None):
    """1 / sqrt((tau / dt) * mass) + dt / tau; ``sentinel`` where mass is 0."""
    sentinel = 1.0 + slot_len / tau if sentinel is None else sentinel
    mass = np.asarray(mass, dtype=float)
    if np.any(mass < 0):
        raise ValueError("data mass must be >= 0")
    with np.errstate(divide="ignore"):
        al = np.where(mass > 0, 1.0 / np.sqrt((tau / slot_len) * np.where(mass > 0, mass, 1.0)) + slot_len / tau,
                      sentinel)
    return float(al) if al.ndim == 0 else al


def _al(params: ControllerParams, mass):
    return accuracy_loss(mass, params.tau, params.slot_len, params.sentinel)


def expected_cluster_cost(pi_top, data_size, gamma_top: float, delegated: bool, fee: float,
                          params: ControllerParams) -> float:
    """Expected cost of one cluster when only top-level clients are rewarded.

    ``pi_top`` and ``data_size`` describe the clients offered the contract.
    """
    pi_top = np.asarray(pi_top, dtype=float)
    data_size = np.asarray(data_size, dtype=float)
    payment = fee * float(delegated) + float(pi_top.sum()) / gamma_top
    mass = float(np.dot(pi_top, data_size))
    return params.mu2 * payment + params.mu1 * _al(params, mass)


@dataclass(frozen=True)
class SelectionDecision:
    selected: tuple[int, ...]
    objective: float


def subset_objective(mask, weights, prices, params: ControllerParams) -> float:
    mask = np.asarray(mask, dtype=bool)
    w = float(np.asarray(weights, dtype=float)[mask].sum())
    c = float(np.asarray(prices, dtype=float)[mask].sum())
    return params.balance * params.mu1 * _al(params, w) + c


def brute_force_subset(weights, prices, params: ControllerParams) -> SelectionDecision:
    """Exhaustive 2^n search; the reference for :func:`solve_client_subset`."""
    w = np.asarray(weights, dtype=float)
    c = np.asarray(prices, dtype=float)
    n = w.size
    if n > 22:
        raise ValueError("brute force limited to 22 candidates")
    masks = ((np.arange(2**n)[:, None] >> np.arange(n)) & 1).astype(bool)
    W = masks @ w
    C = masks @ c
    obj = params.balance * params.mu1 * _al(params, W) + C
    k = int(np.argmin(obj))
    return SelectionDecision(tuple(int(i) for i in np.flatnonzero(masks[k])), float(obj[k]))


class _SubsetSearch:
    """Branch and bound over candidates in descending weight/price order.

    The bound relaxes the remaining candidates to fractional inclusion.
    Buying mass fractionally in ratio order gives a convex piecewise-linear
    price curve, so the relaxed optimum on each segment is the stationary
    point of ``a / sqrt(W) + slope * W`` clipped to the segment.
    """

    def __init__(self, w, c, params: ControllerParams):
        self.w, self.c = w, c
        self.vmu1 = params.balance * params.mu1
        self.rounds = params.rounds
        self.const = params.slot_len / params.tau
        self.sentinel = params.sentinel
        self.a = self.vmu1 / np.sqrt(self.rounds)  # coefficient of W^-1/2
        n = w.size
        self.wl = [float(x) for x in w]
        self.cl = [float(x) for x in c]
        self.sl = [ci / wi for wi, ci in zip(self.wl, self.cl)]
        self.best_obj = np.inf
        self.best_set: list[int] = []
        self.n = n

    def value(self, W, C):
        if W > 0:
            return self.vmu1 * self.const + self.a / math.sqrt(W) + C
        return self.vmu1 * self.sentinel + C

    def bound(self, k, W0, C0):
        # the relaxed cost a / sqrt(W) + price(W) is convex in W, so walk the
        # segments until its stationary point is reached
        lb = self.value(W0, C0) if W0 == 0 else math.inf
        W, C = W0, C0
        for i in range(k, self.n):
            wi, si = self.wl[i], self.sl[i]
            if si == 0.0:
                W += wi
                continue
            target = (self.a / (2.0 * si)) ** (2.0 / 3.0) if self.a > 0 else 0.0
            if target <= W:
                break
            x = min(target - W, wi)
            W += x
            C += si * x
            if x < wi:
                break
        if W > 0:
            lb = min(lb, self.value(W, C))
        return lb

    def run(self, incumbent: list[int]):
        self.best_set = list(incumbent)
        self.best_obj = self.value(float(self.w[incumbent].sum()), float(self.c[incumbent].sum()))
        self._dfs(0, 0.0, 0.0, [])
        return self.best_set, self.best_obj

    def _dfs(self, k, W, C, chosen):
        val = self.value(W, C)
        if val < self.best_obj - 1e-15:
            self.best_obj, self.best_set = val, list(chosen)
        if k == self.n:
            return
        if self.bound(k, W, C) >= self.best_obj - 1e-15:
            return
        chosen.append(k)
        self._dfs(k + 1, W + self.wl[k], C + self.cl[k], chosen)
        chosen.pop()
        self._dfs(k + 1, W, C, chosen)


def _prefix_incumbent(w, c, params: ControllerParams) -> list[int]:
    """Best prefix in ratio order, then add/drop/swap moves until stable."""
    search = _SubsetSearch(w, c, params)
    value = search.value
    n = w.size
    W = np.concatenate([[0.0], np.cumsum(w)])
    C = np.concatenate([[0.0], np.cumsum(c)])
    vals = [value(float(W[k]), float(C[k])) for k in range(n + 1)]
    best_k = int(np.argmin(vals))
    mask = np.zeros(n, bool)
    mask[:best_k] = True
    Wc, Cc, best = float(W[best_k]), float(C[best_k]), vals[best_k]
    wl, cl = w.tolist(), c.tolist()
    improved = True
    while improved:
        improved = False
        for i in range(n):
            sign = -1.0 if mask[i] else 1.0
            val = value(Wc + sign * wl[i], Cc + sign * cl[i])
            if val < best - 1e-15:
                mask[i] = not mask[i]
                Wc, Cc, best, improved = Wc + sign * wl[i], Cc + sign * cl[i], val, True
        for i in np.flatnonzero(mask):
            for j in np.flatnonzero(~mask):
                Wt, Ct = Wc - wl[i] + wl[j], Cc - cl[i] + cl[j]
                val = value(Wt, Ct)
                if val < best - 1e-15:
                    mask[i], mask[j] = False, True
                    Wc, Cc, best, improved = Wt, Ct, val, True
                    break
            if improved:
                break
    return [int(i) for i in np.flatnonzero(mask)]


def solve_client_subset(weights, prices, params: ControllerParams) -> SelectionDecision:
    """Minimise V mu1 AL(sum w) + sum c over subsets of candidates.

    ``weights[m] = pi_top * d`` and ``prices[m] = V mu2 pi_top / gamma_top``.
    Candidates with zero weight never help and are dropped.  Returns indices
    into the input arrays.
    """
    w = np.asarray(weights, dtype=float)
    c = np.asarray(prices, dtype=float)
    if w.shape != c.shape:
        raise ValueError("weights and prices must align")
    useful = np.flatnonzero(w > 0)
    if useful.size == 0:
        return SelectionDecision((), subset_objective(np.zeros(w.size, bool), w, c, params))
    ratio = np.where(c[useful] > 0, w[useful] / np.where(c[useful] > 0, c[useful], 1.0), np.inf)
    order = useful[np.lexsort((useful, -ratio))]
    ws, cs = w[order], c[order]
    incumbent = _prefix_incumbent(ws, cs, params)
    chosen, obj = _SubsetSearch(ws, cs, params).run(incumbent)
    selected = tuple(sorted(int(order[i]) for i in chosen))
    return SelectionDecision(selected, float(obj))


def server_objective(queue: float, reputation_value: float, selection_objective: float, fee: float,
                     params: ControllerParams) -> tuple[float, float]:
    """(omega if the server takes a task, omega if it stays idle).

    ``selection_objective`` is the optimum of :func:`solve_client_subset`,
    i.e. V mu1 AL(selected mass) + V mu2 sum(pi_top) / gamma_top.
    """
    v = params.balance
    delegated = params.mu2 * v * fee - queue + selection_objective
    idle = queue * params.epsilon * reputation_value + v * params.mu1 * params.sentinel
    return delegated, idle


@dataclass(frozen=True)
class DelegationAction:
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.matrix, dtype=int)
        if a.ndim != 2 or np.any((a != 0) & (a != 1)):
            raise ValueError("delegation matrix must be a binary K x N array")
        if np.any(a.sum(axis=1) > 1):
            raise ValueError("a task can go to at most one server")
        if np.any(a.sum(axis=0) > 1):
            raise ValueError("a server can hold at most one task")
        object.__setattr__(self, "matrix", a)

    @classmethod
    def from_servers(cls, servers, task_count: int, server_count: int) -> "DelegationAction":
        """Task ``k`` goes to the ``k``-th listed server."""
        a = np.zeros((task_count, server_count), dtype=int)
        for k, n in enumerate(servers):
            a[k, n] = 1
        return cls(a)

    @classmethod
    def none(cls, task_count: int, server_count: int) -> "DelegationAction":
        return cls(np.zeros((task_count, server_count), dtype=int))

    @property
    def delegated(self) -> np.ndarray:
        return self.matrix.sum(axis=0)

    @property
    def servers(self) -> tuple[int, ...]:
        return tuple(int(n) for n in np.flatnonzero(self.delegated))


def delegate_famus(omega_delegated, omega_idle, task_count: int, queues=None,
                   force_assign_all: bool = True) -> DelegationAction:
    """Minimise the separable objective by taking the K smallest deltas.

    Ties prefer the longer queue, then the smaller server index.  Without
    ``force_assign_all`` only servers with a negative delta get a task.
    """
    od = np.asarray(omega_delegated, dtype=float)
    oi = np.asarray(omega_idle, dtype=float)
    n = od.size
    if task_count > n:
        raise ValueError("K must not exceed N")
    delta = od - oi
    q = np.zeros(n) if queues is None else np.asarray(queues, dtype=float)
    order = np.lexsort((np.arange(n), -q, delta))[:task_count]
    if not force_assign_all:
        order = [i for i in order if delta[i] < 0]
    return DelegationAction.from_servers([int(i) for i in order], task_count, n)


def delegation_objective(action: DelegationAction, omega_delegated, omega_idle) -> float:
    d = action.delegated.astype(bool)
    return float(np.asarray(omega_delegated)[d].sum() + np.asarray(omega_idle)[~d].sum())


def brute_force_delegation(omega_delegated, omega_idle, task_count: int,
                           force_assign_all: bool = True) -> tuple[tuple[int, ...], float]:
    """Exhaustive search over server subsets of size K (or at most K)."""
    od = np.asarray(omega_delegated, dtype=float)
    oi = np.asarray(omega_idle, dtype=float)
    n = od.size
    sizes = [task_count] if force_assign_all else range(task_count + 1)
    best, best_set = np.inf, ()
    base = oi.sum()
    for k in sizes:
        for subset in itertools.combinations(range(n), k):
            idx = list(subset)
            val = base + od[idx].sum() - oi[idx].sum()
            if val < best:
                best, best_set = val, subset
    return best_set, float(best)
