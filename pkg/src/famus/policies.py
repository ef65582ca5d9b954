"""FAMuS and the five baseline delegation/selection policies.

All policies share the contract in force (the screening menu in the
periodic-contract scenario, a single uniform item otherwise); they differ in
which servers get tasks and which candidates receive an offer.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .config import ConfigError
from .controller import (
    ControllerParams,
    DelegationAction,
    SelectionDecision,
    accuracy_loss,
    delegate_famus,
    server_objective,
    solve_client_subset,
    subset_objective,
)


@dataclass
class Snapshot:
    """What the controller sees at a release slot.

    ``candidates[n]`` are the client ids inside cluster ``n``; ``pi_top[n]``
    and ``data_size[n]`` align with them.
    """

    candidates: list[np.ndarray]
    pi_top: list[np.ndarray]
    data_size: list[np.ndarray]
    gamma_top: float
    queues: np.ndarray
    reputation: np.ndarray
    fees: np.ndarray

    @property
    def num_servers(self) -> int:
        return len(self.candidates)


@dataclass
class Decision:
    action: DelegationAction
    selections: dict[int, tuple[int, ...]]
    omega_delegated: np.ndarray | None = None
    omega_idle: np.ndarray | None = None


def contract_selection(snap: Snapshot, n: int, params: ControllerParams) -> SelectionDecision:
    """Cost-optimal offer set for server ``n`` (ids, objective at V = 1).

    The argmin does not depend on V > 0, so it is solved once at V = 1 and
    the objective is rescaled by the caller.
    """
    unit = replace(params, balance=1.0)
    pi, d = snap.pi_top[n], snap.data_size[n]
    sel = solve_client_subset(pi * d, params.mu2 * pi / snap.gamma_top, unit)
    ids = tuple(int(snap.candidates[n][i]) for i in sel.selected)
    return SelectionDecision(ids, sel.objective)


def _omegas(snap: Snapshot, params: ControllerParams, with_queues: bool):
    sels = {}
    od = np.zeros(snap.num_servers)
    oi = np.zeros(snap.num_servers)
    for n in range(snap.num_servers):
        sel = contract_selection(snap, n, params)
        sels[n] = sel.selected
        q = snap.queues[n] if with_queues else 0.0
        od[n], oi[n] = server_objective(q, snap.reputation[n], params.balance * sel.objective,
                                        snap.fees[n], params)
    return sels, od, oi


def _cost_deltas(snap: Snapshot, params: ControllerParams):
    """Myopic per-server cost deltas, queues ignored, scaled to V = 1."""
    unit = replace(params, balance=1.0)
    sels, od, oi = _omegas(snap, unit, with_queues=False)
    return sels, od, oi


class Policy:
    name = "base"
    contract_based = True

    def __init__(self, params: ControllerParams, rng: np.random.Generator):
        self.params = params
        self.rng = rng

    def decide(self, snap: Snapshot) -> Decision:
        raise NotImplementedError

    def _random_servers(self, n: int) -> list[int]:
        k = self.params.task_count
        return [int(i) for i in self.rng.choice(n, size=k, replace=False)]


class FamusPolicy(Policy):
    name = "famus"

    def decide(self, snap):
        sels, od, oi = _omegas(snap, self.params, with_queues=True)
        action = delegate_famus(od, oi, self.params.task_count, snap.queues, self.params.force_assign_all)
        return Decision(action, {n: sels[n] for n in action.servers}, od, oi)


class NCFPolicy(Policy):
    """Contract-optimal selection, delegation to the cheapest servers."""

    name = "ncf"

    def decide(self, snap):
        sels, od, oi = _cost_deltas(snap, self.params)
        action = delegate_famus(od, oi, self.params.task_count, None, True)
        return Decision(action, {n: sels[n] for n in action.servers}, od, oi)


class GreedyPolicy(Policy):
    """Myopic cost minimisation with greedy heuristics on both levels.

    Each server grows its offer set one candidate at a time, always adding
    the candidate that lowers its expected cluster cost the most, and stops
    when no addition helps.  Tasks then go to the servers with the lowest
    resulting cost deltas; queues are ignored.
    """

    name = "greedy"

    def decide(self, snap):
        unit = replace(self.params, balance=1.0)
        n_srv = snap.num_servers
        sels, od, oi = {}, np.zeros(n_srv), np.zeros(n_srv)
        for n in range(n_srv):
            sels[n], obj = self._recruit(snap, n, unit)
            od[n], oi[n] = server_objective(0.0, snap.reputation[n], obj, snap.fees[n], unit)
        action = delegate_famus(od, oi, self.params.task_count, None, True)
        return Decision(action, {n: sels[n] for n in action.servers}, od, oi)

    def _recruit(self, snap, n, unit):
        pi, d = snap.pi_top[n], snap.data_size[n]
        w, c = pi * d, unit.mu2 * pi / snap.gamma_top
        mask = np.zeros(w.size, bool)
        W = C = 0.0
        current = subset_objective(mask, w, c, unit)
        while not mask.all():
            free = np.flatnonzero(~mask)
            trial = unit.mu1 * accuracy_loss(W + w[free], unit.tau, unit.slot_len, unit.sentinel) + C + c[free]
            k = int(np.argmin(trial))
            if trial[k] >= current - 1e-15:
                break
            i = free[k]
            mask[i] = True
            W, C, current = W + w[i], C + c[i], float(trial[k])
        ids = tuple(int(m) for m in snap.candidates[n][mask])
        return ids, current


class RandomPolicy(Policy):
    name = "random"

    def decide(self, snap):
        servers = self._random_servers(snap.num_servers)
        action = DelegationAction.from_servers(servers, self.params.task_count, snap.num_servers)
        sels = {}
        for n in action.servers:
            cand = snap.candidates[n]
            keep = self.rng.random(cand.size) < 0.5
            sels[n] = tuple(int(m) for m in cand[keep])
        return Decision(action, sels)


class EAPolicy(Policy):
    """Every server equally likely: a uniform K-subset at each release."""

    name = "ea"

    def decide(self, snap):
        servers = self._random_servers(snap.num_servers)
        action = DelegationAction.from_servers(servers, self.params.task_count, snap.num_servers)
        sels = {n: contract_selection(snap, n, self.params).selected for n in action.servers}
        return Decision(action, sels)


class FixedPolicy(Policy):
    """A K-subset drawn once, then reused at every release."""

    name = "fixed"

    def __init__(self, params, rng):
        super().__init__(params, rng)
        self.servers: list[int] | None = None

    def decide(self, snap):
        if self.servers is None:
            self.servers = self._random_servers(snap.num_servers)
        action = DelegationAction.from_servers(self.servers, self.params.task_count, snap.num_servers)
        sels = {n: contract_selection(snap, n, self.params).selected for n in action.servers}
        return Decision(action, sels)


POLICY_CLASSES = {cls.name: cls for cls in
                  (FamusPolicy, RandomPolicy, GreedyPolicy, NCFPolicy, EAPolicy, FixedPolicy)}


def make_policy(name: str, params: ControllerParams, rng: np.random.Generator) -> Policy:
    try:
        cls = POLICY_CLASSES[name]
    except KeyError:
        raise ConfigError(f"unknown policy {name!r}; expected one of {sorted(POLICY_CLASSES)}") from None
    return cls(params, rng)


def baseline_policy(name: str, snap: Snapshot, params: ControllerParams, rng: np.random.Generator) -> Decision:
    """One-shot convenience wrapper; stateful policies (fixed) need :func:`make_policy`."""
    return make_policy(name, params, rng).decide(snap)
