"""Brute-force oracles for the exact solvers and invariants.

Each oracle draws random instances, compares the production routine with
an exhaustive reference and returns an :class:`OracleResult`.  Failing
instances are kept as plain JSON-ready dicts so they can be replayed.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .contract import TypeGrid, check_feasible, optimal_contract, verify_ic_ir
from .controller import (
    ControllerParams,
    brute_force_delegation,
    brute_force_subset,
    delegate_famus,
    delegation_objective,
    solve_client_subset,
)
from .fairness import drift_bound, lyapunov, queue_step

DEFAULT_TRIALS = {"subset": 1000, "delegation": 500, "feasibility": 1000, "drift": 1000}


@dataclass
class OracleResult:
    name: str
    trials: int
    failures: list[dict] = field(default_factory=list)
    warning: str | None = None

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {"name": self.name, "trials": self.trials, "ok": self.ok,
                "failures": self.failures[:5], "failure_count": len(self.failures), "warning": self.warning}


def _random_params(rng) -> ControllerParams:
    return ControllerParams(balance=float(rng.choice([0.1, 1.0, 10.0, 50.0]) * rng.uniform(0.5, 2.0)),
                            mu1=float(rng.uniform(0, 1)), mu2=float(rng.uniform(0, 1)))


def subset_instance(rng, max_size: int = 12) -> dict:
    n = int(rng.integers(0, max_size + 1))
    p = _random_params(rng)
    pi = rng.uniform(0, 1, n) * (rng.random(n) < 0.9)
    d = rng.uniform(1, 200, n)
    gamma_top = float(rng.uniform(0.5, 100))
    return {"weights": (pi * d).tolist(), "prices": (p.balance * p.mu2 * pi / gamma_top).tolist(),
            "balance": p.balance, "mu1": p.mu1, "mu2": p.mu2}


def subset_oracle(trials: int, rng, solver: Callable = solve_client_subset, tol: float = 1e-9) -> OracleResult:
    res = OracleResult("subset", trials)
    for _ in range(trials):
        inst = subset_instance(rng)
        p = ControllerParams(balance=inst["balance"], mu1=inst["mu1"], mu2=inst["mu2"])
        got = solver(inst["weights"], inst["prices"], p)
        ref = brute_force_subset(inst["weights"], inst["prices"], p)
        if not abs(got.objective - ref.objective) <= tol * max(1.0, abs(ref.objective)):
            res.failures.append({**inst, "solver_objective": got.objective, "reference_objective": ref.objective,
                                 "reference_selection": list(ref.selected)})
    return res


def delegation_instance(rng, max_servers: int = 10) -> dict:
    n = int(rng.integers(1, max_servers + 1))
    k = int(rng.integers(0, n + 1))
    scale = float(rng.choice([1.0, 10.0, 100.0]))
    od = rng.normal(0, scale, n)
    oi = rng.normal(0, scale, n)
    if rng.random() < 0.3:  # exercise ties
        od, oi = np.round(od), np.round(oi)
    return {"omega_delegated": od.tolist(), "omega_idle": oi.tolist(), "task_count": k,
            "queues": rng.uniform(0, 10, n).tolist(), "force_assign_all": bool(rng.random() < 0.7)}


def delegation_oracle(trials: int, rng, solver: Callable = delegate_famus, tol: float = 1e-9) -> OracleResult:
    res = OracleResult("delegation", trials)
    for _ in range(trials):
        inst = delegation_instance(rng)
        action = solver(inst["omega_delegated"], inst["omega_idle"], inst["task_count"], inst["queues"],
                        inst["force_assign_all"])
        got = delegation_objective(action, inst["omega_delegated"], inst["omega_idle"])
        _, ref = brute_force_delegation(inst["omega_delegated"], inst["omega_idle"], inst["task_count"],
                                        inst["force_assign_all"])
        if not abs(got - ref) <= tol * max(1.0, abs(ref)):
            res.failures.append({**inst, "solver_objective": got, "reference_objective": ref})
    return res


def random_grid(rng, max_types: int = 100) -> TypeGrid:
    g = int(rng.integers(1, max_types + 1))
    lv = np.sort(rng.uniform(0.01, 100.0, g))
    if g > 1 and rng.random() < 0.2:  # repeated levels are allowed
        lv[rng.integers(1, g)] = lv[0]
        lv = np.sort(lv)
    return TypeGrid(tuple(lv))


def feasibility_oracle(trials: int, rng, builder: Callable = optimal_contract) -> OracleResult:
    res = OracleResult("feasibility", trials)
    for _ in range(trials):
        grid = random_grid(rng)
        menu = builder(grid)
        verdict = check_feasible(menu, grid)
        icir = verify_ic_ir(menu, grid)
        if not (verdict.ok and icir.ok):
            res.failures.append({"levels": list(grid.levels), "items": menu.to_pairs(),
                                 "lemma": verdict.condition, "ir": list(icir.ir_failures),
                                 "ic": [list(p) for p in icir.ic_failures]})
    return res


def drift_oracle(trials: int, rng, step: Callable = queue_step, tol: float = 1e-9) -> OracleResult:
    """One-slot drift against the analytic bound on random queue states."""
    res = OracleResult("drift", trials)
    for _ in range(trials):
        n = int(rng.integers(1, 21))
        q = rng.uniform(0, 100, n) * (rng.random(n) < 0.8)
        g = rng.uniform(0, 1, n)
        d = (rng.random(n) < 0.5).astype(int)
        eps = float(rng.uniform(0, 1))
        q2 = step(q, g, d, eps)
        slack = drift_bound(q, g, d, eps) - (lyapunov(q2) - lyapunov(q))
        if slack < -tol:
            res.failures.append({"queues": q.tolist(), "reputation": g.tolist(), "delegated": d.tolist(),
                                 "epsilon": eps, "slack": float(slack)})
    return res


ORACLES = {"subset": subset_oracle, "delegation": delegation_oracle,
           "feasibility": feasibility_oracle, "drift": drift_oracle}


def oracle_check(trials: dict[str, int] | int | None = None, seed: int = 0,
                 overrides: dict[str, Callable] | None = None) -> list[OracleResult]:
    """Run every oracle; ``overrides`` swaps in alternative solvers (fault injection)."""
    if trials is None:
        trials = dict(DEFAULT_TRIALS)
    elif isinstance(trials, int):
        trials = {k: trials for k in ORACLES}
    overrides = overrides or {}
    out = []
    for i, (name, fn) in enumerate(ORACLES.items()):
        count = int(trials.get(name, DEFAULT_TRIALS[name]))
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        res = fn(count, rng, overrides[name]) if name in overrides else fn(count, rng)
        if count == 0:
            res.warning = f"{name}: zero trials, vacuous pass"
            warnings.warn(res.warning, stacklevel=2)
        out.append(res)
    return out
