"""Time-slotted simulation loop, run summaries and parameter sweeps.

Per slot: move clients and recompute clusters; at a release slot build the
controller snapshot and let the policy delegate tasks and pick offer sets;
clients answer the menu with their true (nominal-share) types; realised
costs and accuracy losses follow; queues and reputations are updated last.

Delegations made at a release are held for the whole task period when
``hold_tasks`` is set (the task trains for tau / dt global rounds).
Otherwise servers are idle between releases.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .channel import pathloss, shannon_rate
from .config import ConfigError, SimConfig
from .contract import (
    ContractMenu,
    TypeGrid,
    build_type_grid,
    optimal_contract,
    payoff_matrix,
)
from .controller import ControllerParams, DelegationAction, accuracy_loss
from .fairness import FairnessLedger, drift_bound, jfi, lyapunov, queue_step, reputation, service_quality, stability_stat
from .mobility import Area, _ppp_arrays, step_population
from .policies import Decision, RandomPolicy, Snapshot, make_policy

# independent RNG streams, keyed with the seed and (for per-slot streams) the slot
_INIT, _MOVE, _FADE, _POLICY, _WARMUP = 1, 2, 3, 4, 5


def release_schedule(slot: int, tau: float, slot_len: float) -> bool:
    """True iff ``slot * slot_len`` is a multiple of ``tau``."""
    ratio = tau / slot_len
    spt = int(round(ratio))
    if spt < 1 or abs(ratio - spt) > 1e-9:
        raise ValueError("slot_len must divide tau")
    return slot % spt == 0


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *key]))


def controller_params(cfg: SimConfig) -> ControllerParams:
    return ControllerParams(
        balance=cfg.balance, mu1=cfg.mu1, mu2=cfg.mu2, tau=cfg.tau, slot_len=cfg.slot_len,
        task_count=cfg.num_tasks, epsilon=cfg.epsilon, al_max=cfg.al_sentinel,
        force_assign_all=cfg.force_assign_all,
    )


@dataclass
class SlotMetrics:
    slot: int
    cost: float
    expected_cost: float
    accuracy_loss: np.ndarray
    queues: np.ndarray
    delegated: np.ndarray
    participants: np.ndarray
    rewards: np.ndarray


@dataclass
class Trace:
    """Columnar per-slot records of the measured (post warm-up) slots."""

    slots: np.ndarray
    queue: np.ndarray  # Q_t, before this slot's update
    reputation: np.ndarray  # g_t, used in this slot's queue update
    sigma: np.ndarray
    delegated: np.ndarray
    accuracy_loss: np.ndarray
    participants: np.ndarray
    offered: np.ndarray
    rewards: np.ndarray
    cluster_cost: np.ndarray
    expected_cluster_cost: np.ndarray
    client_cost: np.ndarray  # participants' own costs at the actual bandwidth share
    drift: np.ndarray
    drift_bound: np.ndarray
    release: np.ndarray

    @classmethod
    def allocate(cls, t: int, n: int) -> "Trace":
        f = lambda: np.zeros((t, n))  # noqa: E731
        return cls(np.zeros(t, dtype=int), f(), f(), f(), np.zeros((t, n), dtype=int), f(),
                   np.zeros((t, n), dtype=int), np.zeros((t, n), dtype=int), f(), f(), f(), f(),
                   np.zeros(t), np.zeros(t), np.zeros(t, dtype=bool))

    def __len__(self):
        return len(self.slots)

    @property
    def cost(self) -> np.ndarray:
        return self.cluster_cost.sum(axis=1)

    @property
    def expected_cost(self) -> np.ndarray:
        return self.expected_cluster_cost.sum(axis=1)

    @property
    def task_accuracy_loss(self) -> np.ndarray:
        """Mean accuracy loss over servers holding a task (NaN if none)."""
        d = self.delegated.astype(bool)
        total = np.where(d, self.accuracy_loss, 0.0).sum(axis=1)
        cnt = d.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(cnt > 0, total / np.maximum(cnt, 1), np.nan)

    def slot(self, i: int) -> SlotMetrics:
        return SlotMetrics(int(self.slots[i]), float(self.cost[i]), float(self.expected_cost[i]),
                           self.accuracy_loss[i], self.queue[i], self.delegated[i],
                           self.participants[i], self.rewards[i])


@dataclass
class RunSummary:
    policy: str
    scenario: str
    seed: int
    slots: int
    avg_cost: float
    avg_expected_cost: float
    avg_accuracy_loss: float
    jfi: float
    mean_backlog: list[float]
    backlog_slope: list[float]
    max_backlog_slope: float
    max_drift_violation: float
    avg_participants: float
    gamma_top: float
    grid: list[float]
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunResult:
    summary: RunSummary
    trace: Trace
    config: SimConfig


class World:
    """Mutable simulation state for one run."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg.validate()
        cols, rows = cfg.grid_shape()
        self.area = Area(cfg.area_width, cfg.area_height, cols, rows)
        self.servers = self.area.centers()
        self.params = controller_params(cfg)
        self.fees = np.asarray(cfg.fees())
        n, m = cfg.num_servers, cfg.num_clients
        rng = _stream(cfg.seed, _INIT)
        self.pos, self.vel, self.mean_vel = _ppp_arrays(self.area, m, rng, cfg.mobility)
        self.alpha = rng.uniform(*cfg.alpha_range, size=m)
        self.beta = rng.uniform(*cfg.beta_range, size=m)
        self.data = rng.uniform(*cfg.data_size_range, size=m)
        self.queue = np.zeros(n)
        self.phi = np.zeros(n, dtype=int)
        self.psi = np.zeros(n, dtype=int)
        self.gamma_count = 1 if cfg.scenario == "uniform-contract" else cfg.num_types
        self.grid: TypeGrid | None = None
        self.menu: ContractMenu | None = None
        self.best_item: np.ndarray | None = None
        self.counts = np.zeros((n, m, self.gamma_count))
        self._warm_obs: list[tuple[np.ndarray, np.ndarray]] = []
        self.held: Decision | None = None
        self.policy = make_policy(cfg.policy, self.params, _stream(cfg.seed, _POLICY))
        self.warm_policy = RandomPolicy(self.params, _stream(cfg.seed, _WARMUP))
        self.ledger = FairnessLedger.empty(n)
        self.slot = 0
        self.cells = self.area.locate(self.pos) if m else np.zeros(0, dtype=int)

    # -- per-slot physical state -------------------------------------------------

    def move(self):
        rng = _stream(self.cfg.seed, _MOVE, self.slot)
        if len(self.pos):
            self.pos, self.vel, self.mean_vel = step_population(
                self.pos, self.vel, self.mean_vel, self.area, self.cfg.slot_len, rng, self.cfg.mobility)
            self.cells = self.area.locate(self.pos)

    def channel(self):
        """Nominal types of every client towards every server, shape (M, N).

        The nominal share splits B_n over all current members of cluster n
        (one more for an outsider).  Fading is drawn per (client, server).
        """
        cfg, link = self.cfg, self.cfg.link
        m, n = len(self.pos), cfg.num_servers
        rng = _stream(cfg.seed, _FADE, self.slot)
        fade = rng.exponential(1.0, size=(m, n)) if link.fading else np.ones((m, n))
        diff = self.pos[:, None, :] - self.servers[None, :, :]
        gain = pathloss(np.hypot(diff[..., 0], diff[..., 1]), link.pathloss_ref_gain,
                        link.pathloss_exponent) * fade
        sizes = np.bincount(self.cells, minlength=n)
        members = sizes[None, :] + (self.cells[:, None] != np.arange(n)[None, :])
        share = link.bandwidth / members
        rate = shannon_rate(share, link.tx_power, gain, link.noise_psd) if m else np.zeros((0, n))
        cost = self.alpha[:, None] * np.asarray(rate) / 1e6 + (self.beta * self.data)[:, None]
        return 1.0 / cost

    # -- contract state --------------------------------------------------------------

    def finish_warmup(self):
        """Fix the type grid and menu from warm-up observations of own-cluster types."""
        samples = (np.concatenate([g[np.arange(len(c)), c] for c, g in self._warm_obs])
                   if self._warm_obs else np.array([1.0]))
        self.grid = build_type_grid(samples, self.gamma_count)
        self.menu = optimal_contract(self.grid)
        P = payoff_matrix(self.menu, self.grid)
        best = np.full(self.gamma_count, -1)
        for i in range(self.gamma_count):
            row = P[i]
            top = row.max()
            if top >= -1e-9:
                best[i] = np.flatnonzero(row >= top - 1e-9)[-1]
        self.best_item = best
        for cells, gammas in self._warm_obs:
            self._record_types(cells, gammas)
        self._warm_obs = []

    def _record_types(self, cells, gammas):
        """Add one observation per logged (server, client) pair."""
        levels = self.grid.level_of(gammas)
        m = len(cells)
        if self.cfg.belief_scope == "all":
            n = gammas.shape[1]
            servers = np.broadcast_to(np.arange(n), (m, n))
            clients = np.broadcast_to(np.arange(m)[:, None], (m, n))
            self.counts[servers, clients, levels] += 1  # each pair once, no duplicates
        else:
            own = levels[np.arange(m), cells]
            self.counts[cells, np.arange(m), own] += 1

    def pi_top(self, servers, clients) -> np.ndarray:
        """Empirical top-level probability, 1 / Gamma without history."""
        c = self.counts[servers, clients]
        if not c.size:
            return np.zeros(0)
        total = c.sum(axis=-1)
        return np.where(total > 0, c[..., -1] / np.maximum(total, 1), 1.0 / self.gamma_count)

    def snapshot(self) -> Snapshot:
        n = self.cfg.num_servers
        cands = [np.flatnonzero(self.cells == k) for k in range(n)]
        pis = [self.pi_top(np.full(c.size, k), c) for k, c in enumerate(cands)]
        return Snapshot(cands, pis, [self.data[c] for c in cands], self.grid.top,
                        self.queue.copy(), reputation(self.phi, self.psi), self.fees)


def _active(world: World, decision: Decision | None, n: int):
    """Currently selected clients of every delegated server, restricted to its cluster."""
    out = {}
    if decision is None:
        return out
    for k in decision.action.servers:
        ids = np.asarray(decision.selections.get(k, ()), dtype=int)
        out[k] = ids[world.cells[ids] == k] if ids.size else ids
    return out


def step(world: World, trace: Trace | None = None, row: int | None = None) -> None:
    """Advance the world by one slot, writing measured values into ``trace[row]``."""
    cfg = world.cfg
    n = cfg.num_servers
    t = world.slot
    warm = t < cfg.warmup
    if t > 0:
        world.move()
    if warm is False and world.grid is None:
        world.finish_warmup()
    gamma_all = world.channel()
    gamma_true = gamma_all[np.arange(len(world.cells)), world.cells]

    release = release_schedule(t, cfg.tau, cfg.slot_len)
    if release:
        if warm:
            world.held = world.warm_policy.decide(_warm_snapshot(world))
        else:
            world.held = world.policy.decide(world.snapshot())
        decision = world.held
    elif cfg.hold_tasks:
        decision = world.held
    else:
        decision = None
    action = decision.action if decision is not None else DelegationAction.none(cfg.num_tasks, n)
    delegated = action.delegated
    active = _active(world, decision, n)

    al = np.full(n, world.params.sentinel)
    participants = np.zeros(n, dtype=int)
    offered = np.zeros(n, dtype=int)
    rewards = np.zeros(n)
    exp_pay = np.zeros(n)
    exp_mass = np.zeros(n)
    client_cost = np.zeros(n)
    link = cfg.link
    ids_all = np.concatenate([ids for ids in active.values()]) if active else np.zeros(0, dtype=int)
    if ids_all.size:
        owner = world.cells[ids_all]  # active ids are inside their server's cluster
        offered = np.bincount(owner, minlength=n)
        if warm:
            take, paid = np.ones(ids_all.size, bool), np.zeros(ids_all.size)
        else:
            items = world.best_item[world.grid.level_of(gamma_true[ids_all])]
            take = items >= 0
            take[take] = world.menu.b[items[take]] > 0
            paid = np.where(take, world.menu.r[np.maximum(items, 0)], 0.0)
            pi = world.pi_top(owner, ids_all)
            exp_pay = np.bincount(owner, weights=pi, minlength=n) / world.grid.top
            exp_mass = np.bincount(owner, weights=pi * world.data[ids_all], minlength=n)
        joined, j_owner = ids_all[take], owner[take]
        participants = np.bincount(j_owner, minlength=n)
        rewards = np.bincount(owner, weights=paid, minlength=n)
        mass = np.bincount(j_owner, weights=world.data[joined], minlength=n)
        al = np.where(participants > 0, accuracy_loss(mass, cfg.tau, cfg.slot_len, world.params.sentinel), al)
        if joined.size:
            diff = world.pos[joined] - world.servers[j_owner]
            gain = pathloss(np.hypot(diff[:, 0], diff[:, 1]), link.pathloss_ref_gain, link.pathloss_exponent)
            rate = shannon_rate(link.bandwidth / participants[j_owner], link.tx_power, gain, link.noise_psd)
            own_cost = world.alpha[joined] * rate / 1e6 + world.beta[joined] * world.data[joined]
            client_cost = np.bincount(j_owner, weights=own_cost, minlength=n)

    # nominal types feed the belief after the decision that used it
    if warm:
        world._warm_obs.append((world.cells.copy(), gamma_all))
    else:
        world._record_types(world.cells, gamma_all)

    g = reputation(world.phi, world.psi)
    q_before = world.queue.copy()
    q_after = queue_step(q_before, g, delegated, cfg.epsilon)
    sigma = service_quality(al) if np.any(al > 0) else None
    if sigma is not None:
        good = sigma >= cfg.sigma_threshold
        world.phi = world.phi + good
        world.psi = world.psi + ~good
    world.queue = q_after

    if trace is not None and row is not None:
        mu1, mu2 = cfg.mu1, cfg.mu2
        trace.slots[row] = t
        trace.queue[row] = q_before
        trace.reputation[row] = g
        trace.sigma[row] = sigma if sigma is not None else np.nan
        trace.delegated[row] = delegated
        trace.accuracy_loss[row] = al
        trace.participants[row] = participants
        trace.offered[row] = offered
        trace.rewards[row] = rewards
        trace.cluster_cost[row] = mu1 * al + mu2 * (world.fees * delegated + rewards)
        exp_al = accuracy_loss(exp_mass, cfg.tau, cfg.slot_len, world.params.sentinel)
        trace.expected_cluster_cost[row] = mu1 * exp_al + mu2 * (world.fees * delegated + exp_pay)
        trace.client_cost[row] = client_cost
        trace.drift[row] = lyapunov(q_after) - lyapunov(q_before)
        trace.drift_bound[row] = drift_bound(q_before, g, delegated, cfg.epsilon)
        trace.release[row] = release
        if sigma is not None:
            world.ledger.record(delegated, sigma)
    world.slot += 1


def _warm_snapshot(world: World) -> Snapshot:
    n = world.cfg.num_servers
    cands = [np.flatnonzero(world.cells == k) for k in range(n)]
    ones = [np.ones(c.size) for c in cands]
    return Snapshot(cands, ones, [world.data[c] for c in cands], 1.0, world.queue.copy(),
                    reputation(world.phi, world.psi), world.fees)


def simulate(cfg: SimConfig) -> RunResult:
    """Warm-up, then ``horizon - warmup`` measured slots."""
    world = World(cfg)
    measured = cfg.horizon - cfg.warmup
    trace = Trace.allocate(measured, cfg.num_servers)
    for _ in range(cfg.warmup):
        step(world)
    if world.grid is None:
        world.finish_warmup()
    for i in range(measured):
        step(world, trace, i)
    return RunResult(summarize(world, trace), trace, cfg)


def summarize(world: World, trace: Trace) -> RunSummary:
    cfg = world.cfg
    if len(trace):
        mean_q, slope = stability_stat(trace.queue)
        al = trace.task_accuracy_loss
        avg_al = float(np.nanmean(al)) if np.any(~np.isnan(al)) else float("nan")
        try:
            fairness = jfi(world.ledger)
        except ZeroDivisionError:
            fairness = float("nan")
        avg_cost = float(trace.cost.mean())
        avg_exp = float(trace.expected_cost.mean())
        viol = float(np.max(trace.drift - trace.drift_bound))
        part = float(trace.participants.sum(axis=1).mean())
    else:
        mean_q = slope = np.zeros(cfg.num_servers)
        avg_al = avg_cost = avg_exp = fairness = viol = part = float("nan")
    return RunSummary(
        policy=cfg.policy, scenario=cfg.scenario, seed=cfg.seed, slots=len(trace),
        avg_cost=avg_cost, avg_expected_cost=avg_exp, avg_accuracy_loss=avg_al, jfi=fairness,
        mean_backlog=[float(x) for x in mean_q], backlog_slope=[float(x) for x in slope],
        max_backlog_slope=float(np.max(slope)) if len(trace) else float("nan"),
        max_drift_violation=viol, avg_participants=part,
        gamma_top=float(world.grid.top) if world.grid else float("nan"),
        grid=list(world.grid.levels) if world.grid else [], config=_jsonable(cfg.to_dict()),
    )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def run(cfg: SimConfig) -> RunResult:
    """Validate ``cfg`` (raising :class:`ConfigError`) and simulate it."""
    return simulate(cfg.validate())


AXES = {"M": "num_clients", "N": "num_servers", "gamma": "num_types", "V": "balance"}


def axis_field(axis: str) -> str:
    key = {"m": "M", "n": "N", "gamma": "gamma", "v": "V"}.get(axis.lower())
    if key is None:
        raise ConfigError(f"unknown sweep axis {axis!r}; expected one of M, N, gamma, V")
    return AXES[key]


@dataclass
class SweepRow:
    axis: str
    value: float
    policy: str
    seeds: int
    cost_mean: float
    cost_se: float
    al_mean: float
    al_se: float
    jfi_mean: float
    jfi_se: float
    per_seed_cost: list[float]
    per_seed_al: list[float]
    per_seed_jfi: list[float]


def _run_summary(cfg: SimConfig) -> RunSummary:
    return simulate(cfg).summary


def _mean_se(x: Sequence[float]) -> tuple[float, float]:
    a = np.asarray(x, dtype=float)
    a = a[~np.isnan(a)]
    if a.size == 0:
        return float("nan"), float("nan")
    se = float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else 0.0
    return float(a.mean()), se


def sweep(base: SimConfig, axis: str, values: Iterable, seeds: Sequence[int] | int = 20,
          workers: int = 1) -> list[SweepRow]:
    """One run per (value, seed); rows hold seed means and standard errors."""
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    name = axis_field(axis)
    seeds = list(range(seeds)) if isinstance(seeds, int) else list(seeds)
    cast = float if name == "balance" else int
    cfgs = [replace(base, **{name: cast(v)}, seed=s).validate() for v in values for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(_run_summary, cfgs))
    else:
        summaries = [_run_summary(c) for c in cfgs]
    rows = []
    for i, v in enumerate(values):
        chunk = summaries[i * len(seeds):(i + 1) * len(seeds)]
        cost = [s.avg_cost for s in chunk]
        al = [s.avg_accuracy_loss for s in chunk]
        fair = [s.jfi for s in chunk]
        rows.append(SweepRow(axis, cast(v), base.policy, len(seeds), *_mean_se(cost), *_mean_se(al),
                             *_mean_se(fair), cost, al, fair))
    return rows
