"""Experiment configuration: dataclasses, JSON loading and validation.

Defaults follow the evaluation setup of the delegation study where a value is
given there (N=10, M=200, K=8, Gamma=20, mu1=0.1, mu2=0.9, tau=1 s,
dt=0.1 s, 100 x 200 m area).  Everything else is a declared assumption and
is marked ``# assumed`` next to the field.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

POLICIES = ("famus", "random", "greedy", "ncf", "ea", "fixed")
SCENARIOS = ("periodic-contract", "uniform-contract")


class ConfigError(ValueError):
    """Raised when a configuration violates one or more invariants.

    ``problems`` lists every violated invariant, not just the first.
    """

    def __init__(self, problems: list[str] | str):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class MobilityParams:
    memory: float = 0.85  # assumed
    mean_speed: float = 1.0  # m/s, assumed
    speed_std: float = 0.25  # m/s, assumed


@dataclass(frozen=True)
class LinkParams:
    noise_psd: float = 3.98e-21  # W/Hz (-174 dBm/Hz), assumed
    tx_power: float = 0.1  # W, assumed
    bandwidth: float = 10e6  # Hz per cluster, assumed
    pathloss_exponent: float = 3.0  # assumed
    pathloss_ref_gain: float = 1e-3  # gain at 1 m, assumed
    fading: bool = True


@dataclass(frozen=True)
class SimConfig:
    num_servers: int = 10
    num_clients: int = 200
    num_tasks: int = 8
    num_types: int = 20
    balance: float = 10.0  # V
    mu1: float = 0.1
    mu2: float = 0.9
    tau: float = 1.0
    slot_len: float = 0.1
    area_width: float = 100.0
    area_height: float = 200.0
    grid_cols: int = 0  # 0 -> auto layout
    grid_rows: int = 0
    horizon: int = 1050  # total slots, warm-up included
    warmup: int = 50
    seed: int = 0
    policy: str = "famus"
    scenario: str = "periodic-contract"
    data_size_range: tuple[float, float] = (1.0, 10.0)  # MB, assumed
    alpha_range: tuple[float, float] = (0.5e-3, 1.5e-3)  # cost per Mbit/s, assumed
    beta_range: tuple[float, float] = (1e-3, 3e-3)  # cost per MB, assumed
    server_fee: float | tuple[float, ...] = 1.0  # assumed
    force_assign_all: bool = True
    hold_tasks: bool = True
    al_max: float | None = None  # None -> 1 + dt/tau
    sigma0: float | None = None  # None -> exp(-1/N)
    belief_scope: str = "all"  # "all": every server logs every client's type; "cluster": members only
    link: LinkParams = field(default_factory=LinkParams)
    mobility: MobilityParams = field(default_factory=MobilityParams)

    @property
    def slots_per_task(self) -> int:
        return int(round(self.tau / self.slot_len))

    @property
    def epsilon(self) -> float:
        return self.num_tasks / self.num_servers

    @property
    def al_sentinel(self) -> float:
        if self.al_max is not None:
            return self.al_max
        return 1.0 + self.slot_len / self.tau

    @property
    def sigma_threshold(self) -> float:
        if self.sigma0 is not None:
            return self.sigma0
        return math.exp(-1.0 / self.num_servers)

    def fees(self) -> tuple[float, ...]:
        if isinstance(self.server_fee, (int, float)):
            return (float(self.server_fee),) * self.num_servers
        return tuple(float(h) for h in self.server_fee)

    def grid_shape(self) -> tuple[int, int]:
        """(cols, rows) of the cluster tiling.

        Auto layout picks the factorisation of N closest to the area aspect
        ratio; N=10 on 100 x 200 m gives 2 x 5 cells of 50 x 40 m.
        """
        if self.grid_cols and self.grid_rows:
            return self.grid_cols, self.grid_rows
        n = self.num_servers
        best = None
        for cols in range(1, n + 1):
            if n % cols:
                continue
            rows = n // cols
            cell = (self.area_width / cols) / (self.area_height / rows)
            score = abs(math.log(cell))
            if best is None or score < best[0] - 1e-12:
                best = (score, cols, rows)
        return best[1], best[2]

    def validate(self) -> "SimConfig":
        problems = []
        if self.num_servers < 1:
            problems.append("N >= 1 required")
        if self.num_clients < 0:
            problems.append("M >= 0 required")
        if not 1 <= self.num_tasks:
            problems.append("K >= 1 required")
        if self.num_tasks > self.num_servers:
            problems.append(f"K <= N violated (K={self.num_tasks}, N={self.num_servers})")
        if self.num_types < 1:
            problems.append("Gamma >= 1 required")
        if self.balance < 0:
            problems.append("V >= 0 required")
        if self.mu1 < 0 or self.mu2 < 0:
            problems.append("mu1, mu2 >= 0 required")
        if not (0 < self.slot_len <= self.tau):
            problems.append("0 < slot_len <= tau required")
        elif abs(self.tau / self.slot_len - self.slots_per_task) > 1e-9:
            problems.append("slot_len must divide tau")
        if self.area_width <= 0 or self.area_height <= 0:
            problems.append("area must be non-degenerate")
        if self.warmup < 1:
            problems.append("warm-up >= 1 slot required")
        if self.horizon < self.warmup:
            problems.append(f"T >= warm-up violated (T={self.horizon}, W={self.warmup})")
        if self.policy not in POLICIES:
            problems.append(f"unknown policy {self.policy!r}")
        if self.scenario not in SCENARIOS:
            problems.append(f"unknown scenario {self.scenario!r}")
        lo, hi = self.data_size_range
        if not 0 < lo <= hi:
            problems.append("data_size_range must satisfy 0 < lo <= hi")
        if not 0 < self.alpha_range[0] <= self.alpha_range[1]:
            problems.append("alpha_range must satisfy 0 < lo <= hi")
        if not 0 <= self.beta_range[0] <= self.beta_range[1]:
            problems.append("beta_range must satisfy 0 <= lo <= hi")
        if not isinstance(self.server_fee, (int, float)) and len(self.server_fee) != self.num_servers:
            problems.append("server_fee list must have N entries")
        if (self.grid_cols or self.grid_rows) and self.grid_cols * self.grid_rows != self.num_servers:
            problems.append("grid_cols * grid_rows must equal N")
        link = self.link
        for name in ("noise_psd", "tx_power", "bandwidth", "pathloss_exponent", "pathloss_ref_gain"):
            if getattr(link, name) <= 0:
                problems.append(f"link.{name} must be > 0")
        mob = self.mobility
        if not 0 <= mob.memory <= 1:
            problems.append("mobility.memory must lie in [0, 1]")
        if mob.mean_speed < 0 or mob.speed_std < 0:
            problems.append("mobility speeds must be >= 0")
        if self.belief_scope not in ("all", "cluster"):
            problems.append("belief_scope must be 'all' or 'cluster'")
        if self.sigma0 is not None and not 0 < self.sigma0 <= 1:
            problems.append("sigma0 must lie in (0, 1]")
        if problems:
            raise ConfigError(problems)
        return self

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def with_overrides(self, **kw) -> "SimConfig":
        return replace(self, **kw)


_NESTED = {"link": LinkParams, "mobility": MobilityParams}
_TUPLES = {"data_size_range", "alpha_range", "beta_range"}


def config_from_dict(data: dict[str, Any]) -> SimConfig:
    known = {f.name for f in fields(SimConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError([f"unknown config key {k!r}" for k in unknown])
    kw: dict[str, Any] = {}
    for key, value in data.items():
        if key in _NESTED:
            sub = _NESTED[key]
            sub_known = {f.name for f in fields(sub)}
            bad = sorted(set(value) - sub_known)
            if bad:
                raise ConfigError([f"unknown config key {key}.{k!r}" for k in bad])
            kw[key] = sub(**value)
        elif key in _TUPLES:
            kw[key] = tuple(value)
        elif key == "server_fee" and isinstance(value, list):
            kw[key] = tuple(value)
        else:
            kw[key] = value
    return SimConfig(**kw)


def load_config(path: str | Path) -> SimConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data).validate()
