"""Type grids, contract menus and the screening contract.

Type levels are indexed from 0 (lowest, most expensive clients) to
``gamma_count - 1`` (highest type, cheapest clients).  Item ``j`` of a menu
is the item designed for level ``j``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

TOL = 1e-9


@dataclass(frozen=True)
class TypeGrid:
    levels: tuple[float, ...]

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=float)
        if lv.ndim != 1 or lv.size == 0:
            raise ValueError("type grid needs at least one level")
        if np.any(lv <= 0) or not np.all(np.isfinite(lv)):
            raise ValueError("type levels must be finite and > 0")
        if np.any(np.diff(lv) < 0):
            raise ValueError("type levels must be non-decreasing")
        object.__setattr__(self, "levels", tuple(float(x) for x in lv))

    @property
    def gamma_count(self) -> int:
        return len(self.levels)

    @property
    def top(self) -> float:
        return self.levels[-1]

    def level_of(self, gamma):
        """Level index ``i`` with ``levels[i-1] < gamma <= levels[i]``.

        Values above the top level are clipped to it; values at or below the
        first level map to level 0.
        """
        idx = np.searchsorted(np.asarray(self.levels), gamma, side="left")
        idx = np.minimum(idx, self.gamma_count - 1)
        return int(idx) if np.ndim(idx) == 0 else idx


def build_type_grid(samples: Iterable[float], gamma_count: int, top_quantile: float | None = None) -> TypeGrid:
    """Quantile grid from observed type values.

    Level ``i`` (1-based) sits at quantile ``i * q / gamma_count`` with
    ``q = gamma_count / (gamma_count + 1)`` unless ``top_quantile`` is
    given.  For a single level this is the sample median.
    """
    x = np.asarray(list(samples), dtype=float)
    if x.size == 0:
        raise ValueError("cannot build a type grid from no samples")
    q = gamma_count / (gamma_count + 1.0) if top_quantile is None else top_quantile
    probs = q * np.arange(1, gamma_count + 1) / gamma_count
    levels = np.quantile(x, probs)
    return TypeGrid(tuple(np.maximum.accumulate(levels)))


@dataclass(frozen=True)
class ContractItem:
    participate: int
    reward: float

    def __post_init__(self):
        if self.participate not in (0, 1):
            raise ValueError("participate must be 0 or 1")
        if self.reward < 0:
            raise ValueError("reward must be >= 0")


@dataclass(frozen=True)
class ContractMenu:
    items: tuple[ContractItem, ...]

    def __len__(self):
        return len(self.items)

    @property
    def b(self) -> np.ndarray:
        return np.array([it.participate for it in self.items], dtype=float)

    @property
    def r(self) -> np.ndarray:
        return np.array([it.reward for it in self.items], dtype=float)

    @classmethod
    def from_pairs(cls, pairs: Sequence[Sequence[float]]) -> "ContractMenu":
        return cls(tuple(ContractItem(int(b), float(r)) for b, r in pairs))

    def to_pairs(self) -> list[list[float]]:
        return [[it.participate, it.reward] for it in self.items]


def optimal_contract(grid: TypeGrid) -> ContractMenu:
    """Only the top level participates, paid exactly its cost 1/gamma_top."""
    zeros = [ContractItem(0, 0.0)] * (grid.gamma_count - 1)
    return ContractMenu(tuple(zeros) + (ContractItem(1, 1.0 / grid.top),))


@dataclass(frozen=True)
class Verdict:
    ok: bool
    condition: str | None = None
    index: int | None = None
    detail: str = ""

    def __bool__(self):
        return self.ok


def check_feasible(menu: ContractMenu, grid: TypeGrid, tol: float = TOL) -> Verdict:
    """Necessary and sufficient feasibility conditions for a screening menu.

    Checked in order: monotone participation and reward, IR of the lowest
    level, then the two-sided bound on each participation step.  The first
    failure is reported with the offending level index.
    """
    if len(menu) != grid.gamma_count:
        return Verdict(False, "size", None, f"{len(menu)} items for {grid.gamma_count} levels")
    b, r, g = menu.b, menu.r, np.asarray(grid.levels)
    for i in range(1, len(b)):
        if b[i] < b[i - 1] - tol or r[i] < r[i - 1] - tol:
            return Verdict(False, "monotonicity", i, f"b or r decreases at level {i}")
    if r[0] - b[0] / g[0] < -tol:
        return Verdict(False, "IR", 0, f"lowest level payoff {r[0] - b[0] / g[0]:.6g} < 0")
    for i in range(1, len(b)):
        dr = r[i] - r[i - 1]
        lo = b[i - 1] + g[i - 1] * dr
        hi = b[i - 1] + g[i] * dr
        scale = tol * max(1.0, abs(lo), abs(hi))
        if not (lo - scale <= b[i] <= hi + scale):
            return Verdict(False, "sandwich", i, f"b[{i}]={b[i]} outside [{lo:.6g}, {hi:.6g}]")
    return Verdict(True)


def payoff_matrix(menu: ContractMenu, grid: TypeGrid) -> np.ndarray:
    """``P[i, j]``: payoff of a level-``i`` client taking item ``j``."""
    return menu.r[None, :] - menu.b[None, :] / np.asarray(grid.levels)[:, None]


def best_response(menu: ContractMenu, level: int, grid: TypeGrid, tol: float = TOL) -> int | None:
    """Payoff-maximising item for a client at ``level``.

    Ties go to the higher item index; ``None`` if every item has negative
    payoff.  Zero payoff is accepted.
    """
    if not 0 <= level < grid.gamma_count:
        raise ValueError(f"level {level} outside 0..{grid.gamma_count - 1}")
    pay = menu.r - menu.b / grid.levels[level]
    best = pay.max()
    if best < -tol:
        return None
    return int(np.flatnonzero(pay >= best - tol)[-1])


@dataclass(frozen=True)
class ICIRReport:
    ir_failures: tuple[int, ...] = ()
    ic_failures: tuple[tuple[int, int], ...] = ()

    @property
    def ok(self) -> bool:
        return not self.ir_failures and not self.ic_failures

    def __bool__(self):
        return self.ok


def verify_ic_ir(menu: ContractMenu, grid: TypeGrid, tol: float = TOL) -> ICIRReport:
    P = payoff_matrix(menu, grid)
    own = np.diag(P)
    ir = tuple(int(i) for i in np.flatnonzero(own < -tol))
    bad = P > own[:, None] + tol
    ic = tuple((int(i), int(j)) for i, j in zip(*np.nonzero(bad)))
    return ICIRReport(ir, ic)


@dataclass(frozen=True)
class TypeDistribution:
    """Belief over type levels; the last axis indexes levels."""

    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if np.any(p < 0) or not np.allclose(p.sum(axis=-1), 1.0, atol=1e-12, rtol=0):
            raise ValueError("type distribution rows must be non-negative and sum to 1")
        object.__setattr__(self, "probs", p)

    @property
    def top(self) -> np.ndarray:
        return self.probs[..., -1]


def estimate_distribution(history: Sequence[int], gamma_count: int) -> TypeDistribution:
    """Empirical level frequencies; uniform when there is no history."""
    counts = np.bincount(np.asarray(history, dtype=int), minlength=gamma_count).astype(float)
    return TypeDistribution(distribution_from_counts(counts))


def distribution_from_counts(counts: np.ndarray) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    total = counts.sum(axis=-1, keepdims=True)
    uniform = np.full_like(counts, 1.0 / counts.shape[-1])
    with np.errstate(invalid="ignore", divide="ignore"):
        probs = np.where(total > 0, counts / np.where(total > 0, total, 1.0), uniform)
    return probs


def load_menu(path: str | Path) -> tuple[ContractMenu, TypeGrid]:
    """Read ``{"levels": [...], "items": [[b, r], ...]}``."""
    data = json.loads(Path(path).read_text())
    return ContractMenu.from_pairs(data["items"]), TypeGrid(tuple(data["levels"]))


def menu_report(menu: ContractMenu, grid: TypeGrid) -> dict:
    feas = check_feasible(menu, grid)
    icir = verify_ic_ir(menu, grid)
    return {
        "feasible": feas.ok,
        "feasibility_violation": None if feas.ok else {"condition": feas.condition, "level": feas.index,
                                                       "detail": feas.detail},
        "ir_ok": not icir.ir_failures,
        "ir_failures": list(icir.ir_failures),
        "ic_ok": not icir.ic_failures,
        "ic_failures": [list(p) for p in icir.ic_failures],
    }
