"""Client placement, Gauss-Markov mobility and cluster membership."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .config import ConfigError, MobilityParams


@dataclass(frozen=True)
class Area:
    """Rectangle [0, width) x [0, height) tiled by ``cols x rows`` clusters.

    Cluster cells are half-open, so a point on a shared edge belongs to the
    cell with the smaller index.  Cluster index runs column-major within
    each row: ``n = row * cols + col``.
    """

    width: float
    height: float
    cols: int = 1
    rows: int = 1

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ConfigError(f"zero-size area {self.width} x {self.height}")
        if self.cols < 1 or self.rows < 1:
            raise ConfigError("area grid needs at least one cell")

    @property
    def num_clusters(self) -> int:
        return self.cols * self.rows

    @property
    def cell_size(self) -> tuple[float, float]:
        return self.width / self.cols, self.height / self.rows

    def rect(self, n: int) -> tuple[float, float, float, float]:
        """(x0, y0, x1, y1) of cluster ``n``."""
        cw, ch = self.cell_size
        r, c = divmod(n, self.cols)
        return c * cw, r * ch, (c + 1) * cw, (r + 1) * ch

    def centers(self) -> np.ndarray:
        cw, ch = self.cell_size
        idx = np.arange(self.num_clusters)
        r, c = np.divmod(idx, self.cols)
        return np.column_stack([(c + 0.5) * cw, (r + 0.5) * ch])

    def contains(self, pos) -> np.ndarray:
        pos = np.asarray(pos, dtype=float)
        x, y = pos[..., 0], pos[..., 1]
        return (x >= 0) & (x <= self.width) & (y >= 0) & (y <= self.height)

    def locate(self, pos) -> np.ndarray:
        """Cluster index of every point.

        The tie rule gives the smaller index on shared edges: a point at
        ``x = k * cw`` is in column ``k - 1``.  The outer boundary maps to
        the last cell.
        """
        pos = np.asarray(pos, dtype=float)
        cw, ch = self.cell_size
        col = np.ceil(pos[..., 0] / cw).astype(int) - 1
        row = np.ceil(pos[..., 1] / ch).astype(int) - 1
        col = np.clip(col, 0, self.cols - 1)
        row = np.clip(row, 0, self.rows - 1)
        return row * self.cols + col


@dataclass(frozen=True)
class ClientState:
    id: int
    position: tuple[float, float]
    velocity: tuple[float, float]
    mean_velocity: tuple[float, float]
    memory: float = 0.85

    @property
    def speed_mean(self) -> float:
        return float(np.hypot(*self.mean_velocity))


def init_ppp(area: Area, count: int, seed, params: MobilityParams | None = None) -> list[ClientState]:
    """Place ``count`` clients independently and uniformly over the area.

    A homogeneous PPP conditioned on its count is exactly this.  Every
    client also gets a mean velocity of magnitude ``mean_speed`` in a
    uniformly random direction, and starts moving at that velocity.
    """
    if count < 0:
        raise ConfigError("client count must be >= 0")
    params = params or MobilityParams()
    rng = np.random.default_rng(seed)
    pos, vel, mean_vel = _ppp_arrays(area, count, rng, params)
    return [
        ClientState(i, tuple(pos[i]), tuple(vel[i]), tuple(mean_vel[i]), params.memory)
        for i in range(count)
    ]


def _ppp_arrays(area: Area, count: int, rng: np.random.Generator, params: MobilityParams):
    xy = rng.uniform(0.0, 1.0, size=(count, 2)) * np.array([area.width, area.height])
    heading = rng.uniform(0.0, 2 * np.pi, size=count)
    mean_vel = params.mean_speed * np.column_stack([np.cos(heading), np.sin(heading)])
    return xy, mean_vel.copy(), mean_vel


def reflect(pos: np.ndarray, vel: np.ndarray, area: Area) -> tuple[np.ndarray, np.ndarray]:
    """Mirror positions back into the area, flipping the crossing component.

    Handles overshoots of several widths by folding modulo 2 * extent.
    """
    pos = np.array(pos, dtype=float)
    vel = np.array(vel, dtype=float)
    for axis, extent in ((0, area.width), (1, area.height)):
        p = np.mod(pos[..., axis], 2 * extent)
        flipped = p > extent
        p = np.where(flipped, 2 * extent - p, p)
        # odd number of reflections reverses direction
        crossings = np.floor_divide(pos[..., axis], extent)
        odd = np.mod(crossings, 2) != 0
        pos[..., axis] = p
        vel[..., axis] = np.where(odd, -vel[..., axis], vel[..., axis])
    return pos, vel


def gauss_markov_velocity(vel, mean_vel, memory: float, noise) -> np.ndarray:
    """v' = eta * v + (1 - eta) * v_mean + sqrt(1 - eta^2) * w."""
    vel = np.asarray(vel, dtype=float)
    return memory * vel + (1.0 - memory) * np.asarray(mean_vel) + np.sqrt(1.0 - memory**2) * noise


def step_population(pos, vel, mean_vel, area: Area, dt: float, rng: np.random.Generator,
                    params: MobilityParams):
    """Advance every client one slot; returns new (pos, vel, mean_vel).

    Mean velocities are reflected together with the velocity so a client
    pushed off a wall does not keep being pulled back into it.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    noise = rng.normal(0.0, params.speed_std, size=np.shape(vel))
    new_vel = gauss_markov_velocity(vel, mean_vel, params.memory, noise)
    raw = np.asarray(pos) + new_vel * dt
    new_pos, new_vel2 = reflect(raw, new_vel, area)
    flipped = np.sign(new_vel2) != np.sign(new_vel)
    new_mean = np.where(flipped, -np.asarray(mean_vel), mean_vel)
    return new_pos, new_vel2, new_mean


def step_gauss_markov(client: ClientState, dt: float, rng: np.random.Generator, area: Area,
                      speed_std: float = 0.25) -> ClientState:
    params = MobilityParams(memory=client.memory, mean_speed=client.speed_mean, speed_std=speed_std)
    pos, vel, mean = step_population(
        np.array([client.position]), np.array([client.velocity]),
        np.array([client.mean_velocity]), area, dt, rng, params,
    )
    return replace(client, position=tuple(pos[0]), velocity=tuple(vel[0]), mean_velocity=tuple(mean[0]))


def cluster_membership(clients, area: Area) -> dict[int, set[int]]:
    """Map every cluster index to the set of client ids located in it."""
    members: dict[int, set[int]] = {n: set() for n in range(area.num_clusters)}
    if isinstance(clients, np.ndarray):
        ids = range(len(clients))
        cells = area.locate(clients) if len(clients) else []
    else:
        ids = [c.id for c in clients]
        cells = area.locate(np.array([c.position for c in clients])) if clients else []
    for i, n in zip(ids, cells):
        members[int(n)].add(i)
    return members
