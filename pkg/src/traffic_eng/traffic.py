"""Static traffic matrices (gravity, bimodal, lognormal) and load scaling."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .topology import Topology, k_shortest_paths

TM_TYPES = ("GRAVITY", "BIMODAL", "LOGNORMAL")

BIMODAL_LARGE_FRACTION = 0.1
BIMODAL_SMALL_RANGE = (1.0, 10.0)
BIMODAL_LARGE_RANGE = (50.0, 100.0)
LOGNORMAL_MU = 1.0
LOGNORMAL_SIGMA = 1.0


class DegenerateMatrix(ValueError):
    pass


@dataclass(frozen=True)
class Demand:
    src: int
    dst: int
    volume: float


@dataclass(frozen=True)
class TrafficMatrix:
    """One demand per ordered node pair, in (src, dst) lexicographic order."""

    n: int
    volumes: tuple[float, ...]
    model: str

    def __post_init__(self):
        if len(self.volumes) != self.n * (self.n - 1):
            raise ValueError(f"expected {self.n * (self.n - 1)} volumes, got {len(self.volumes)}")
        if any(not math.isfinite(v) or v < 0 for v in self.volumes):
            raise ValueError("volumes must be finite and non-negative")

    @cached_property
    def demands(self) -> tuple[Demand, ...]:
        return tuple(Demand(s, t, v) for (s, t), v in zip(ordered_pairs(self.n), self.volumes))

    @property
    def total(self) -> float:
        return math.fsum(self.volumes)

    def __len__(self) -> int:
        return len(self.volumes)

    def as_matrix(self) -> np.ndarray:
        m = np.zeros((self.n, self.n))
        for d in self.demands:
            m[d.src, d.dst] = d.volume
        return m

    def scaled(self, factor: float) -> TrafficMatrix:
        return TrafficMatrix(self.n, tuple(v * factor for v in self.volumes), self.model)


def ordered_pairs(n: int) -> list[tuple[int, int]]:
    return [(s, t) for s in range(n) for t in range(n) if s != t]


def node_capacity(topo: Topology) -> np.ndarray:
    """Total capacity of the directed links entering or leaving each node."""
    m = np.zeros(topo.n)
    for (u, v), c in zip(topo.pairs, topo.capacity):
        m[u] += 2 * c
        m[v] += 2 * c
    return m


def gravity_tm(topo: Topology, seed: int | None = None) -> TrafficMatrix:
    if not topo.configured:
        raise ValueError("gravity model needs link capacities")
    mass = node_capacity(topo)
    total = mass.sum()
    vols = [mass[s] * mass[t] / (total - mass[s]) for s, t in ordered_pairs(topo.n)]
    return TrafficMatrix(topo.n, tuple(vols), "GRAVITY")


def bimodal_tm(
    topo: Topology,
    seed: int | None = None,
    large_fraction: float = BIMODAL_LARGE_FRACTION,
    small_range: tuple[float, float] = BIMODAL_SMALL_RANGE,
    large_range: tuple[float, float] = BIMODAL_LARGE_RANGE,
) -> TrafficMatrix:
    """A random ``ceil(large_fraction * n(n-1))`` pairs draw from ``large_range``, the rest from ``small_range``."""
    if not 0.0 <= large_fraction < 1.0:
        raise ValueError(f"large_fraction must be in [0, 1), got {large_fraction}")
    for lo, hi in (small_range, large_range):
        if not 0.0 <= lo <= hi:
            raise ValueError(f"bad range ({lo}, {hi})")
    n_pairs = topo.n * (topo.n - 1)
    n_large = math.ceil(large_fraction * n_pairs - 1e-9)
    rng = np.random.default_rng(seed)
    large = np.zeros(n_pairs, dtype=bool)
    large[rng.choice(n_pairs, size=n_large, replace=False)] = True
    vols = np.where(
        large,
        rng.uniform(*large_range, size=n_pairs),
        rng.uniform(*small_range, size=n_pairs),
    )
    return TrafficMatrix(topo.n, tuple(float(v) for v in vols), "BIMODAL")


def lognormal_tm(
    topo: Topology,
    seed: int | None = None,
    mu: float = LOGNORMAL_MU,
    sigma: float = LOGNORMAL_SIGMA,
) -> TrafficMatrix:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    rng = np.random.default_rng(seed)
    vols = rng.lognormal(mu, sigma, size=topo.n * (topo.n - 1))
    return TrafficMatrix(topo.n, tuple(float(v) for v in vols), "LOGNORMAL")


def generate_tm(tm_type: str, topo: Topology, seed: int | None = None) -> TrafficMatrix:
    makers = {"GRAVITY": gravity_tm, "BIMODAL": bimodal_tm, "LOGNORMAL": lognormal_tm}
    try:
        return makers[tm_type.upper()](topo, seed)
    except KeyError:
        raise ValueError(f"unknown traffic matrix type {tm_type!r}") from None


def shortest_path_loads(tm: TrafficMatrix, topo: Topology) -> np.ndarray:
    """Per directed link load when every demand follows its single shortest path."""
    loads = np.zeros(len(topo.links))
    for d in tm.demands:
        if d.volume == 0.0:
            continue
        (path,) = k_shortest_paths(topo, d.src, d.dst, 1)
        loads[list(path.links)] += d.volume
    return loads


def max_shortest_path_utilization(tm: TrafficMatrix, topo: Topology) -> float:
    caps = np.array([lk.capacity for lk in topo.links])
    return float(np.max(shortest_path_loads(tm, topo) / caps))


def scale_to_max_utilization(tm: TrafficMatrix, topo: Topology, max_u: float) -> TrafficMatrix:
    """Scale so shortest-path routing peaks at exactly ``max_u`` utilization."""
    if not 0.0 < max_u <= 1.0:
        raise ValueError(f"max_u must be in (0, 1], got {max_u}")
    if not any(v > 0 for v in tm.volumes):
        raise DegenerateMatrix("all demand volumes are zero")
    u_star = max_shortest_path_utilization(tm, topo)
    return tm.scaled(max_u / u_star)
