"""Random connected topologies, betweenness-based capacities, INV_CAP weights, k shortest paths."""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Sequence

import networkx as nx
import numpy as np

DEFAULT_MAX_ATTEMPTS = 1000
WEIGHT_SETTINGS = ("INV_CAP",)


class InvalidSize(ValueError):
    pass


class ConnectivityFailure(RuntimeError):
    pass


class UnsupportedSetting(ValueError):
    pass


class NoPath(RuntimeError):
    pass


Pair = tuple[int, int]


@dataclass(frozen=True)
class Link:
    src: int
    dst: int
    capacity: float
    weight: float

    @property
    def pair(self) -> Pair:
        return (min(self.src, self.dst), max(self.src, self.dst))


@dataclass(frozen=True)
class Topology:
    """Undirected link pairs realised as two directed links with shared attributes.

    ``capacity`` and ``weight`` are aligned with ``pairs``; ``nan`` means not yet
    configured.
    """

    n: int
    pairs: tuple[Pair, ...]
    capacity: tuple[float, ...] = ()
    weight: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.capacity:
            object.__setattr__(self, "capacity", (math.nan,) * len(self.pairs))
        if not self.weight:
            object.__setattr__(self, "weight", (math.nan,) * len(self.pairs))

    @property
    def link_pairs(self) -> int:
        return len(self.pairs)

    @cached_property
    def links(self) -> tuple[Link, ...]:
        out = []
        for (u, v), c, w in zip(self.pairs, self.capacity, self.weight):
            out.append(Link(u, v, c, w))
            out.append(Link(v, u, c, w))
        return tuple(sorted(out, key=lambda lk: (lk.src, lk.dst)))

    @cached_property
    def link_index(self) -> dict[Pair, int]:
        """Directed (src, dst) -> position in :attr:`links`."""
        return {(lk.src, lk.dst): i for i, lk in enumerate(self.links)}

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.pairs:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    @property
    def configured(self) -> bool:
        return not any(math.isnan(c) for c in self.capacity)

    @property
    def weighted(self) -> bool:
        return not any(math.isnan(w) for w in self.weight)

    def is_connected(self) -> bool:
        return _reachable(self.adjacency, 0) == self.n

    def digraph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(self.n))
        for lk in self.links:
            g.add_edge(lk.src, lk.dst, capacity=lk.capacity, weight=lk.weight)
        return g


@dataclass(frozen=True)
class Path:
    nodes: tuple[int, ...]
    links: tuple[int, ...]  # indices into Topology.links
    total_weight: float = field(compare=False)

    def __len__(self) -> int:
        return len(self.links)


def _reachable(adj: Sequence[Sequence[int]], start: int) -> int:
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen)


def generate_topology(
    n: int, link_pairs: int, seed: int | None = None, max_attempts: int = DEFAULT_MAX_ATTEMPTS
) -> Topology:
    """Sample a connected G(n, M) graph: M distinct pairs drawn uniformly, resampled until connected."""
    if n < 2:
        raise InvalidSize(f"need at least 2 nodes, got {n}")
    max_pairs = n * (n - 1) // 2
    if not n - 1 <= link_pairs <= max_pairs:
        raise InvalidSize(
            f"link_pairs={link_pairs} outside [{n - 1}, {max_pairs}] for n={n}"
        )
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")

    all_pairs = list(itertools.combinations(range(n), 2))
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        chosen = rng.choice(max_pairs, size=link_pairs, replace=False)
        topo = Topology(n, tuple(sorted(all_pairs[i] for i in chosen)))
        if topo.is_connected():
            return topo
    raise ConnectivityFailure(
        f"no connected graph with n={n}, link_pairs={link_pairs} after {max_attempts} attempts"
    )


def edge_betweenness(topo: Topology) -> dict[Pair, float]:
    """Hop-count edge betweenness over ordered node pairs (twice the unordered count)."""
    g = nx.Graph()
    g.add_nodes_from(range(topo.n))
    g.add_edges_from(topo.pairs)
    eb = nx.edge_betweenness_centrality(g, normalized=False)
    return {p: 2.0 * eb[p] if p in eb else 2.0 * eb[p[::-1]] for p in topo.pairs}


def assign_capacities(topo: Topology, capacity_set: Sequence[float]) -> Topology:
    """Give larger capacities to pairs with larger betweenness.

    Pairs are ranked by (betweenness, min id, max id) and split into
    ``len(capacity_set)`` contiguous groups of near-equal size, the first
    groups taking the remainder; group i gets ``capacity_set[i]``.
    """
    caps = [float(c) for c in capacity_set]
    if not caps:
        raise ValueError("capacity_set is empty")
    if any(c <= 0 for c in caps) or any(b <= a for a, b in zip(caps, caps[1:])):
        raise ValueError(f"capacity_set must be positive and strictly increasing: {caps}")
    eb = edge_betweenness(topo)
    ranked = sorted(range(topo.link_pairs), key=lambda i: (eb[topo.pairs[i]], topo.pairs[i]))
    capacity = [0.0] * topo.link_pairs
    for cap, group in zip(caps, np.array_split(np.array(ranked, dtype=int), len(caps))):
        for i in group:
            capacity[i] = cap
    return replace(topo, capacity=tuple(capacity))


def assign_weights(topo: Topology, setting: str = "INV_CAP") -> Topology:
    if str(setting).upper() != "INV_CAP":
        raise UnsupportedSetting(f"weight setting {setting!r} not supported; use one of {WEIGHT_SETTINGS}")
    if not topo.configured:
        raise ValueError("capacities must be assigned before weights")
    return replace(topo, weight=tuple(1.0 / c for c in topo.capacity))


def _make_path(topo: Topology, nodes: Sequence[int]) -> Path:
    idx = topo.link_index
    links = tuple(idx[(u, v)] for u, v in zip(nodes, nodes[1:]))
    return Path(tuple(nodes), links, math.fsum(topo.links[i].weight for i in links))


def _order_key(p: Path) -> tuple[float, tuple[int, ...]]:
    # Rounding absorbs summation-order noise so equal-weight paths tie exactly.
    return (round(p.total_weight, 9), p.nodes)


def k_shortest_paths(topo: Topology, src: int, dst: int, k: int) -> list[Path]:
    """Up to k loopless paths by non-decreasing weight (Yen), ties by node sequence.

    Paths are pulled from Yen's generator until the next one is strictly
    heavier than the k-th, so equal-weight paths are ordered
    lexicographically and smaller budgets give prefixes of larger ones.
    """
    if src == dst:
        raise ValueError("src and dst must differ")
    if k < 1:
        raise ValueError("k must be positive")
    if not topo.weighted:
        raise ValueError("weights must be assigned before computing shortest paths")
    gen = nx.shortest_simple_paths(_cached_digraph(topo), src, dst, weight="weight")
    found: list[Path] = []
    try:
        for nodes in gen:
            p = _make_path(topo, nodes)
            if len(found) >= k and _order_key(p)[0] > _order_key(found[k - 1])[0]:
                break
            found.append(p)
            found.sort(key=_order_key)
    except nx.NetworkXNoPath as exc:
        raise NoPath(f"no path from {src} to {dst}") from exc
    return found[:k]


_DIGRAPHS: dict[Topology, nx.DiGraph] = {}


def _cached_digraph(topo: Topology) -> nx.DiGraph:
    g = _DIGRAPHS.get(topo)
    if g is None:
        if len(_DIGRAPHS) > 64:
            _DIGRAPHS.clear()
        g = _DIGRAPHS[topo] = topo.digraph()
    return g


def avg_nodal_degree(topo: Topology) -> float:
    return 2.0 * topo.link_pairs / topo.n


def build_topology(
    n: int,
    link_pairs: int,
    capacity_set: Sequence[float],
    seed: int | None = None,
    weight_setting: str = "INV_CAP",
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> Topology:
    """Generate, assign capacities, assign weights."""
    topo = generate_topology(n, link_pairs, seed, max_attempts)
    return assign_weights(assign_capacities(topo, sorted(capacity_set)), weight_setting)
