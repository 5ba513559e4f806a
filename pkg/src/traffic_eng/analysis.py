"""Dataset analyses: optimality gap between path budgets, flow per path rank, residual-capacity gap."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Iterable

from .experiment import STATUS_NODE_LIMIT, STATUS_OPTIMAL, InstanceRecord

ANALYSES = ("gap", "pathflow", "residualgap")


class MissingPairs(ValueError):
    pass


class EmptySelection(ValueError):
    pass


def _instance_key(r: InstanceRecord, *, drop: str) -> tuple:
    key = {
        "n": r.n, "l": r.l, "topo_seed": r.topo_seed, "tm_seed": r.tm_seed, "tm_type": r.tm_type,
        "network_load": r.network_load, "obj_type": r.obj_type, "k": r.k,
        "routing_strategy": r.routing_strategy,
    }
    del key[drop]
    return tuple(key.values())


def gap_pct(opt_lo: float, opt_hi: float) -> float:
    return 100.0 * (opt_lo - opt_hi) / opt_lo


@dataclass
class GapMatrix:
    """Mean gap per (n, l) cell; rows are n values and columns l values."""

    ns: list[int]
    ls: list[int]
    cells: dict[tuple[int, int], float]
    pairs: dict[tuple[int, int], list[float]] = field(default_factory=dict)
    excluded_zero: int = 0  # pairs dropped because the small-budget optimum was 0

    def mean(self, n: int, l: int) -> float:
        return self.cells[(n, l)]

    def rows(self) -> list[dict]:
        return [{"n": n, "l": l, "mean_gap_pct": self.cells[(n, l)]} for (n, l) in sorted(self.cells)]


def analyze_gap(
    records: Iterable[InstanceRecord],
    k_lo: int,
    k_hi: int,
    objective: str = "LB",
    strategy: str | None = None,
) -> GapMatrix:
    objective = objective.upper()
    chosen = [
        r for r in records
        if r.obj_type == objective and r.status == STATUS_OPTIMAL and r.k in (k_lo, k_hi)
        and (strategy is None or r.routing_strategy == strategy.upper())
    ]
    lo = {_instance_key(r, drop="k"): r for r in chosen if r.k == k_lo}
    hi = {_instance_key(r, drop="k"): r for r in chosen if r.k == k_hi}
    cells_seen = sorted({(r.n, r.l) for r in chosen})
    if not cells_seen:
        raise MissingPairs(f"no optimal {objective} records at k={k_lo} or k={k_hi}")
    pairs: dict[tuple[int, int], list[float]] = {c: [] for c in cells_seen}
    matched = {c: 0 for c in cells_seen}
    excluded = 0
    for key, a in lo.items():
        b = hi.get(key)
        if b is None:
            continue
        matched[(a.n, a.l)] += 1
        if a.obj_val == 0:
            excluded += 1
            continue
        pairs[(a.n, a.l)].append(gap_pct(a.obj_val, b.obj_val))
    empty = [c for c in cells_seen if matched[c] == 0]
    if empty:
        raise MissingPairs(f"no k={k_lo}/k={k_hi} pairs for (n, l) cells {empty}")
    cells = {c: (statistics.fmean(v) if v else math.nan) for c, v in pairs.items()}
    return GapMatrix(
        sorted({n for n, _ in cells_seen}), sorted({l for _, l in cells_seen}), cells, pairs, excluded
    )


@dataclass
class PathFlowStats:
    """Statistics of aggregated flow per path rank (1 = shortest) across records."""

    mean: dict[int, float]
    std: dict[int, float]
    min: dict[int, float]
    max: dict[int, float]
    count: dict[int, int]

    def rows(self) -> list[dict]:
        return [
            {"path_index": i, "mean": self.mean[i], "std": self.std[i], "min": self.min[i], "max": self.max[i]}
            for i in sorted(self.mean)
        ]


def analyze_pathflow(
    records: Iterable[InstanceRecord],
    objective: str = "LB",
    k: int | None = None,
    strategy: str | None = None,
) -> PathFlowStats:
    objective = objective.upper()
    values: dict[int, list[float]] = {}
    for r in records:
        if r.obj_type != objective or r.status != STATUS_OPTIMAL or not r.flow_agg_per_path:
            continue
        if (k is not None and r.k != k) or (strategy is not None and r.routing_strategy != strategy.upper()):
            continue
        for idx, v in r.flow_agg_per_path.items():
            values.setdefault(int(idx), []).append(float(v))
    if not values:
        raise EmptySelection(f"no optimal {objective} records with path-flow data")
    return PathFlowStats(
        mean={i: statistics.fmean(v) for i, v in values.items()},
        std={i: statistics.pstdev(v) for i, v in values.items()},
        min={i: min(v) for i, v in values.items()},
        max={i: max(v) for i, v in values.items()},
        count={i: len(v) for i, v in values.items()},
    )


@dataclass
class ResidualGapSeries:
    """Per link-pair count: residual_cap(multipath) - residual_cap(singlepath) over paired records."""

    gaps: dict[int, list[float]]
    objective_pairs: dict[int, list[tuple[float, float]]]  # (multipath, singlepath) objective values
    incumbent_pairs: int = 0  # pairs whose single-path side stopped at the node limit

    def median(self, l: int) -> float:
        return statistics.median(self.gaps[l])

    def mean(self, l: int) -> float:
        return statistics.fmean(self.gaps[l])

    def rows(self) -> list[dict]:
        out = []
        for l in sorted(self.gaps):
            g = self.gaps[l]
            objs = self.objective_pairs[l]
            out.append({
                "l": l,
                "pairs": len(g),
                "mean_gap": statistics.fmean(g),
                "median_gap": statistics.median(g),
                "min_gap": min(g),
                "max_gap": max(g),
                "mean_obj_multipath": statistics.fmean(m for m, _ in objs),
                "mean_obj_singlepath": statistics.fmean(s for _, s in objs),
            })
        return out


def analyze_residual_gap(
    records: Iterable[InstanceRecord],
    objective: str = "LB",
    k: int | None = None,
) -> ResidualGapSeries:
    objective = objective.upper()
    usable = (STATUS_OPTIMAL, STATUS_NODE_LIMIT)
    multi, single = {}, {}
    for r in records:
        if r.obj_type != objective or r.status not in usable or (k is not None and r.k != k):
            continue
        side = multi if r.routing_strategy == "MULTIPATH" else single
        side[_instance_key(r, drop="routing_strategy")] = r
    gaps: dict[int, list[float]] = {}
    objs: dict[int, list[tuple[float, float]]] = {}
    incumbents = 0
    for key, m in multi.items():
        s = single.get(key)
        if s is None:
            continue
        incumbents += s.status == STATUS_NODE_LIMIT
        gaps.setdefault(m.l, []).append(m.residual_cap - s.residual_cap)
        objs.setdefault(m.l, []).append((m.obj_val, s.obj_val))
    if not gaps:
        raise MissingPairs(f"no multipath/singlepath {objective} pairs")
    return ResidualGapSeries(gaps, objs, incumbents)


def run_analysis(name: str, records: list[InstanceRecord], objective: str = "LB",
                 k_lo: int = 3, k_hi: int = 7) -> list[dict]:
    """Plot-ready rows for one of :data:`ANALYSES`."""
    if name == "gap":
        return analyze_gap(records, k_lo, k_hi, objective).rows()
    if name == "pathflow":
        return analyze_pathflow(records, objective).rows()
    if name == "residualgap":
        return analyze_residual_gap(records, objective).rows()
    raise ValueError(f"unknown analysis {name!r}; choose from {ANALYSES}")
