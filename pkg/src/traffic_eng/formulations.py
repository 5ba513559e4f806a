"""Path-based LP/MILP models for minimum-cost routing, load balancing and average delay."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .lp import LpModel, LpSolution, Relation, Status, VarKind, solve_lp, solve_milp
from .topology import Path, Topology, k_shortest_paths
from .traffic import TrafficMatrix

OBJECTIVES = ("MCR", "LB", "AD")
STRATEGIES = ("MULTIPATH", "SINGLEPATH")

# (slope, intercept) of the affine pieces a*z - b bounding the delay y/(c-y) from below
PLA_PIECES: tuple[tuple[Fraction, Fraction], ...] = (
    (Fraction(3, 2), Fraction(0)),
    (Fraction(9, 2), Fraction(1)),
    (Fraction(15), Fraction(8)),
    (Fraction(50), Fraction(36)),
    (Fraction(200), Fraction(171)),
    (Fraction(4000), Fraction(3781)),
)
PLA_BREAKPOINTS = (Fraction(1, 3), Fraction(2, 3), Fraction(4, 5), Fraction(9, 10), Fraction(19, 20))

TOL = 1e-6


class InfeasibleInstance(RuntimeError):
    """The routing model has no optimal solution (infeasible or unbounded)."""


@dataclass(frozen=True)
class CandidatePathSet:
    k: int
    paths: tuple[tuple[Path, ...], ...]  # aligned with TrafficMatrix.demands

    def costs(self) -> list[list[float]]:
        return [[p.total_weight for p in ps] for ps in self.paths]

    @property
    def n_variables(self) -> int:
        return sum(len(ps) for ps in self.paths)


@dataclass(frozen=True)
class FlowAllocation:
    flows: tuple[tuple[float, ...], ...]  # flows[d][p], aligned with CandidatePathSet.paths
    objective_value: float
    objective: str
    strategy: str


@dataclass(frozen=True)
class LinkLoadVector:
    links: tuple[tuple[int, int], ...]
    capacity: tuple[float, ...]
    load: tuple[float, ...]

    @property
    def utilization(self) -> tuple[float, ...]:
        return tuple(y / c for y, c in zip(self.load, self.capacity))

    @property
    def residual(self) -> tuple[float, ...]:
        return tuple(c - y for y, c in zip(self.load, self.capacity))


def build_candidate_paths(topo: Topology, tm: TrafficMatrix, k: int) -> CandidatePathSet:
    if k < 1:
        raise ValueError("path budget k must be >= 1")
    return CandidatePathSet(
        k, tuple(tuple(k_shortest_paths(topo, d.src, d.dst, k)) for d in tm.demands)
    )


def truncate(paths: CandidatePathSet, k: int) -> CandidatePathSet:
    """Candidate set for a smaller budget (prefixes of the larger one)."""
    if k > paths.k:
        raise ValueError(f"cannot grow a k={paths.k} path set to k={k}")
    return CandidatePathSet(k, tuple(ps[:k] for ps in paths.paths))


def x_name(d_src: int, d_dst: int, p: int) -> str:
    return f"x_{d_src}_{d_dst}_{p}"


def _flow_variables(model: LpModel, paths: CandidatePathSet, tm: TrafficMatrix):
    """Add x_dp, the demand rows, and return per-demand var ids plus per-link incidence."""
    var_ids: list[list[int]] = []
    incidence: dict[int, list[int]] = {}
    for d, ps in zip(tm.demands, paths.paths):
        ids = []
        for p, path in enumerate(ps):
            j = model.add_variable(x_name(d.src, d.dst, p))
            ids.append(j)
            for li in path.links:
                incidence.setdefault(li, []).append(j)
        var_ids.append(ids)
        model.add_constraint({j: 1.0 for j in ids}, Relation.EQ, d.volume, f"demand_{d.src}_{d.dst}")
    return var_ids, incidence


def build_mcr(paths: CandidatePathSet, tm: TrafficMatrix, topo: Topology) -> LpModel:
    model = LpModel("MCR")
    var_ids, incidence = _flow_variables(model, paths, tm)
    for li in sorted(incidence):
        lk = topo.links[li]
        model.add_constraint({j: 1.0 for j in incidence[li]}, Relation.LE, lk.capacity, f"cap_{lk.src}_{lk.dst}")
    cost = {}
    for ids, ps in zip(var_ids, paths.paths):
        for j, path in zip(ids, ps):
            cost[j] = path.total_weight
    model.set_objective(cost, "min")
    return model


def build_lb(paths: CandidatePathSet, tm: TrafficMatrix, topo: Topology) -> LpModel:
    model = LpModel("LB")
    _, incidence = _flow_variables(model, paths, tm)
    r = model.add_variable("r")
    for li in sorted(incidence):
        lk = topo.links[li]
        row = {j: 1.0 for j in incidence[li]}
        row[r] = -lk.capacity
        model.add_constraint(row, Relation.LE, 0.0, f"util_{lk.src}_{lk.dst}")
    model.set_objective({r: 1.0}, "min")
    return model


def pla_delay(z: float) -> float:
    """Piecewise-linear delay approximation: the max of the six affine pieces."""
    if z < 0:
        raise ValueError("utilization must be non-negative")
    return max(float(a) * z - float(b) for a, b in PLA_PIECES)


def build_ad(paths: CandidatePathSet, tm: TrafficMatrix, topo: Topology) -> LpModel:
    model = LpModel("AD")
    _, incidence = _flow_variables(model, paths, tm)
    objective = {}
    for li, lk in enumerate(topo.links):
        y = model.add_variable(f"y_{lk.src}_{lk.dst}")
        r = model.add_variable(f"rl_{lk.src}_{lk.dst}")
        row = {j: 1.0 for j in incidence.get(li, [])}
        row[y] = -1.0
        model.add_constraint(row, Relation.EQ, 0.0, f"load_{lk.src}_{lk.dst}")
        for i, (a, b) in enumerate(PLA_PIECES):
            model.add_constraint(
                {r: 1.0, y: -float(a)}, Relation.GE, -float(b) * lk.capacity, f"pla{i}_{lk.src}_{lk.dst}"
            )
        objective[r] = 1.0 / lk.capacity
    model.set_objective(objective, "min")
    return model


BUILDERS = {"MCR": build_mcr, "LB": build_lb, "AD": build_ad}


def build_model(objective: str, paths: CandidatePathSet, tm: TrafficMatrix, topo: Topology) -> LpModel:
    try:
        builder = BUILDERS[objective.upper()]
    except KeyError:
        raise ValueError(f"unknown objective {objective!r}") from None
    return builder(paths, tm, topo)


def apply_single_path(model: LpModel, paths: CandidatePathSet, tm: TrafficMatrix) -> LpModel:
    """Force each demand onto one candidate path with binary selectors."""
    out = model.copy()
    out.name = f"{model.name}_SINGLEPATH"
    for d, ps in zip(tm.demands, paths.paths):
        selectors = {}
        for p in range(len(ps)):
            x = out.index(x_name(d.src, d.dst, p))
            u = out.add_variable(u_name(d.src, d.dst, p), kind=VarKind.BINARY)
            selectors[u] = 1.0
            out.add_constraint({x: 1.0, u: -d.volume}, Relation.LE, 0.0, f"pick_{d.src}_{d.dst}_{p}")
        out.add_constraint(selectors, Relation.EQ, 1.0, f"one_{d.src}_{d.dst}")
    return out


def u_name(d_src: int, d_dst: int, p: int) -> str:
    return f"u_{d_src}_{d_dst}_{p}"


def _pla_array(z: np.ndarray) -> np.ndarray:
    return np.max([float(a) * z - float(b) for a, b in PLA_PIECES], axis=0)


def single_path_heuristic(
    objective: str,
    paths: CandidatePathSet,
    tm: TrafficMatrix,
    topo: Topology,
    kicks: int = 100,
    kick_size: int = 3,
    seed: int = 0,
):
    """Incumbent proposer for the single-path MILP (iterated local search).

    Each demand starts on the path carrying most of its flow in the root
    relaxation. Single-demand path swaps are applied while they improve the
    score; then ``kicks`` times a few demands crossing the most utilized link
    are moved at random and the search is repeated, keeping the best result.
    The score is (max utilization, sum of squared utilizations) for LB, the
    PLA delay sum for AD, and (total overload, routing cost) for MCR.
    """
    objective = objective.upper()
    cap = np.array([lk.capacity for lk in topo.links])
    vols = np.array([d.volume for d in tm.demands])
    links = [[np.array(p.links, dtype=int) for p in ps] for ps in paths.paths]
    weights = [[p.total_weight for p in ps] for ps in paths.paths]
    order = np.argsort(-vols, kind="stable")

    def score(load: np.ndarray, cost: float) -> tuple[float, float]:
        u = load / cap
        if objective == "LB":
            return (float(u.max()), float(u @ u))
        if objective == "AD":
            return (float(_pla_array(u).sum()), 0.0)
        return (float(np.maximum(load - cap, 0.0).sum()), cost)

    def better(a, b) -> bool:
        return a[0] < b[0] - 1e-12 or (a[0] <= b[0] + 1e-12 and a[1] < b[1] - 1e-12)

    def move(load, i, old, new):
        out = load.copy()
        np.subtract.at(out, links[i][old], vols[i])
        np.add.at(out, links[i][new], vols[i])
        return out

    def descend(choice, load, cost):
        best = score(load, cost)
        improved = True
        while improved:
            improved = False
            for i in order:
                if vols[i] == 0.0:
                    continue
                for p in range(len(links[i])):
                    if p == choice[i]:
                        continue
                    trial = move(load, i, choice[i], p)
                    trial_cost = cost + vols[i] * (weights[i][p] - weights[i][choice[i]])
                    sc = score(trial, trial_cost)
                    if better(sc, best):
                        choice[i], load, cost, best = p, trial, trial_cost, sc
                        improved = True
        return choice, load, cost, best

    def propose(model: LpModel, relaxation: LpSolution) -> dict[int, float]:
        rng = np.random.default_rng(seed)
        choice = []
        for d, ps in zip(tm.demands, paths.paths):
            xs = [relaxation.assignment[x_name(d.src, d.dst, p)] for p in range(len(ps))]
            choice.append(int(np.argmax(xs)))
        load = np.zeros(len(cap))
        cost = 0.0
        for i, c in enumerate(choice):
            np.add.at(load, links[i][c], vols[i])
            cost += vols[i] * weights[i][c]
        choice, load, cost, best = descend(choice, load, cost)
        for _ in range(kicks):
            hot = int(np.argmax(load / cap))
            movable = [i for i in range(len(choice)) if len(links[i]) > 1 and hot in links[i][choice[i]]]
            if not movable:
                break
            c2, l2, k2 = list(choice), load, cost
            for i in rng.choice(movable, size=min(kick_size, len(movable)), replace=False):
                p = int(rng.integers(len(links[i])))
                l2 = move(l2, i, c2[i], p)
                k2 += vols[i] * (weights[i][p] - weights[i][c2[i]])
                c2[i] = p
            c2, l2, k2, b2 = descend(c2, l2, k2)
            if better(b2, best):
                choice, load, cost, best = c2, l2, k2, b2
        fixes = {}
        for i, (d, ps) in enumerate(zip(tm.demands, paths.paths)):
            for p in range(len(ps)):
                fixes[model.index(u_name(d.src, d.dst, p))] = 1.0 if p == choice[i] else 0.0
        return fixes

    return propose


def decode_solution(
    sol: LpSolution,
    paths: CandidatePathSet,
    tm: TrafficMatrix,
    topo: Topology,
    objective: str = "",
    strategy: str = "MULTIPATH",
) -> tuple[FlowAllocation, LinkLoadVector]:
    """Read x_dp from a solution, recompute link loads and check the allocation."""
    if sol.status is not Status.OPTIMAL:
        raise InfeasibleInstance(f"solver status {sol.status.value}")
    flows = tuple(
        tuple(max(0.0, sol.assignment[x_name(d.src, d.dst, p)]) for p in range(len(ps)))
        for d, ps in zip(tm.demands, paths.paths)
    )
    load = np.zeros(len(topo.links))
    for fs, ps in zip(flows, paths.paths):
        for x, path in zip(fs, ps):
            if x:
                load[list(path.links)] += x
    loads = LinkLoadVector(
        tuple((lk.src, lk.dst) for lk in topo.links),
        tuple(lk.capacity for lk in topo.links),
        tuple(float(v) for v in load),
    )
    alloc = FlowAllocation(flows, sol.objective_value, objective.upper(), strategy.upper())
    _check(alloc, loads, tm, sol)
    return alloc, loads


def _check(alloc: FlowAllocation, loads: LinkLoadVector, tm: TrafficMatrix, sol: LpSolution) -> None:
    for d, fs in zip(tm.demands, alloc.flows):
        if abs(math.fsum(fs) - d.volume) > TOL * max(1.0, d.volume):
            raise AssertionError(f"demand {d.src}->{d.dst}: routed {math.fsum(fs)} of {d.volume}")
        if alloc.strategy == "SINGLEPATH":
            used = sum(x > TOL for x in fs)
            if used > 1 or (d.volume > TOL and used != 1):
                raise AssertionError(f"demand {d.src}->{d.dst} uses {used} paths under SINGLEPATH")
    scale = sol.assignment.get("r", 1.0) if alloc.objective == "LB" else 1.0
    if alloc.objective in ("MCR", "LB"):
        for y, c in zip(loads.load, loads.capacity):
            if y > scale * c + TOL * max(1.0, c):
                raise AssertionError(f"link load {y} exceeds {scale} x capacity {c}")


def route(
    topo: Topology,
    tm: TrafficMatrix,
    paths: CandidatePathSet,
    objective: str,
    strategy: str = "MULTIPATH",
    **milp_options,
) -> tuple[FlowAllocation, LinkLoadVector, LpSolution]:
    """Build, solve and decode one routing instance."""
    model = build_model(objective, paths, tm, topo)
    if strategy.upper() == "SINGLEPATH":
        milp_options.setdefault("heuristic", single_path_heuristic(objective, paths, tm, topo))
        sol = solve_milp(apply_single_path(model, paths, tm), **milp_options)
    elif strategy.upper() == "MULTIPATH":
        sol = solve_lp(model)
    else:
        raise ValueError(f"unknown routing strategy {strategy!r}")
    alloc, loads = decode_solution(sol, paths, tm, topo, objective, strategy)
    return alloc, loads, sol
