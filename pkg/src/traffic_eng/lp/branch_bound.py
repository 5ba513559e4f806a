"""Best-first branch-and-bound over binary variables."""

from __future__ import annotations

import heapq
import itertools
from typing import Callable

from .model import LpModel, LpSolution, Sense, Status
from .simplex import Basis, NumericalFailure, WarmStartLp, solve_lp

INT_TOL = 1e-6
DEFAULT_NODE_LIMIT = 10**6

# Given the model and the root relaxation, propose 0/1 values for every binary.
Heuristic = Callable[[LpModel, LpSolution], "dict[int, float] | None"]


class NodeLimitExceeded(RuntimeError):
    """Search stopped at the node limit.

    ``incumbent`` is the best integral solution found so far (or None) and
    ``bound`` the best relaxation bound over the unexplored nodes, both in the
    model's own sense.
    """

    def __init__(self, message: str, incumbent: LpSolution | None = None, bound: float = float("nan")):
        super().__init__(message)
        self.incumbent = incumbent
        self.bound = bound


class _NodeLimit(Exception):
    pass


_CONTINUE = object()  # resume from the warm LP's working state


def _most_fractional(sol: LpSolution, model: LpModel, binaries: list[int]) -> int | None:
    best_j, best_frac = None, INT_TOL
    for j in binaries:
        x = sol.assignment[model.variables[j].name]
        frac = min(x, 1.0 - x)
        if frac > best_frac + 1e-12:
            best_j, best_frac = j, frac
    return best_j


def solve_milp(
    model: LpModel,
    node_limit: int = DEFAULT_NODE_LIMIT,
    mip_gap: float = 0.0,
    dive: bool = True,
    heuristic: Heuristic | None = None,
) -> LpSolution:
    """Solve an LP with binary variables to global optimality.

    Each node solves the LP relaxation with some binaries fixed, warm started
    from its parent's basis. The open node with the best relaxation bound is
    expanded first, branching on the most fractional binary (lowest index on
    ties). A root dive and the optional ``heuristic`` supply early incumbents.
    ``mip_gap`` is a relative pruning tolerance; 0 proves optimality.
    ``nodes`` on the result counts LP relaxations solved.
    """
    binaries = model.binaries
    if not binaries:
        return solve_lp(model)

    relaxed = model.relaxed()
    sign = -1.0 if model.sense is Sense.MAX else 1.0
    lp = WarmStartLp(relaxed)
    nodes = 1
    iterations = lp.root.iterations
    root = lp.root
    if root.status is Status.UNBOUNDED:
        # the recession cone is shared by every fixing, so it hinges on integral feasibility
        probe = model.copy()
        probe.set_objective({}, model.sense)
        feasible = solve_milp(probe, node_limit, 0.0, dive, heuristic)
        status = Status.UNBOUNDED if feasible.optimal else Status.INFEASIBLE
        return LpSolution(status, iterations=iterations + feasible.iterations, nodes=nodes + feasible.nodes)
    if root.status is not Status.OPTIMAL:
        return LpSolution(root.status, iterations=iterations, nodes=nodes)
    if _most_fractional(root, model, binaries) is None:
        root.nodes = nodes
        return root
    root_state = lp.snapshot()

    def solve_node(fixed: dict[int, float], new: dict[int, float], start: Basis | None):
        """Solve with ``fixed`` (which includes ``new``); returns (solution, state or None)."""
        nonlocal nodes, iterations
        if nodes >= node_limit:
            raise _NodeLimit
        nodes += 1
        if start is not None:
            try:
                sol = lp.resolve(new, None if start is _CONTINUE else start)
                iterations += sol.iterations
                return sol, (lp.snapshot() if sol.status is Status.OPTIMAL else None)
            except NumericalFailure:
                pass
        sol = solve_lp(relaxed.with_bounds({j: (v, v) for j, v in fixed.items()}))
        iterations += sol.iterations
        return sol, None

    incumbent: LpSolution | None = None

    def prune_level() -> float:
        if incumbent is None:
            return float("inf")
        z = sign * incumbent.objective_value
        return z - max(1e-9 * (1.0 + abs(z)), mip_gap * abs(z))

    def offer(sol: LpSolution) -> None:
        nonlocal incumbent
        if incumbent is None or sign * sol.objective_value < sign * incumbent.objective_value - 1e-12:
            incumbent = sol

    expanding: float | None = None  # bound of a popped node whose children are not all solved
    counter = itertools.count()
    first_j = _most_fractional(root, model, binaries)
    heap = [(sign * root.objective_value, next(counter), {}, root_state, first_j)]
    try:
        if heuristic is not None:
            guess = heuristic(model, root)
            if guess:
                sol, _ = solve_node(dict(guess), dict(guess), root_state)
                if sol.status is Status.OPTIMAL and _most_fractional(sol, model, binaries) is None:
                    offer(sol)
        if dive:
            _dive(root, root_state, model, binaries, solve_node, offer)

        while heap:
            bound, _, fixed, state, j = heapq.heappop(heap)
            if bound >= prune_level():
                continue
            expanding = bound
            for value in (0.0, 1.0):
                child_fixed = {**fixed, j: value}
                child, child_state = solve_node(child_fixed, {j: value}, state)
                if child.status is not Status.OPTIMAL:
                    continue
                child_bound = sign * child.objective_value
                if child_bound >= prune_level():
                    continue
                cj = _most_fractional(child, model, binaries)
                if cj is None:
                    offer(child)
                else:
                    heapq.heappush(heap, (child_bound, next(counter), child_fixed, child_state, cj))
            expanding = None
    except _NodeLimit:
        pending = [b for b, *_ in heap] + ([expanding] if expanding is not None else [])
        open_bound = min(pending, default=float("inf"))
        if incumbent is not None:
            open_bound = min(open_bound, sign * incumbent.objective_value)
        if incumbent is not None:
            incumbent.iterations = iterations
            incumbent.nodes = nodes
        raise NodeLimitExceeded(
            f"explored {nodes} nodes without closing the search",
            incumbent,
            sign * open_bound,
        ) from None

    if incumbent is None:
        return LpSolution(Status.INFEASIBLE, iterations=iterations, nodes=nodes)
    incumbent.iterations = iterations
    incumbent.nodes = nodes
    return incumbent


def _dive(root, root_state, model, binaries, solve_node, offer) -> None:
    """Fix the most fractional binary to its nearest value (else the other) until integral."""
    fixed: dict[int, float] = {}
    sol, state = root, root_state
    resume = root_state
    while True:
        j = _most_fractional(sol, model, binaries)
        if j is None:
            offer(sol)
            return
        x = sol.assignment[model.variables[j].name]
        first = 1.0 if x >= 0.5 else 0.0
        for value in (first, 1.0 - first):
            trial, trial_state = solve_node({**fixed, j: value}, {j: value}, resume)
            if trial.status is Status.OPTIMAL:
                fixed[j] = value
                sol, state = trial, trial_state
                resume = _CONTINUE
                break
            resume = state
        else:
            return
        if state is None:
            return
