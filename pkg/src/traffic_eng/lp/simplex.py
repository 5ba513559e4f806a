"""Dense two-phase primal simplex.

The model is converted to ``min c.x, A x = b, x >= 0`` with ``b >= 0`` by
shifting/splitting variables and adding slack, surplus and artificial
columns. Rows are equilibrated to unit max-norm. Pricing is Dantzig's rule
until 50 consecutive degenerate pivots, then Bland's rule for the rest of the
phase. The tableau is periodically rebuilt from the original data and the
final basic solution is recomputed by a direct solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import LpModel, LpSolution, Relation, Sense, Status

FEAS_TOL = 1e-6
PIVOT_TOL = 1e-10
_COST_TOL = 1e-9
_ELIGIBLE = 1e-9
_DEGENERATE_SWITCH = 50
_REFACTOR_EVERY = 100
_SMALL_PIVOT_LIMIT = 5


class NumericalFailure(RuntimeError):
    """The simplex iterations became ill-conditioned or failed to terminate."""


@dataclass
class _StandardForm:
    A: np.ndarray  # m x n_struct, rows scaled, b >= 0
    b: np.ndarray
    upper: np.ndarray  # per structural column, inf when unbounded
    rel: list[Relation]
    c: np.ndarray
    c0: float
    col_var: list[int]  # original variable per structural column
    col_sign: list[float]
    offset: np.ndarray  # per original variable
    trivially_infeasible: bool = False


def _standard_form(model: LpModel) -> _StandardForm:
    n = model.n_vars
    offset = np.zeros(n)
    col_var: list[int] = []
    col_sign: list[float] = []
    cols_of: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    upper: list[float] = []

    for j, v in enumerate(model.variables):
        lb, ub = v.lb, v.ub
        if math.isfinite(lb) and math.isfinite(ub) and ub - lb <= 1e-12:
            offset[j] = lb
            continue
        if math.isfinite(lb):
            offset[j] = lb
            cols_of[j].append((len(col_var), 1.0))
            col_var.append(j)
            col_sign.append(1.0)
            upper.append(ub - lb)
        elif math.isfinite(ub):
            offset[j] = ub
            cols_of[j].append((len(col_var), -1.0))
            col_var.append(j)
            col_sign.append(-1.0)
            upper.append(math.inf)
        else:
            for s in (1.0, -1.0):
                cols_of[j].append((len(col_var), s))
                col_var.append(j)
                col_sign.append(s)
                upper.append(math.inf)

    n_struct = len(col_var)
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    rel: list[Relation] = []
    for con in model.constraints:
        row = np.zeros(n_struct)
        b = con.rhs
        for j, a in con.coeffs:
            b -= a * offset[j]
            for k, s in cols_of[j]:
                row[k] += a * s
        rows.append(row)
        rhs.append(b)
        rel.append(con.relation)

    sign = -1.0 if model.sense is Sense.MAX else 1.0
    c = np.zeros(n_struct)
    c0 = 0.0
    for j, a in model.objective.items():
        c0 += sign * a * offset[j]
        for k, s in cols_of[j]:
            c[k] += sign * a * s

    keep_rows, keep_rhs, keep_rel = [], [], []
    infeasible = False
    for row, b, r in zip(rows, rhs, rel):
        scale = np.max(np.abs(row)) if row.size else 0.0
        if scale == 0.0:
            if (
                (r is Relation.LE and b < -FEAS_TOL)
                or (r is Relation.GE and b > FEAS_TOL)
                or (r is Relation.EQ and abs(b) > FEAS_TOL)
            ):
                infeasible = True
            continue
        row, b = row / scale, b / scale
        if b < 0:
            row, b = -row, -b
            r = {Relation.LE: Relation.GE, Relation.GE: Relation.LE}.get(r, r)
        keep_rows.append(row)
        keep_rhs.append(b)
        keep_rel.append(r)

    A = np.array(keep_rows).reshape(len(keep_rows), n_struct)
    return _StandardForm(
        A, np.array(keep_rhs), np.array(upper), keep_rel, c, c0, col_var, col_sign, offset, infeasible
    )


class _Tableau:
    """Tableau ``B^-1 [A | b]`` with all nonbasic columns at zero.

    A column whose variable sits at its finite upper bound U is complemented
    (``x -> U - x``), so nonbasic variables are always at zero and the last
    column holds the basic values.
    """

    def __init__(self, sf: _StandardForm):
        m, n_struct = sf.A.shape
        n_slack = sum(r is not Relation.EQ for r in sf.rel)
        n_art = sum(r is not Relation.LE for r in sf.rel)
        self.n_struct = n_struct
        self.n_cols = n_struct + n_slack + n_art
        self.first_art = n_struct + n_slack

        A0 = np.zeros((m, self.n_cols + 1))
        A0[:, :n_struct] = sf.A
        A0[:, -1] = sf.b
        basis = np.empty(m, dtype=int)
        s_col, a_col = n_struct, self.first_art
        for i, r in enumerate(sf.rel):
            if r is Relation.LE:
                A0[i, s_col] = 1.0
                basis[i] = s_col
                s_col += 1
            elif r is Relation.GE:
                A0[i, s_col] = -1.0
                A0[i, a_col] = 1.0
                basis[i] = a_col
                s_col += 1
                a_col += 1
            else:
                A0[i, a_col] = 1.0
                basis[i] = a_col
                a_col += 1
        self.A0 = A0
        self.T = A0.copy()
        self.basis = basis
        self.upper = np.full(self.n_cols, math.inf)
        self.upper[:n_struct] = sf.upper
        # complement constant; upper may later shrink to 0 when a column is fixed
        self.span = self.upper.copy()
        self.flipped = np.zeros(self.n_cols, dtype=bool)
        self.cost = np.zeros(self.n_cols)
        self.d = np.zeros(self.n_cols + 1)
        self.iterations = 0
        self.pivots_since_refactor = 0

    def set_cost(self, cost: np.ndarray) -> None:
        self.cost = cost
        self._price()

    def _price(self) -> None:
        cost = np.where(self.flipped, -self.cost, self.cost)
        cb = cost[self.basis]
        self.d[:-1] = cost - cb @ self.T[:, :-1]
        self.d[-1] = -(cb @ self.T[:, -1])

    def refactor(self) -> None:
        m = self.A0.shape[0]
        if m:
            A = self.A0.copy()
            fl = np.flatnonzero(self.flipped)
            if fl.size:
                A[:, -1] -= A[:, fl] @ self.span[fl]
                A[:, fl] = -A[:, fl]
            try:
                self.T = np.linalg.solve(A[:, self.basis], A)
            except np.linalg.LinAlgError as exc:
                raise NumericalFailure("singular basis during refactorization") from exc
            self.T[np.abs(self.T) < 1e-13] = 0.0
            self.T[:, self.basis] = np.eye(m)
        self.pivots_since_refactor = 0
        self._price()

    def flip_nonbasic(self, q: int) -> None:
        """Move nonbasic column q to its other bound."""
        u = self.span[q]
        self.T[:, -1] -= self.T[:, q] * u
        self.T[:, q] = -self.T[:, q]
        self.d[-1] -= self.d[q] * u
        self.d[q] = -self.d[q]
        self.flipped[q] = ~self.flipped[q]
        self.iterations += 1

    def flip_basic(self, r: int) -> None:
        """Complement the basic variable of row r (used when it leaves at its upper bound)."""
        j = self.basis[r]
        self.T[r] = -self.T[r]
        self.T[r, j] = 1.0
        self.T[r, -1] += self.span[j]
        self.flipped[j] = ~self.flipped[j]

    def pivot(self, r: int, q: int) -> None:
        T = self.T
        T[r] /= T[r, q]
        row = T[r]
        col = T[:, q].copy()
        col[r] = 0.0
        nz = np.flatnonzero(col)
        if nz.size:
            nzc = np.flatnonzero(row)
            if 4 * nzc.size < row.size:
                T[np.ix_(nz, nzc)] -= np.outer(col[nz], row[nzc])
            else:
                T[nz] -= np.outer(col[nz], row)
            T[nz, q] = 0.0
        T[r, q] = 1.0
        self.d -= self.d[q] * row
        self.d[q] = 0.0
        self.basis[r] = q
        self.iterations += 1
        self.pivots_since_refactor += 1
        if self.pivots_since_refactor >= max(_REFACTOR_EVERY, T.shape[0]):
            self.refactor()

    def drop_rows(self, rows: list[int]) -> None:
        keep = np.setdiff1d(np.arange(self.T.shape[0]), rows)
        self.T = self.T[keep]
        self.A0 = self.A0[keep]
        self.basis = self.basis[keep]

    def run(self, allowed: np.ndarray, max_iter: int) -> Status:
        """Iterate to optimality for the current cost; returns OPTIMAL or UNBOUNDED."""
        bland = False
        degenerate = 0
        small_pivots = 0
        start = self.iterations
        while True:
            if self.iterations - start > max_iter:
                raise NumericalFailure(f"simplex exceeded {max_iter} iterations")
            d = self.d[:-1]
            cand = np.flatnonzero(allowed & (d < -_COST_TOL) & (self.upper > 0))
            if cand.size == 0:
                return Status.OPTIMAL
            q = int(cand[0]) if bland else int(cand[np.argmin(d[cand])])

            col = self.T[:, q]
            xb = np.maximum(self.T[:, -1], 0.0)
            ub_b = self.upper[self.basis]
            down = np.flatnonzero(col > _ELIGIBLE)
            up = np.flatnonzero((col < -_ELIGIBLE) & np.isfinite(ub_b))
            rows = np.concatenate([down, up])
            ratios = np.concatenate(
                [xb[down] / col[down], np.maximum(ub_b[up] - xb[up], 0.0) / -col[up]]
            )
            own = self.upper[q]
            if rows.size == 0:
                if math.isfinite(own):
                    self.flip_nonbasic(q)
                    continue
                blocking = np.where(np.isfinite(ub_b), np.abs(col), np.maximum(col, 0.0))
                if blocking.size and blocking.max() > PIVOT_TOL * 1e-3:
                    small_pivots += 1
                    if small_pivots > _SMALL_PIVOT_LIMIT:
                        raise NumericalFailure("pivot magnitudes repeatedly below threshold")
                    self.refactor()
                    continue
                return Status.UNBOUNDED
            best = ratios.min()
            if own <= best:
                self.flip_nonbasic(q)
                degenerate = 0
                continue
            tied = ratios <= best + 1e-12 * (1.0 + best)
            ties = rows[tied]
            if bland:
                pick = int(np.argmin(self.basis[ties]))
            else:
                pick = int(np.argmax(np.abs(col[ties])))
            r = int(ties[pick])
            if abs(col[r]) < PIVOT_TOL:
                raise NumericalFailure("pivot element below threshold")

            if best <= 1e-12:
                degenerate += 1
                if degenerate >= _DEGENERATE_SWITCH:
                    bland = True
            else:
                degenerate = 0
            leaving = self.basis[r]
            if col[r] < 0 and self.upper[leaving] == self.span[leaving]:
                self.flip_basic(r)
            self.pivot(r, q)

    def dual_run(self, allowed: np.ndarray, max_iter: int) -> Status:
        """Dual simplex from a dual-feasible basis; returns OPTIMAL or INFEASIBLE."""
        start = self.iterations
        tol = 1e-9 * (1.0 + float(np.max(np.abs(self.T[:, -1]), initial=0.0)))
        movable = allowed & (self.upper > 0)
        bland = False
        degenerate = 0
        # Perturbing nonbasic reduced costs breaks the heavy dual degeneracy of
        # min-max models; the true costs are restored before returning.
        nonbasic = movable.copy()
        nonbasic[self.basis] = False
        scale = 1e-7 * max(1.0, float(np.max(np.abs(self.cost), initial=0.0)))
        self.d[:-1][nonbasic] += scale * self._jitter(self.n_cols)[nonbasic]
        try:
            return self._dual_loop(movable, bland, degenerate, tol, start, max_iter)
        finally:
            self._price()

    @staticmethod
    def _jitter(n: int) -> np.ndarray:
        return np.random.default_rng(n).uniform(1.0, 2.0, size=n)

    def _dual_loop(self, movable, bland, degenerate, tol, start, max_iter) -> Status:
        while True:
            if self.iterations - start > max_iter:
                raise NumericalFailure(f"dual simplex exceeded {max_iter} iterations")
            xb = self.T[:, -1]
            above = xb - self.upper[self.basis]
            viol = np.maximum(-xb, above)
            if viol.size == 0:
                return Status.OPTIMAL
            r = int(np.argmax(viol))
            if viol[r] <= tol:
                return Status.OPTIMAL
            if bland:
                bad = np.flatnonzero(viol > tol)
                r = int(bad[np.argmin(self.basis[bad])])
            # leaving direction: +1 raises x_B[r] to 0, -1 lowers a fixed column to 0
            direction = 1.0
            if above[r] > -xb[r]:
                j = self.basis[r]
                if self.upper[j] < self.span[j]:
                    direction = -1.0
                else:
                    self.flip_basic(r)
            row = direction * self.T[r, :-1]
            elig = np.flatnonzero(movable & (row < -_ELIGIBLE))
            if elig.size == 0:
                return Status.INFEASIBLE
            ratios = np.maximum(self.d[elig], 0.0) / -row[elig]
            best = ratios.min()
            ties = elig[ratios <= best + 1e-12 * (1.0 + best)]
            q = int(ties[0]) if bland else int(ties[np.argmax(-row[ties])])
            if best <= 1e-12:
                degenerate += 1
                bland = bland or degenerate >= _DEGENERATE_SWITCH
            else:
                degenerate = 0
            self.pivot(r, q)

    def column_values(self) -> np.ndarray:
        """Current value of every column in the unflipped variables."""
        v = np.zeros(self.n_cols)
        v[self.basis] = np.maximum(self.T[:, -1], 0.0)
        fl = self.flipped
        v[fl] = self.span[fl] - v[fl]
        return v


def solve_lp(model: LpModel, max_iter: int | None = None) -> LpSolution:
    """Solve a continuous LP (binary variables are rejected; use ``solve_milp``)."""
    if model.binaries:
        raise ValueError("solve_lp does not accept binary variables; use solve_milp")
    return _two_phase(model, max_iter)[0]


def _two_phase(model: LpModel, max_iter: int | None):
    sf = _standard_form(model)
    if sf.trivially_infeasible:
        return LpSolution(Status.INFEASIBLE), sf, None
    tab = _Tableau(sf)
    m = sf.A.shape[0]
    if max_iter is None:
        max_iter = 50 * (m + tab.n_cols) + 1000

    n_art = tab.n_cols - tab.first_art
    if n_art:
        cost = np.zeros(tab.n_cols)
        cost[tab.first_art :] = 1.0
        tab.set_cost(cost)
        tab.run(np.ones(tab.n_cols, dtype=bool), max_iter)
        tab.refactor()
        infeas = -tab.d[-1]
        if infeas > 1e-8 * max(1.0, float(np.max(sf.b, initial=0.0))):
            return LpSolution(Status.INFEASIBLE, iterations=tab.iterations), sf, None
        _drive_out_artificials(tab)

    allowed = np.zeros(tab.n_cols, dtype=bool)
    allowed[: tab.first_art] = True
    cost = np.zeros(tab.n_cols)
    cost[: tab.n_struct] = sf.c
    tab.set_cost(cost)
    status = tab.run(allowed, max_iter)
    if status is Status.UNBOUNDED:
        return LpSolution(Status.UNBOUNDED, iterations=tab.iterations), sf, None
    tab.refactor()
    return _extract(model, sf, tab), sf, tab


def _extract(model: LpModel, sf: _StandardForm, tab: _Tableau, offset=None) -> LpSolution:
    xs = tab.column_values()
    values = (sf.offset if offset is None else offset).copy()
    for k, (j, s) in enumerate(zip(sf.col_var, sf.col_sign)):
        values[j] += s * xs[k]
    assignment = {v.name: float(values[j]) for j, v in enumerate(model.variables)}
    obj = sum(c * values[j] for j, c in model.objective.items())
    return LpSolution(Status.OPTIMAL, float(obj), assignment, iterations=tab.iterations)


@dataclass(frozen=True)
class Basis:
    """Saved simplex state: basic columns, complemented columns, current upper bounds."""

    basis: np.ndarray
    flipped: np.ndarray
    upper: np.ndarray


class WarmStartLp:
    """A continuous LP re-solved many times with variables fixed at one of their bounds.

    The first solve is a cold two-phase primal simplex. Later solves restore a
    saved :class:`Basis`, which stays dual feasible under bound fixing, and
    reoptimize with the dual simplex. This is what makes branch-and-bound
    nodes cheap.
    """

    def __init__(self, model: LpModel, max_iter: int | None = None):
        if model.binaries:
            raise ValueError("WarmStartLp needs a continuous model; relax it first")
        self.model = model
        self.root, self._sf, self._tab = _two_phase(model, max_iter)
        if self._tab is not None:
            tab = self._tab
            self._allowed = np.zeros(tab.n_cols, dtype=bool)
            self._allowed[: tab.first_art] = True
            self._max_iter = max_iter or 50 * (tab.T.shape[0] + tab.n_cols) + 1000
            self._column = {j: k for k, j in enumerate(self._sf.col_var) if self._sf.col_sign[k] > 0}
        self.iterations = self.root.iterations

    @property
    def ready(self) -> bool:
        return self._tab is not None

    def snapshot(self) -> Basis:
        tab = self._tab
        return Basis(tab.basis.copy(), tab.flipped.copy(), tab.upper.copy())

    def resolve(self, fixes: dict[int, float], start: Basis | None = None) -> LpSolution:
        """Fix ``x_j = v`` for each item (v must be a finite bound of x_j) and reoptimize.

        Fixes accumulate on the working state; pass ``start`` to begin from a
        snapshot instead.
        """
        if not self.ready:
            raise ValueError(f"root LP is {self.root.status.value}; nothing to warm start")
        tab = self._tab
        before = tab.iterations
        if start is not None:
            if start.basis.shape != tab.basis.shape:
                raise ValueError("snapshot does not match this LP")
            tab.basis = start.basis.copy()
            tab.flipped = start.flipped.copy()
            tab.upper = start.upper.copy()
            tab.refactor()
        for j, v in fixes.items():
            self._fix(j, v)
        status = tab.dual_run(self._allowed, self._max_iter)
        if status is Status.OPTIMAL:
            # mop up any reduced costs that drifted negative
            status = tab.run(self._allowed, self._max_iter)
        self.iterations += tab.iterations - before
        if status is not Status.OPTIMAL:
            return LpSolution(Status.INFEASIBLE, iterations=tab.iterations - before)
        sol = _extract(self.model, self._sf, tab)
        sol.iterations = tab.iterations - before
        return sol

    def _fix(self, j: int, v: float) -> None:
        tab, var = self._tab, self.model.variables[j]
        k = self._column.get(j)
        if k is None:
            if var.lb == var.ub == v:
                return
            raise ValueError(f"cannot fix {var.name}: no shifted column")
        y = v - var.lb
        span = tab.span[k]
        if abs(y) <= 1e-12:
            want_flipped = False
        elif math.isfinite(span) and abs(y - span) <= 1e-12:
            want_flipped = True
        else:
            raise ValueError(f"{var.name} can only be fixed at a finite bound, got {v}")
        if tab.upper[k] == 0.0 and tab.flipped[k] != want_flipped:
            raise ValueError(f"{var.name} is already fixed at its other bound")
        if tab.flipped[k] != want_flipped:
            rows = np.flatnonzero(tab.basis == k)
            if rows.size:
                tab.flip_basic(int(rows[0]))
            else:
                tab.flip_nonbasic(k)
        tab.upper[k] = 0.0


def _drive_out_artificials(tab: _Tableau) -> None:
    redundant = []
    for i in range(len(tab.basis)):
        if tab.basis[i] < tab.first_art:
            continue
        row = np.abs(tab.T[i, : tab.first_art])
        j = int(np.argmax(row)) if row.size else 0
        if row.size and row[j] > _ELIGIBLE:
            tab.pivot(i, j)
        else:
            redundant.append(i)
    if redundant:
        tab.drop_rows(redundant)
    tab.refactor()
