"""Linear program containers shared by the simplex and branch-and-bound solvers."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

INF = math.inf


class VarKind(str, enum.Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"


class Relation(str, enum.Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class Sense(str, enum.Enum):
    MIN = "min"
    MAX = "max"


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


class ModelError(ValueError):
    """Structural problem with an LpModel (bad index, duplicate name, ...)."""


@dataclass(frozen=True)
class Variable:
    name: str
    lb: float = 0.0
    ub: float = INF
    kind: VarKind = VarKind.CONTINUOUS


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[tuple[int, float], ...]
    relation: Relation
    rhs: float
    name: str | None = None


@dataclass
class LpModel:
    """A linear program with optional binary variables.

    Coefficients are stored sparsely as ``(variable index, value)`` pairs.
    Build it with :meth:`add_variable`, :meth:`add_constraint` and
    :meth:`set_objective`; the solvers never mutate a model.
    """

    name: str = "model"
    variables: list[Variable] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    sense: Sense = Sense.MIN
    objective: dict[int, float] = field(default_factory=dict)
    _index: dict[str, int] = field(default_factory=dict, repr=False)

    def add_variable(
        self,
        name: str,
        lb: float = 0.0,
        ub: float = INF,
        kind: VarKind | str = VarKind.CONTINUOUS,
    ) -> int:
        kind = VarKind(kind)
        if name in self._index:
            raise ModelError(f"duplicate variable name {name!r}")
        if kind is VarKind.BINARY:
            lb, ub = max(0.0, lb), min(1.0, ub)
        if lb > ub:
            raise ModelError(f"variable {name!r} has lb {lb} > ub {ub}")
        self.variables.append(Variable(name, float(lb), float(ub), kind))
        self._index[name] = len(self.variables) - 1
        return self._index[name]

    def add_constraint(
        self,
        coeffs: Mapping[int, float] | Iterable[tuple[int, float]],
        relation: Relation | str,
        rhs: float,
        name: str | None = None,
    ) -> int:
        merged = _merge(coeffs, len(self.variables))
        self.constraints.append(Constraint(merged, Relation(relation), float(rhs), name))
        return len(self.constraints) - 1

    def set_objective(
        self,
        coeffs: Mapping[int, float] | Iterable[tuple[int, float]],
        sense: Sense | str = Sense.MIN,
    ) -> None:
        self.objective = dict(_merge(coeffs, len(self.variables)))
        self.sense = Sense(sense)

    def index(self, name: str) -> int:
        return self._index[name]

    def __contains__(self, name: str) -> bool:
        return name in self._index

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def binaries(self) -> list[int]:
        return [j for j, v in enumerate(self.variables) if v.kind is VarKind.BINARY]

    def copy(self) -> LpModel:
        return LpModel(
            name=self.name,
            variables=list(self.variables),
            constraints=list(self.constraints),
            sense=self.sense,
            objective=dict(self.objective),
            _index=dict(self._index),
        )

    def with_bounds(self, bounds: Mapping[int, tuple[float, float]]) -> LpModel:
        """Copy of the model with some variable bounds replaced."""
        out = self.copy()
        for j, (lb, ub) in bounds.items():
            v = out.variables[j]
            out.variables[j] = Variable(v.name, float(lb), float(ub), v.kind)
        return out

    def relaxed(self) -> LpModel:
        """Copy with every binary turned into a continuous [0, 1] variable."""
        out = self.copy()
        out.variables = [
            Variable(v.name, v.lb, v.ub, VarKind.CONTINUOUS) for v in self.variables
        ]
        return out

    def evaluate(self, values: Mapping[str, float]) -> float:
        return sum(c * values[self.variables[j].name] for j, c in self.objective.items())

    def max_violation(self, values: Mapping[str, float]) -> float:
        """Largest absolute constraint or bound violation of an assignment."""
        worst = 0.0
        for v in self.variables:
            x = values[v.name]
            worst = max(worst, v.lb - x, x - v.ub)
        for con in self.constraints:
            lhs = sum(c * values[self.variables[j].name] for j, c in con.coeffs)
            if con.relation is Relation.LE:
                worst = max(worst, lhs - con.rhs)
            elif con.relation is Relation.GE:
                worst = max(worst, con.rhs - lhs)
            else:
                worst = max(worst, abs(lhs - con.rhs))
        return worst


@dataclass
class LpSolution:
    status: Status
    objective_value: float = math.nan
    assignment: dict[str, float] = field(default_factory=dict)
    iterations: int = 0
    nodes: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def __getitem__(self, name: str) -> float:
        return self.assignment[name]


def _merge(coeffs, n_vars: int) -> tuple[tuple[int, float], ...]:
    items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
    out: dict[int, float] = {}
    for j, c in items:
        if not 0 <= j < n_vars:
            raise ModelError(f"coefficient references unknown variable index {j}")
        out[j] = out.get(j, 0.0) + float(c)
    return tuple((j, c) for j, c in out.items() if c != 0.0)
