"""Small builders shared by the test modules."""

from __future__ import annotations

from traffic_eng.lp import LpModel, Relation, VarKind
from traffic_eng.topology import Topology, assign_capacities, assign_weights, build_topology
from traffic_eng.traffic import TrafficMatrix, gravity_tm, scale_to_max_utilization

REL = {"<=": Relation.LE, ">=": Relation.GE, "=": Relation.EQ}


def lp_from_arrays(A, b, rel, c, sense, lb=None, ub=None, binary=False) -> LpModel:
    m = LpModel("t")
    n = len(c)
    for j in range(n):
        if binary:
            m.add_variable(f"x{j}", kind=VarKind.BINARY)
        else:
            m.add_variable(f"x{j}", float(lb[j]), float(ub[j]))
    for i, (row, beta, r) in enumerate(zip(A, b, rel)):
        m.add_constraint({j: float(a) for j, a in enumerate(row) if a}, REL[r], float(beta), f"r{i}")
    m.set_objective({j: float(v) for j, v in enumerate(c) if v}, sense)
    return m


def configured(n, pairs, capacity_set=(30, 35, 40)) -> Topology:
    topo = Topology(n, tuple(sorted(tuple(sorted(p)) for p in pairs)))
    return assign_weights(assign_capacities(topo, capacity_set))


def gravity_instance(n, l, seed, load=0.07):
    topo = build_topology(n, l, (30, 35, 40), seed=seed)
    tm = scale_to_max_utilization(gravity_tm(topo), topo, load)
    return topo, tm


def single_demand_tm(n, src, dst, volume) -> TrafficMatrix:
    vols = [volume if (s, t) == (src, dst) else 0.0 for s in range(n) for t in range(n) if s != t]
    return TrafficMatrix(n, tuple(vols), "CUSTOM")
