import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import configured, gravity_instance, single_demand_tm
from oracles import grid_route, pla, single_path_brute_force
from traffic_eng.formulations import (
    PLA_BREAKPOINTS,
    PLA_PIECES,
    InfeasibleInstance,
    apply_single_path,
    build_ad,
    build_candidate_paths,
    build_lb,
    build_mcr,
    build_model,
    decode_solution,
    pla_delay,
    route,
    single_path_heuristic,
    truncate,
)
from traffic_eng.lp import Status, solve_lp, solve_milp
from traffic_eng.topology import Topology, build_topology
from traffic_eng.traffic import TrafficMatrix, ordered_pairs


def sparse_tm(n, volumes: dict) -> TrafficMatrix:
    return TrafficMatrix(n, tuple(float(volumes.get(p, 0.0)) for p in ordered_pairs(n)), "CUSTOM")


def chosen_paths(paths, n, pairs):
    order = ordered_pairs(n)
    return [paths.paths[order.index(p)] for p in pairs]


# ---------------------------------------------------------------- delay approximation
def test_pla_breakpoints_exact():
    for z in PLA_BREAKPOINTS:
        values = sorted(a * z - b for a, b in PLA_PIECES)
        assert values[-1] == values[-2]  # two pieces meet exactly at each breakpoint
    assert pla_delay(1 / 3) == pytest.approx(0.5)
    assert max(a * Fraction(9, 10) - b for a, b in PLA_PIECES) == 9
    assert pla_delay(0.0) == 0.0
    assert pla_delay(0.5) == pytest.approx(1.25)
    with pytest.raises(ValueError):
        pla_delay(-0.1)


def _case_form(z: float) -> float:
    if z < 1 / 3:
        return 1.5 * z
    if z < 2 / 3:
        return 4.5 * z - 1
    if z < 4 / 5:
        return 15 * z - 8
    if z < 9 / 10:
        return 50 * z - 36
    if z < 19 / 20:
        return 200 * z - 171
    return 4000 * z - 3781


@given(st.floats(0.0, 1.2))
def test_pla_max_form_equals_case_form(z):
    assert pla_delay(z) == pytest.approx(_case_form(z), abs=1e-9)


# ---------------------------------------------------------------- model examples
def test_candidate_paths_triangle():
    tri = configured(3, [(0, 1), (0, 2), (1, 2)], [10])
    tm = sparse_tm(3, {(0, 1): 1.0})
    paths = build_candidate_paths(tri, tm, 5)
    for d, ps in zip(tm.demands, paths.paths):
        assert len(ps) == 2
        assert ps[0].nodes == (d.src, d.dst) and len(ps[1].nodes) == 3
    one = build_candidate_paths(tri, tm, 1)
    assert all(len(ps) == 1 for ps in one.paths)
    assert truncate(paths, 1) == one
    with pytest.raises(ValueError):
        truncate(one, 2)
    with pytest.raises(ValueError):
        build_candidate_paths(tri, tm, 0)


def test_path_costs_non_decreasing():
    topo, tm = gravity_instance(7, 12, seed=3)
    paths = build_candidate_paths(topo, tm, 4)
    for costs in paths.costs():
        assert costs == sorted(costs)


def test_mcr_cheap_path_takes_everything():
    tri = configured(3, [(0, 1), (0, 2), (1, 2)], [100])
    tm = single_demand_tm(3, 0, 2, 7.0)
    alloc, _, sol = route(tri, tm, build_candidate_paths(tri, tm, 2), "MCR")
    d = [i for i, dm in enumerate(tm.demands) if dm.volume][0]
    assert alloc.flows[d] == pytest.approx((7.0, 0.0))
    assert sol.objective_value == pytest.approx(7.0 * 0.01)


def test_mcr_capacity_forces_split():
    # cheap direct link capped at 6, dearer detour with room: h=10 splits 6 / 4
    topo = Topology(3, ((0, 1), (0, 2), (1, 2)), (6.0, 40.0, 40.0), (0.1, 0.2, 0.2))
    tm = single_demand_tm(3, 0, 1, 10.0)
    paths = build_candidate_paths(topo, tm, 2)
    alloc, _, sol = route(topo, tm, paths, "MCR")
    d = ordered_pairs(3).index((0, 1))
    assert [p.nodes for p in paths.paths[d]] == [(0, 1), (0, 2, 1)]
    assert alloc.flows[d] == pytest.approx((6.0, 4.0))
    assert sol.objective_value == pytest.approx(6 * 0.1 + 4 * 0.4)


def test_lb_two_disjoint_links_halve():
    topo = configured(2, [(0, 1)], [10])
    tm = single_demand_tm(2, 0, 1, 10.0)
    alloc, _, sol = route(topo, tm, build_candidate_paths(topo, tm, 2), "LB")
    assert sol.objective_value == pytest.approx(1.0)
    # opposite corners of a square: two link-disjoint two-hop paths
    sq = configured(4, [(0, 1), (1, 2), (2, 3), (0, 3)], [10])
    tm = single_demand_tm(4, 0, 2, 10.0)
    _, _, sol = route(sq, tm, build_candidate_paths(sq, tm, 2), "LB")
    assert sol.objective_value == pytest.approx(0.5)


@pytest.mark.parametrize("objective", ["MCR", "LB", "AD"])
def test_zero_traffic(objective):
    topo = build_topology(5, 7, (30, 35, 40), seed=1)
    tm = sparse_tm(5, {})
    alloc, loads, sol = route(topo, tm, build_candidate_paths(topo, tm, 2), objective)
    assert sol.objective_value == pytest.approx(0.0, abs=1e-12)
    assert all(x == 0 for fs in alloc.flows for x in fs)
    assert loads.residual == loads.capacity


def test_ad_single_link_half_utilized():
    topo = configured(2, [(0, 1)], [80])
    tm = single_demand_tm(2, 0, 1, 40.0)
    model = build_ad(build_candidate_paths(topo, tm, 1), tm, topo)
    sol = solve_lp(model)
    assert sol["rl_0_1"] == pytest.approx(1.25 * 80)
    assert sol["y_0_1"] == pytest.approx(40.0)


def test_decode_two_node_utilization():
    topo = configured(2, [(0, 1)], [100])
    tm = single_demand_tm(2, 0, 1, 5.0)
    _, loads, _ = route(topo, tm, build_candidate_paths(topo, tm, 1), "LB")
    util = dict(zip(loads.links, loads.utilization))
    assert util == pytest.approx({(0, 1): 0.05, (1, 0): 0.0})


def test_decode_rejects_non_optimal():
    topo = configured(2, [(0, 1)], [1])
    tm = single_demand_tm(2, 0, 1, 5.0)
    paths = build_candidate_paths(topo, tm, 1)
    sol = solve_lp(build_mcr(paths, tm, topo))
    assert sol.status is Status.INFEASIBLE
    with pytest.raises(InfeasibleInstance):
        decode_solution(sol, paths, tm, topo, "MCR")
    with pytest.raises(ValueError):
        build_model("DELAY", paths, tm, topo)
    with pytest.raises(ValueError):
        route(topo, tm, paths, "LB", "ANYPATH")


def test_model_shapes():
    topo, tm = gravity_instance(6, 9, seed=2)
    paths = build_candidate_paths(topo, tm, 3)
    nx_ = paths.n_variables
    assert build_mcr(paths, tm, topo).n_vars == nx_
    assert build_lb(paths, tm, topo).n_vars == nx_ + 1
    assert build_ad(paths, tm, topo).n_vars == nx_ + 2 * len(topo.links)
    sp = apply_single_path(build_lb(paths, tm, topo), paths, tm)
    assert len(sp.binaries) == nx_
    assert len(sp.constraints) == len(build_lb(paths, tm, topo).constraints) + nx_ + len(tm)


# ---------------------------------------------------------------- oracle comparisons
def _tiny_instance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 7))
    l = int(rng.integers(n, n * (n - 1) // 2 + 1))
    topo = build_topology(n, l, (30, 35, 40), seed=int(rng.integers(10**6)))
    n_dem = int(rng.integers(1, 3))
    pairs = [ordered_pairs(n)[i] for i in rng.choice(n * (n - 1), size=n_dem, replace=False)]
    vols = {p: float(rng.uniform(5, 45)) for p in pairs}
    tm = sparse_tm(n, vols)
    return topo, tm, pairs, [vols[p] for p in pairs]


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_lp_optima_match_grid_oracle(seed):
    topo, tm, pairs, vols = _tiny_instance(seed)
    paths = build_candidate_paths(topo, tm, 2)
    want = grid_route(topo, vols, chosen_paths(paths, topo.n, pairs))
    for objective in ("LB", "MCR", "AD"):
        sol = solve_lp(build_model(objective, paths, tm, topo))
        if objective == "MCR" and math.isinf(want["MCR"]):
            assert sol.status is Status.INFEASIBLE
            continue
        assert sol.status is Status.OPTIMAL
        assert sol.objective_value == pytest.approx(want[objective], rel=5e-3)
        assert sol.objective_value <= want[objective] + 1e-9


def test_single_path_matches_enumeration():
    rng = np.random.default_rng(12)
    for _ in range(12):
        n = 5
        topo = build_topology(n, int(rng.integers(6, 11)), (30, 35, 40), seed=int(rng.integers(10**6)))
        pairs = [ordered_pairs(n)[i] for i in rng.choice(n * (n - 1), size=3, replace=False)]
        vols = {p: float(rng.uniform(5, 30)) for p in pairs}
        tm = sparse_tm(n, vols)
        paths = build_candidate_paths(topo, tm, 2)
        want = single_path_brute_force(topo, list(vols.values()), chosen_paths(paths, n, pairs))
        for objective in ("LB", "MCR", "AD"):
            sol = solve_milp(apply_single_path(build_model(objective, paths, tm, topo), paths, tm))
            if math.isinf(want[objective]):
                assert sol.status is Status.INFEASIBLE
            else:
                assert sol.objective_value == pytest.approx(want[objective], rel=1e-7, abs=1e-9)


# ---------------------------------------------------------------- properties
@settings(max_examples=15)
@given(st.integers(4, 7), st.data(), st.sampled_from(["LB", "MCR", "AD"]))
def test_monotone_in_k_and_single_path_containment(n, data, objective):
    l = data.draw(st.integers(n, n * (n - 1) // 2))
    topo, tm = gravity_instance(n, l, seed=data.draw(st.integers(0, 10**6)), load=0.3)
    big = build_candidate_paths(topo, tm, 4)
    prev = math.inf
    for k in (1, 2, 4):
        paths = truncate(big, k)
        alloc, loads, sol = route(topo, tm, paths, objective)
        assert sol.objective_value <= prev + 1e-6
        prev = sol.objective_value
        for d, fs in zip(tm.demands, alloc.flows):
            assert math.fsum(fs) == pytest.approx(d.volume, abs=1e-6)
        if objective == "LB":
            assert sol.objective_value <= 0.3 + 1e-6
    single = route(topo, tm, truncate(big, 2), objective, "SINGLEPATH")[2]
    multi = route(topo, tm, truncate(big, 2), objective)[2]
    assert single.objective_value >= multi.objective_value - 1e-6


def test_k1_single_path_equals_lp():
    topo, tm = gravity_instance(6, 10, seed=9)
    paths = build_candidate_paths(topo, tm, 1)
    for objective in ("LB", "MCR", "AD"):
        a = route(topo, tm, paths, objective)[2]
        b = route(topo, tm, paths, objective, "SINGLEPATH")[2]
        assert b.objective_value == pytest.approx(a.objective_value, abs=1e-9)


@settings(max_examples=10)
@given(st.integers(0, 10**6))
def test_ad_pieces_tight_and_loads_consistent(seed):
    topo, tm = gravity_instance(6, 10, seed=seed, load=0.8)
    paths = build_candidate_paths(topo, tm, 3)
    alloc, loads, sol = route(topo, tm, paths, "AD")
    for lk, y in zip(topo.links, loads.load):
        assert sol[f"y_{lk.src}_{lk.dst}"] == pytest.approx(y, abs=1e-6)
        assert sol[f"rl_{lk.src}_{lk.dst}"] == pytest.approx(lk.capacity * pla_delay(y / lk.capacity), abs=1e-6)
    assert sol.objective_value == pytest.approx(float(pla(np.array(loads.utilization)).sum()), abs=1e-6)


def test_single_path_decodes_to_one_path_per_demand():
    topo, tm = gravity_instance(5, 7, seed=4, load=0.5)
    paths = build_candidate_paths(topo, tm, 2)
    for objective in ("LB", "MCR", "AD"):
        alloc, loads, _ = route(topo, tm, paths, objective, "SINGLEPATH")
        for d, fs in zip(tm.demands, alloc.flows):
            assert sum(x > 1e-6 for x in fs) == (1 if d.volume > 0 else 0)
        assert all(y >= 0 for y in loads.load)


def test_heuristic_proposal_is_a_valid_assignment():
    topo, tm = gravity_instance(8, 14, seed=6)
    paths = build_candidate_paths(topo, tm, 3)
    for objective in ("LB", "MCR", "AD"):
        model = apply_single_path(build_model(objective, paths, tm, topo), paths, tm)
        relaxation = solve_lp(model.relaxed())
        fixes = single_path_heuristic(objective, paths, tm, topo)(model, relaxation)
        assert set(fixes) == set(model.binaries)
        for d, ps in zip(tm.demands, paths.paths):
            chosen = [fixes[model.index(f"u_{d.src}_{d.dst}_{p}")] for p in range(len(ps))]
            assert sorted(chosen) == [0.0] * (len(ps) - 1) + [1.0]
        fixed = model.relaxed().with_bounds({j: (v, v) for j, v in fixes.items()})
        assert solve_lp(fixed).status is Status.OPTIMAL


def test_single_path_exact_on_small_gravity_instance():
    # 20 demands is too many to enumerate; a proven optimum must at least beat every one-demand swap
    topo, tm = gravity_instance(5, 6, seed=1, load=0.5)
    paths = build_candidate_paths(topo, tm, 2)
    alloc, loads, sol = route(topo, tm, paths, "LB", "SINGLEPATH")
    caps = np.array(loads.capacity)
    base = np.array(loads.load)
    for d, (dm, fs, ps) in enumerate(zip(tm.demands, alloc.flows, paths.paths)):
        if dm.volume == 0 or len(ps) < 2:
            continue
        cur = int(np.argmax(fs))
        for alt in range(len(ps)):
            if alt == cur:
                continue
            load = base.copy()
            load[list(ps[cur].links)] -= dm.volume
            load[list(ps[alt].links)] += dm.volume
            assert (load / caps).max() >= sol.objective_value - 1e-9
