"""Experiment configuration, instance-grid expansion, parallel runner and dataset I/O."""

from __future__ import annotations

import ast
import csv
import hashlib
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from pathlib import Path
from typing import Any, Iterable, Sequence

from .formulations import (
    OBJECTIVES,
    STRATEGIES,
    CandidatePathSet,
    FlowAllocation,
    InfeasibleInstance,
    LinkLoadVector,
    build_candidate_paths,
    decode_solution,
    route,
    truncate,
)
from .lp import NodeLimitExceeded, NumericalFailure
from .lp.branch_bound import DEFAULT_NODE_LIMIT
from .topology import (
    ConnectivityFailure,
    InvalidSize,
    Topology,
    UnsupportedSetting,
    avg_nodal_degree,
    build_topology,
)
from .traffic import TM_TYPES, DegenerateMatrix, TrafficMatrix, generate_tm, scale_to_max_utilization

CAPACITY_TYPES = ("EDGE_BETWEENNESS",)
WEIGHT_SETTINGS = ("INV_CAP",)

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_NODE_LIMIT = "node_limit"  # single-path search stopped early; best incumbent recorded
STATUS_ERROR = "error"


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    N: tuple[int, ...]
    L: tuple[int, ...]
    nu_of_tms_per_topo: int
    nu_of_topos_per_n_l: int
    capacity_type: tuple[str, ...]
    capacity_set: tuple[float, ...]
    weight_setting: tuple[str, ...]
    tm_types: tuple[str, ...]
    network_load: tuple[float, ...]
    objectives: tuple[str, ...]
    candidate_paths: tuple[int, ...]
    routing_strategies: tuple[str, ...]
    master_seed: int = 0
    # single-path search controls (not part of the instance grid)
    mip_gap: float = 0.0
    mip_node_limit: int = DEFAULT_NODE_LIMIT

    def __post_init__(self):
        _validate(self)

    @property
    def instance_count(self) -> int:
        return math.prod(
            [
                len(self.N),
                len(self.L),
                self.nu_of_topos_per_n_l,
                self.nu_of_tms_per_topo,
                len(self.tm_types),
                len(self.network_load),
                len(self.objectives),
                len(self.candidate_paths),
                len(self.routing_strategies),
            ]
        )

    def to_dict(self) -> dict[str, Any]:
        return {f.name: (list(v) if isinstance(v := getattr(self, f.name), tuple) else v) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentConfig:
        return config_from_mapping(data)


# canonical key -> accepted spellings (lower-cased)
_KEYS: dict[str, tuple[str, ...]] = {
    "N": ("n",),
    "L": ("l",),
    "nu_of_tms_per_topo": ("nu_of_tms_per_topo", "nu_of_tms_per_n_l"),
    "nu_of_topos_per_n_l": ("nu_of_topos_per_n_l",),
    "capacity_type": ("capacity_type",),
    "capacity_set": ("capacity_set",),
    "weight_setting": ("weight_setting",),
    "tm_types": ("tm_types",),
    "network_load": ("network_load",),
    "objectives": ("objectives",),
    "candidate_paths": ("candidate_paths",),
    "routing_strategies": ("routing_strategies",),
    "master_seed": ("master_seed",),
    "mip_gap": ("mip_gap",),
    "mip_node_limit": ("mip_node_limit",),
}
_ALIASES = {alias: key for key, names in _KEYS.items() for alias in names}
_OPTIONAL = {"master_seed", "mip_gap", "mip_node_limit"}


def parse_config(path: str | Path) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text())


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse ``key = value`` lines; values are Python literals (sets, lists, numbers, strings)."""
    raw: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ParseError(f"expected 'key = value', got {body!r}", lineno)
        name, value = (part.strip() for part in body.split("=", 1))
        key = _ALIASES.get(name.lower())
        if key is None:
            raise ParseError(f"unknown key {name!r}", lineno)
        if key in raw:
            raise ParseError(f"duplicate key {name!r}", lineno)
        try:
            raw[key] = ast.literal_eval(value)
        except (ValueError, SyntaxError) as exc:
            raise ParseError(f"bad value for {name!r}: {value!r} ({exc.__class__.__name__})", lineno) from None
    return config_from_mapping(raw)


def config_from_mapping(raw: dict[str, Any]) -> ExperimentConfig:
    data = {}
    for name, value in raw.items():
        key = _ALIASES.get(name.lower(), name)
        if key not in _KEYS:
            raise ValidationError(f"unknown key {name!r}")
        data[key] = value
    missing = [k for k in _KEYS if k not in data and k not in _OPTIONAL]
    if missing:
        raise ValidationError(f"missing keys: {', '.join(missing)}")

    def members(key: str, kind, upper: bool = False, keep_order: bool = False) -> tuple:
        value = data[key]
        if isinstance(value, (str, int, float)):
            value = [value]
        if value == {}:  # "{}" parses as an empty dict
            value = set()
        if not isinstance(value, (set, frozenset, list, tuple)):
            raise ValidationError(f"{key} must be a set or list, got {type(value).__name__}")
        try:
            items = [kind(v.upper() if upper and isinstance(v, str) else v) for v in value]
        except (TypeError, ValueError):
            raise ValidationError(f"{key} has a non-{kind.__name__} member: {value!r}") from None
        if kind is int and any(isinstance(v, float) and not float(v).is_integer() for v in value):
            raise ValidationError(f"{key} must hold integers: {value!r}")
        if not items:
            raise ValidationError(f"{key} must not be empty")
        if keep_order:
            return tuple(dict.fromkeys(items))
        return tuple(sorted(set(items)))

    def scalar(key: str, kind, default):
        value = data.get(key, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"{key} must be a number, got {value!r}")
        if kind is int and not float(value).is_integer():
            raise ValidationError(f"{key} must be an integer, got {value!r}")
        return kind(value)

    return ExperimentConfig(
        N=members("N", int),
        L=members("L", int),
        nu_of_tms_per_topo=scalar("nu_of_tms_per_topo", int, None),
        nu_of_topos_per_n_l=scalar("nu_of_topos_per_n_l", int, None),
        capacity_type=members("capacity_type", str, upper=True),
        capacity_set=members("capacity_set", float),
        weight_setting=members("weight_setting", str, upper=True),
        tm_types=members("tm_types", str, upper=True),
        network_load=members("network_load", float, keep_order=True),
        objectives=members("objectives", str, upper=True),
        candidate_paths=members("candidate_paths", int),
        routing_strategies=members("routing_strategies", str, upper=True),
        master_seed=scalar("master_seed", int, 0),
        mip_gap=scalar("mip_gap", float, 0.0),
        mip_node_limit=scalar("mip_node_limit", int, DEFAULT_NODE_LIMIT),
    )


def _validate(cfg: ExperimentConfig) -> None:
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple) and not value:
            raise ValidationError(f"{f.name} must not be empty")
    for n in cfg.N:
        if n < 2:
            raise ValidationError(f"N: node count {n} < 2")
        for l in cfg.L:
            if not n - 1 <= l <= n * (n - 1) // 2:
                raise ValidationError(
                    f"L: {l} link pairs impossible for connected n={n} (need {n - 1}..{n * (n - 1) // 2})"
                )
    if cfg.nu_of_tms_per_topo < 1:
        raise ValidationError("nu_of_tms_per_topo must be >= 1")
    if cfg.nu_of_topos_per_n_l < 1:
        raise ValidationError("nu_of_topos_per_n_l must be >= 1")
    _subset("capacity_type", cfg.capacity_type, CAPACITY_TYPES)
    _subset("weight_setting", cfg.weight_setting, WEIGHT_SETTINGS)
    _subset("tm_types", cfg.tm_types, TM_TYPES)
    _subset("objectives", cfg.objectives, OBJECTIVES)
    _subset("routing_strategies", cfg.routing_strategies, STRATEGIES)
    if any(c <= 0 or not math.isfinite(c) for c in cfg.capacity_set):
        raise ValidationError(f"capacity_set must be positive: {cfg.capacity_set}")
    if any(not 0.0 < u <= 1.0 for u in cfg.network_load):
        raise ValidationError(f"network_load values must lie in (0, 1]: {cfg.network_load}")
    if any(k < 1 for k in cfg.candidate_paths):
        raise ValidationError(f"candidate_paths must be >= 1: {cfg.candidate_paths}")
    if cfg.mip_gap < 0:
        raise ValidationError("mip_gap must be >= 0")
    if cfg.mip_node_limit < 1:
        raise ValidationError("mip_node_limit must be >= 1")


def _subset(name: str, values: Sequence[str], allowed: Sequence[str]) -> None:
    bad = [v for v in values if v not in allowed]
    if bad:
        raise ValidationError(f"{name}: unsupported {bad}; allowed {list(allowed)}")


def derive_seed(*parts: int) -> int:
    """Stable 64-bit seed from integer parts (independent of PYTHONHASHSEED and platform)."""
    digest = hashlib.blake2b(",".join(str(int(p)) for p in parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


@dataclass(frozen=True)
class InstanceSpec:
    n: int
    l: int
    topo_index: int
    tm_type: str
    tm_index: int
    network_load: float
    objective: str
    k: int
    strategy: str
    topo_seed: int
    tm_seed: int
    capacity_set: tuple[float, ...]
    weight_setting: str = "INV_CAP"
    mip_gap: float = 0.0
    mip_node_limit: int = DEFAULT_NODE_LIMIT

    @property
    def tm_key(self) -> tuple:
        """Instances sharing this key share one topology and one scaled traffic matrix."""
        return (self.n, self.l, self.topo_seed, self.capacity_set, self.weight_setting,
                self.tm_type, self.tm_seed, self.network_load)


def expand_instances(cfg: ExperimentConfig) -> list[InstanceSpec]:
    """Full cartesian grid, ordered topology -> traffic matrix -> formulation."""
    out = []
    for (ni, n), (li, l) in itertools.product(enumerate(cfg.N), enumerate(cfg.L)):
        for t in range(cfg.nu_of_topos_per_n_l):
            topo_seed = derive_seed(cfg.master_seed, ni, li, t)
            for tm_type in cfg.tm_types:
                for m in range(cfg.nu_of_tms_per_topo):
                    tm_seed = derive_seed(cfg.master_seed, ni, li, t, m)
                    for load, obj, k, strat in itertools.product(
                        cfg.network_load, cfg.objectives, cfg.candidate_paths, cfg.routing_strategies
                    ):
                        out.append(
                            InstanceSpec(
                                n, l, t, tm_type, m, load, obj, k, strat, topo_seed, tm_seed,
                                cfg.capacity_set, cfg.weight_setting[0], cfg.mip_gap, cfg.mip_node_limit,
                            )
                        )
    return out


@dataclass
class InstanceRecord:
    n: int
    l: int
    avg_nodal_degree: float
    network_load: float
    tm_type: str
    obj_type: str
    obj_val: float | None
    k: int
    routing_strategy: str
    residual_cap: float | None
    links_utilization_and_residual: dict[str, dict[str, float]]
    flow_agg_per_path: dict[str, float]
    status: str
    solve_time: float
    topo_seed: int
    tm_seed: int
    mip_bound: float | None = None
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> InstanceRecord:
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})


def residual_capacity_pct(links: LinkLoadVector) -> float:
    total = math.fsum(links.capacity)
    return 100.0 * math.fsum(links.residual) / total


def flow_agg_per_path(alloc: FlowAllocation, k: int | None = None) -> dict[str, float]:
    """Total flow on each path rank (1 = shortest) summed over demands."""
    k = k or max((len(fs) for fs in alloc.flows), default=0)
    agg = [[] for _ in range(k)]
    for fs in alloc.flows:
        for i, x in enumerate(fs):
            agg[i].append(x)
    return {str(i + 1): math.fsum(v) for i, v in enumerate(agg)}


def link_key(src: int, dst: int) -> str:
    return f"{src}->{dst}"


def _link_metrics(loads: LinkLoadVector) -> dict[str, dict[str, float]]:
    return {
        link_key(s, d): {"load": y, "utilization": y / c, "residual": c - y}
        for (s, d), c, y in zip(loads.links, loads.capacity, loads.load)
    }


@lru_cache(maxsize=8)
def _topology(n: int, l: int, capacity_set: tuple[float, ...], weight: str, seed: int) -> Topology:
    return build_topology(n, l, capacity_set, seed=seed, weight_setting=weight)


@lru_cache(maxsize=8)
def _traffic(spec_key: tuple) -> TrafficMatrix:
    n, l, topo_seed, capacity_set, weight, tm_type, tm_seed, load = spec_key
    topo = _topology(n, l, capacity_set, weight, topo_seed)
    return scale_to_max_utilization(generate_tm(tm_type, topo, tm_seed), topo, load)


def run_instance(spec: InstanceSpec, paths: CandidatePathSet | None = None) -> InstanceRecord:
    """Run one instance end to end; failures are recorded rather than raised."""
    record = InstanceRecord(
        n=spec.n, l=spec.l, avg_nodal_degree=2.0 * spec.l / spec.n, network_load=spec.network_load,
        tm_type=spec.tm_type, obj_type=spec.objective, obj_val=None, k=spec.k,
        routing_strategy=spec.strategy, residual_cap=None, links_utilization_and_residual={},
        flow_agg_per_path={}, status=STATUS_ERROR, solve_time=0.0,
        topo_seed=spec.topo_seed, tm_seed=spec.tm_seed,
    )
    try:
        topo = _topology(spec.n, spec.l, spec.capacity_set, spec.weight_setting, spec.topo_seed)
        record.avg_nodal_degree = avg_nodal_degree(topo)
        tm = _traffic(spec.tm_key)
        if paths is None:
            paths = build_candidate_paths(topo, tm, spec.k)
        elif paths.k != spec.k:
            paths = truncate(paths, spec.k)
        start = time.perf_counter()
        try:
            alloc, loads, _ = route(
                topo, tm, paths, spec.objective, spec.strategy,
                **({"mip_gap": spec.mip_gap, "node_limit": spec.mip_node_limit}
                   if spec.strategy == "SINGLEPATH" else {}),
            )
            record.status = STATUS_OPTIMAL
        except NodeLimitExceeded as stop:
            if stop.incumbent is None:
                raise
            alloc, loads = decode_solution(stop.incumbent, paths, tm, topo, spec.objective, spec.strategy)
            record.status = STATUS_NODE_LIMIT
            record.mip_bound = float(stop.bound)
        finally:
            record.solve_time = time.perf_counter() - start
    except InfeasibleInstance as exc:
        record.status = STATUS_INFEASIBLE
        record.error = str(exc)
        return record
    except (ConnectivityFailure, DegenerateMatrix, NumericalFailure, NodeLimitExceeded,
            InvalidSize, UnsupportedSetting) as exc:
        record.status = STATUS_ERROR
        record.error = f"{type(exc).__name__}: {exc}"
        return record

    record.obj_val = float(alloc.objective_value)
    record.residual_cap = residual_capacity_pct(loads)
    record.links_utilization_and_residual = _link_metrics(loads)
    record.flow_agg_per_path = flow_agg_per_path(alloc, spec.k)
    return record


def _run_group(specs: list[InstanceSpec]) -> list[InstanceRecord]:
    """Instances sharing a topology and traffic matrix; paths are computed once at the largest k."""
    paths = None
    try:
        first = specs[0]
        topo = _topology(first.n, first.l, first.capacity_set, first.weight_setting, first.topo_seed)
        tm = _traffic(first.tm_key)
        paths = build_candidate_paths(topo, tm, max(s.k for s in specs))
    except Exception:  # noqa: BLE001 - each instance re-raises and records its own failure
        paths = None
    return [run_instance(s, paths) for s in specs]


@dataclass
class Dataset:
    records: list[InstanceRecord]
    config: ExperimentConfig | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def run_all(cfg: ExperimentConfig, workers: int = 1) -> Dataset:
    """Run the whole grid with at most ``workers`` processes; records come back in expansion order."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    specs = expand_instances(cfg)
    groups: dict[tuple, list[int]] = {}
    for i, s in enumerate(specs):
        groups.setdefault(s.tm_key, []).append(i)
    batches = list(groups.values())
    results: list[InstanceRecord | None] = [None] * len(specs)
    if workers == 1:
        outputs = (_run_group([specs[i] for i in b]) for b in batches)
        for batch, recs in zip(batches, outputs):
            for i, r in zip(batch, recs):
                results[i] = r
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = pool.map(_run_group, [[specs[i] for i in b] for b in batches])
            for batch, recs in zip(batches, outputs):
                for i, r in zip(batch, recs):
                    results[i] = r
    return Dataset([r for r in results if r is not None], cfg)


CSV_COLUMNS = [
    f.name for f in fields(InstanceRecord)
    if f.name not in ("links_utilization_and_residual", "flow_agg_per_path")
]


def write_dataset(dataset: Dataset, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"jsonl": out / "dataset.jsonl", "csv": out / "dataset.csv", "config": out / "config.json"}
    with paths["jsonl"].open("w") as fh:
        for r in dataset.records:
            fh.write(json.dumps(r.to_dict(), sort_keys=False) + "\n")
    with paths["csv"].open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for r in dataset.records:
            writer.writerow(r.to_dict())
    if dataset.config is not None:
        paths["config"].write_text(json.dumps(dataset.config.to_dict(), indent=2) + "\n")
    return paths


def load_dataset(path: str | Path) -> Dataset:
    """Load ``dataset.jsonl`` (a directory or the file itself) plus the config echo if present."""
    p = Path(path)
    jsonl = p / "dataset.jsonl" if p.is_dir() else p
    records = [InstanceRecord.from_dict(json.loads(line)) for line in jsonl.read_text().splitlines() if line]
    cfg_path = jsonl.parent / "config.json"
    cfg = None
    if cfg_path.exists():
        cfg = ExperimentConfig.from_dict(json.loads(cfg_path.read_text()))
    return Dataset(records, cfg)


def records_without_timing(dataset: Dataset | Iterable[InstanceRecord]) -> list[dict[str, Any]]:
    out = []
    for r in dataset:
        d = r.to_dict()
        d.pop("solve_time")
        out.append(d)
    return out


def summarize(dataset: Dataset) -> dict[str, int]:
    counts: dict[str, int] = {}
    for r in dataset:
        counts[r.status] = counts.get(r.status, 0) + 1
    return counts


def jsonl_lines_without_timing(path: str | Path) -> list[str]:
    lines = []
    for line in Path(path).read_text().splitlines():
        d = json.loads(line)
        d.pop("solve_time", None)
        lines.append(json.dumps(d))
    return lines

