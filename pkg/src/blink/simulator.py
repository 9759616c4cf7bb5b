"""Deterministic cluster and cache simulator.

A workload is a merged DAG of datasets plus an ordered list of actions, each
naming a sink dataset. Actions replay their lineage; cached datasets are kept
per partition in a byte-budgeted LRU cache on the machine the partition was
placed on. Time follows a serial + parallel/n + overhead*n shape with a
multiplier for tasks that have to recompute an evicted partition.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import random
from collections import Counter, OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .errors import CyclicDag, EmptyWorkload, InvalidConfig
from .predictor import LinearModel
from .selector import MachineProfile

KAPPA = 97.0


@dataclass(frozen=True)
class DatasetNode:
    id: str
    parents: tuple[str, ...] = ()
    cached: bool = False
    size_fn: LinearModel = LinearModel(0.0, 0.0)
    partitions: int = 1

    def size_at(self, scale: float) -> int:
        return math.floor(self.size_fn.value(scale) + 0.5)


@dataclass(frozen=True)
class CostParams:
    serial_time: float = 0.0
    parallel_work: float = 0.0
    overhead_coeff: float = 0.0
    task_time_cached: float = 1.0
    recompute_factor: float = KAPPA

    def __post_init__(self):
        values = (self.serial_time, self.parallel_work, self.overhead_coeff, self.task_time_cached)
        if min(values) < 0:
            raise InvalidConfig("cost parameters must be non-negative")
        if self.recompute_factor < 1:
            raise InvalidConfig("recompute factor must be >= 1")


@dataclass(frozen=True)
class WorkloadSpec:
    datasets: tuple[DatasetNode, ...]
    actions: tuple[str, ...]
    iterations: int = 1
    cost_params: CostParams = CostParams()
    scale: float = 1000.0
    exec_fn: LinearModel = LinearModel(0.0, 0.0)
    app_id: str = "app"
    input_bytes_full: int = 0
    blocks_full: int = 1

    def __post_init__(self):
        object.__setattr__(self, "datasets", tuple(self.datasets))
        object.__setattr__(self, "actions", tuple(self.actions))
        ids = [d.id for d in self.datasets]
        if len(set(ids)) != len(ids):
            raise InvalidConfig("duplicate dataset ids")
        known = set(ids)
        for d in self.datasets:
            missing = set(d.parents) - known
            if missing:
                raise InvalidConfig(f"{d.id}: unknown parent(s) {sorted(missing)}")
            if d.partitions < 1:
                raise InvalidConfig(f"{d.id}: partitions must be >= 1")
        for a in self.actions:
            if a not in known:
                raise InvalidConfig(f"action sink {a!r} is not a dataset")
        if self.iterations < 1:
            raise InvalidConfig("iterations must be >= 1")
        if self.scale < 0:
            raise InvalidConfig("scale must be non-negative")
        topo_order(self)

    @property
    def by_id(self) -> dict[str, DatasetNode]:
        return {d.id: d for d in self.datasets}

    @property
    def cached_ids(self) -> tuple[str, ...]:
        return tuple(d.id for d in self.datasets if d.cached)

    def at_scale(self, scale: float) -> "WorkloadSpec":
        return replace(self, scale=scale)

    def total_cached(self, scale: float | None = None) -> int:
        s = self.scale if scale is None else scale
        return sum(d.size_at(s) for d in self.datasets if d.cached)

    def exec_total(self, scale: float | None = None) -> int:
        s = self.scale if scale is None else scale
        return math.floor(self.exec_fn.value(s) + 0.5)

    def to_dict(self) -> dict:
        cp = self.cost_params
        return {
            "app_id": self.app_id,
            "scale": self.scale,
            "iterations": self.iterations,
            "input_bytes_full": self.input_bytes_full,
            "blocks_full": self.blocks_full,
            "datasets": [
                {
                    "id": d.id,
                    "parents": list(d.parents),
                    "cached": d.cached,
                    "size_intercept": d.size_fn.intercept,
                    "size_slope": d.size_fn.slope,
                    "partitions": d.partitions,
                }
                for d in self.datasets
            ],
            "actions": list(self.actions),
            "execution_memory": {"intercept": self.exec_fn.intercept, "slope": self.exec_fn.slope},
            "cost_params": {
                "serial_time": cp.serial_time,
                "parallel_work": cp.parallel_work,
                "overhead_coeff": cp.overhead_coeff,
                "task_time_cached": cp.task_time_cached,
                "recompute_factor": cp.recompute_factor,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "WorkloadSpec":
        try:
            datasets = tuple(
                DatasetNode(
                    id=str(d["id"]),
                    parents=tuple(d.get("parents", ())),
                    cached=bool(d.get("cached", False)),
                    size_fn=LinearModel(float(d.get("size_intercept", 0)), float(d.get("size_slope", 0))),
                    partitions=int(d.get("partitions", 1)),
                )
                for d in data["datasets"]
            )
            ex = data.get("execution_memory", {})
            return cls(
                datasets=datasets,
                actions=tuple(data["actions"]),
                iterations=int(data.get("iterations", 1)),
                cost_params=CostParams(**data.get("cost_params", {})),
                scale=float(data.get("scale", 1000.0)),
                exec_fn=LinearModel(float(ex.get("intercept", 0)), float(ex.get("slope", 0))),
                app_id=str(data.get("app_id", "app")),
                input_bytes_full=int(data.get("input_bytes_full", 0)),
                blocks_full=int(data.get("blocks_full", 1)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidConfig(f"bad workload spec: {exc}") from None

    def dump(self, path: str | os.PathLike) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "WorkloadSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


def topo_order(spec: WorkloadSpec) -> list[str]:
    """Parents-first order; raises CyclicDag."""
    nodes = spec.by_id
    state: dict[str, int] = {}
    order: list[str] = []
    for root in nodes:
        if root in state:
            continue
        stack = [(root, iter(nodes[root].parents))]
        state[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                state[node] = 2
                order.append(node)
            elif state.get(nxt) == 1:
                raise CyclicDag(f"cycle through {nxt!r}")
            elif nxt not in state:
                state[nxt] = 1
                stack.append((nxt, iter(nodes[nxt].parents)))
    return order


def lineage(spec: WorkloadSpec, sink: str) -> list[str]:
    """Datasets needed by an action on ``sink``, depth-first from the sink."""
    nodes = spec.by_id
    seen: list[str] = []
    stack = [sink]
    visited = set()
    while stack:
        d = stack.pop()
        if d in visited:
            continue
        visited.add(d)
        seen.append(d)
        stack.extend(reversed(nodes[d].parents))
    return seen


def action_sequence(spec: WorkloadSpec) -> list[str]:
    return list(spec.actions) * spec.iterations


def computation_counts(spec: WorkloadSpec) -> dict[str, int]:
    """How many actions have each dataset in their lineage."""
    topo_order(spec)
    counts = Counter({d.id: 0 for d in spec.datasets})
    for sink in spec.actions:
        counts.update(lineage(spec, sink))
    return dict(counts)


def _replay(spec: WorkloadSpec, cached: set[str]):
    """Yield, per executed action, the datasets computed and the cached ones read.

    A cached dataset is computed once and then read instead of recomputed;
    its ancestors are not visited once it has been materialized.
    """
    nodes = spec.by_id
    materialized: set[str] = set()
    for sink in action_sequence(spec):
        computed: list[str] = []
        read: list[str] = []
        visited: set[str] = set()
        stack = [sink]
        while stack:
            d = stack.pop()
            if d in visited:
                continue
            visited.add(d)
            if d in cached and d in materialized:
                read.append(d)
                continue
            computed.append(d)
            stack.extend(reversed(nodes[d].parents))
        materialized.update(d for d in computed if d in cached)
        yield computed, read


def recompute_counts(
    spec: WorkloadSpec, cached_set: Iterable[str] | None = None, assume_fit: bool = True
) -> dict[str, int]:
    """Computations beyond the first for each dataset.

    ``cached_set`` defaults to the spec's cached datasets. With
    ``assume_fit=False`` caching is ignored entirely; partial eviction is only
    modeled by :func:`run`.
    """
    topo_order(spec)
    if cached_set is None:
        cached_set = spec.cached_ids
    cached = set(cached_set) if assume_fit else set()
    counts = Counter({d.id: 0 for d in spec.datasets})
    for computed, _ in _replay(spec, cached):
        counts.update(computed)
    return {d: max(0, c - 1) for d, c in counts.items()}


@dataclass(frozen=True)
class Placement:
    """BALANCED round-robin, or SKEWED by seeded multinomial or explicit per-machine counts."""

    kind: str = "BALANCED"
    seed: int = 0
    counts: tuple[int, ...] | None = None

    @classmethod
    def balanced(cls) -> "Placement":
        return cls("BALANCED")

    @classmethod
    def skewed(cls, seed: int = 0, counts: Sequence[int] | None = None) -> "Placement":
        return cls("SKEWED", seed, tuple(counts) if counts is not None else None)

    @classmethod
    def parse(cls, text: str) -> "Placement":
        kind, _, seed = text.partition(":")
        if kind.lower() == "balanced":
            return cls.balanced()
        if kind.lower() == "skewed":
            return cls.skewed(int(seed) if seed else 0)
        raise ValueError(f"unknown placement {text!r}")

    def assign(self, n_partitions: int, machines: int) -> list[int]:
        if self.kind == "BALANCED":
            return [i % machines for i in range(n_partitions)]
        if self.counts is not None:
            if len(self.counts) != machines or sum(self.counts) != n_partitions:
                raise ValueError("explicit counts must cover every partition on every machine")
            out: list[int] = []
            for m, c in enumerate(self.counts):
                out.extend([m] * c)
            return out
        rng = random.Random(self.seed)
        return [rng.randrange(machines) for _ in range(n_partitions)]


@dataclass(frozen=True)
class SimulationReport:
    machines: int
    evicted_partitions: int
    cached_fraction: float
    total_time: float
    total_cost: float
    per_machine_tasks: dict[int, int] = field(default_factory=dict)
    eviction_events: int = 0
    recomputed_tasks: int = 0

    def to_dict(self) -> dict:
        return {
            "machines": self.machines,
            "evicted_partitions": self.evicted_partitions,
            "cached_fraction": self.cached_fraction,
            "total_time": self.total_time,
            "total_cost": self.total_cost,
            "per_machine_tasks": {str(k): v for k, v in sorted(self.per_machine_tasks.items())},
            "eviction_events": self.eviction_events,
            "recomputed_tasks": self.recomputed_tasks,
        }


class _MachineCache:
    def __init__(self, capacity):
        self.capacity = capacity
        self.used = 0
        self.lru: OrderedDict = OrderedDict()
        self.evictions = 0

    def touch(self, key) -> bool:
        if key in self.lru:
            self.lru.move_to_end(key)
            return True
        return False

    def insert(self, key, size: int) -> None:
        if size > self.capacity:
            return
        while self.used + size > self.capacity:
            _, old = self.lru.popitem(last=False)
            self.used -= old
            self.evictions += 1
        self.lru[key] = size
        self.used += size


def run(
    spec: WorkloadSpec,
    machines: int,
    profile: MachineProfile,
    placement: Placement = Placement(),
) -> SimulationReport:
    if machines < 1:
        raise ValueError("machines must be >= 1")
    if not spec.actions:
        raise EmptyWorkload("workload has no actions")
    cp = spec.cost_params
    cached = set(spec.cached_ids)

    # global partition index -> (dataset, partition, bytes); round-robin
    # placement continues across datasets so the split stays ceil/floor
    part_sizes: dict[str, list[int]] = {}
    keys: list[tuple[str, int]] = []
    for d in spec.datasets:
        if d.cached:
            base, extra = divmod(d.size_at(spec.scale), d.partitions)
            part_sizes[d.id] = [base + (1 if i < extra else 0) for i in range(d.partitions)]
            keys.extend((d.id, i) for i in range(d.partitions))
    owner = dict(zip(keys, placement.assign(len(keys), machines)))
    per_machine = Counter(owner.values())

    capacity = profile.cache_capacity(spec.exec_total(), machines)
    caches = [_MachineCache(capacity) for _ in range(machines)]
    load = [0] * machines
    for (ds, pid), m in owner.items():
        load[m] += part_sizes[ds][pid]
    # a machine whose whole share fits never evicts; skip LRU bookkeeping there
    roomy = [load[m] <= capacity for m in range(machines)]

    order = {d.id: i for i, d in enumerate(spec.datasets)}
    t = cp.task_time_cached
    total_time = cp.serial_time
    hits = reads = recomputed = 0
    materialized: set[str] = set()
    for computed, read in _replay(spec, cached):
        busy = [0.0] * machines
        fresh = sorted((d for d in computed if d in cached), key=order.get)
        materialized.update(fresh)
        for ds in fresh:
            for pid, size in enumerate(part_sizes[ds]):
                m = owner[(ds, pid)]
                busy[m] += t
                if not roomy[m]:
                    caches[m].insert((ds, pid), size)
        for ds in sorted(read, key=order.get):
            for pid, size in enumerate(part_sizes[ds]):
                m = owner[(ds, pid)]
                reads += 1
                if roomy[m] or caches[m].touch((ds, pid)):
                    hits += 1
                    busy[m] += t
                else:
                    recomputed += 1
                    busy[m] += cp.recompute_factor * t
                    caches[m].insert((ds, pid), size)
        total_time += max(busy) + cp.overhead_coeff * machines + cp.parallel_work / machines

    evicted = sum(
        1 for k in keys
        if k[0] in materialized and not roomy[owner[k]] and k not in caches[owner[k]].lru
    )
    return SimulationReport(
        machines=machines,
        evicted_partitions=evicted,
        cached_fraction=hits / reads if reads else 1.0,
        total_time=total_time,
        total_cost=machines * total_time,
        per_machine_tasks={m: per_machine.get(m, 0) for m in range(machines)},
        eviction_events=sum(c.evictions for c in caches),
        recomputed_tasks=recomputed,
    )


@dataclass(frozen=True)
class SweepResult:
    reports: tuple[SimulationReport, ...]
    labels: tuple[str, ...]

    @property
    def optimal(self) -> int:
        return self.reports[self.labels.index("C")].machines

    @property
    def min_eviction_free(self) -> int | None:
        return next((r.machines for r in self.reports if r.evicted_partitions == 0), None)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["machines", "time_s", "cost_machine_s", "evicted", "cached_fraction", "area"])
        for r, label in zip(self.reports, self.labels):
            w.writerow([r.machines, repr(r.total_time), repr(r.total_cost),
                        r.evicted_partitions, repr(r.cached_fraction), label])
        return buf.getvalue()


def area_labels(costs: Sequence[float]) -> tuple[str, ...]:
    """'A' left of the cheapest point, 'C' at it, 'B' right of it (ties go left)."""
    best = min(range(len(costs)), key=lambda i: (costs[i], i))
    return tuple("A" if i < best else "C" if i == best else "B" for i in range(len(costs)))


def _run_args(args):
    return run(*args)


def sweep(
    spec: WorkloadSpec,
    n_range: Iterable[int],
    profile: MachineProfile,
    placement: Placement = Placement(),
    jobs: int = 1,
) -> SweepResult:
    ns = list(n_range)
    if not ns:
        raise ValueError("empty machine range")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("machine range must be ascending")
    args = [(spec, n, profile, placement) for n in ns]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = tuple(pool.map(_run_args, args))
    else:
        reports = tuple(_run_args(a) for a in args)
    return SweepResult(reports, area_labels([r.total_cost for r in reports]))
