"""Synthetic workloads with known linear size functions, and their sample-run logs."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace

from .errors import InvalidConfig
from .logmodel import FULL_SCALE, CachedDatasetRecord, SampleRunLog
from .predictor import LinearModel
from .selector import MachineProfile
from .simulator import CostParams, DatasetNode, WorkloadSpec, run

MiB = 1 << 20


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    n_datasets: int = 6
    cached_count: int = 2
    intercept_range: tuple[int, int] = (0, 1 * MiB)
    slope_range: tuple[int, int] = (1 * MiB, 16 * MiB)
    exec_intercept_range: tuple[int, int] = (0, 32 * MiB)
    exec_slope_range: tuple[int, int] = (0, 8 * MiB)
    partitions_range: tuple[int, int] = (1, 4)
    # partition counts are drawn as multiples of this; sizes at integer
    # scales then split into equal integer partitions
    partition_quantum: int = 60
    noise_relative: float = 0.0
    scales: tuple[float, ...] = (1.0, 2.0, 3.0)
    n_actions: int = 4
    iterations: int = 3
    blocks_full: int = 2000
    cost_params: CostParams = CostParams(
        serial_time=30.0, parallel_work=600.0, overhead_coeff=2.0, task_time_cached=0.5
    )

    def __post_init__(self):
        if self.n_datasets < 1:
            raise InvalidConfig("need at least one dataset")
        if not 0 <= self.cached_count <= self.n_datasets:
            raise InvalidConfig("cached_count must be within [0, n_datasets]")
        if not 0 <= self.noise_relative <= 0.5:
            raise InvalidConfig("noise_relative must be within [0, 0.5]")
        for lo, hi in (self.intercept_range, self.slope_range, self.exec_intercept_range,
                       self.exec_slope_range, self.partitions_range):
            if lo < 0 or hi < lo:
                raise InvalidConfig(f"bad range ({lo}, {hi})")
        if self.partitions_range[0] < 1 or self.partition_quantum < 1:
            raise InvalidConfig("partitions must be positive")
        if self.n_actions < 1 or self.iterations < 1:
            raise InvalidConfig("need at least one action and iteration")
        if not self.scales or min(self.scales) <= 0:
            raise InvalidConfig("sample scales must be positive")


def _multiple(rng: random.Random, lo: int, hi: int, q: int) -> int:
    """Uniform multiple of ``q`` within [lo, hi] (rounded inward where possible)."""
    a, b = -(-lo // q), hi // q
    if b < a:
        return a * q
    return rng.randint(a, b) * q


def generate_spec(config: GenConfig) -> WorkloadSpec:
    rng = random.Random(config.seed)
    n = config.n_datasets
    ids = [f"D{i}" for i in range(n)]
    parents = [()]
    for i in range(1, n):
        k = min(i, rng.choice((1, 1, 2)))
        parents.append(tuple(sorted(rng.sample(ids[:i], k), key=ids.index)))
    # cached datasets are drawn from non-roots when there are any
    pool = ids[1:] if n > 1 and config.cached_count < n else ids
    cached = set(rng.sample(pool, config.cached_count))

    datasets = []
    for i, d in enumerate(ids):
        if d in cached:
            q = config.partition_quantum
            parts = rng.randint(*config.partitions_range) * q
            size_fn = LinearModel(
                float(_multiple(rng, *config.intercept_range, parts)),
                float(_multiple(rng, *config.slope_range, parts)),
            )
            datasets.append(DatasetNode(d, parents[i], True, size_fn, parts))
        else:
            datasets.append(DatasetNode(d, parents[i], False))

    has_child = {p for ps in parents for p in ps}
    actions = [d for d in ids if d not in has_child]
    while len(actions) < config.n_actions:
        actions.append(rng.choice(ids))

    exec_fn = LinearModel(
        float(rng.randint(*config.exec_intercept_range)),
        float(rng.randint(*config.exec_slope_range)),
    )
    total_slope = sum(d.size_fn.slope for d in datasets) or float(MiB)
    return WorkloadSpec(
        datasets=tuple(datasets),
        actions=tuple(actions),
        iterations=config.iterations,
        cost_params=config.cost_params,
        scale=FULL_SCALE,
        exec_fn=exec_fn,
        app_id=f"synthetic-{config.seed}",
        input_bytes_full=int(total_slope * FULL_SCALE),
        blocks_full=config.blocks_full,
    )


def _sample_spec(spec: WorkloadSpec, scale: float) -> WorkloadSpec:
    ratio = scale / spec.scale if spec.scale else 1.0
    datasets = tuple(
        replace(d, partitions=max(1, round(d.partitions * ratio))) for d in spec.datasets
    )
    cp = replace(spec.cost_params, parallel_work=spec.cost_params.parallel_work * ratio)
    return replace(spec, datasets=datasets, cost_params=cp, scale=scale)


def emit_sample_log(
    spec: WorkloadSpec, scale: float, noise_seed: int = 0, noise_relative: float = 0.0
) -> SampleRunLog:
    """Log of a single-machine sample run at ``scale`` (full data = 1000).

    Cached sizes are the spec's size functions, perturbed by a seeded
    multiplicative uniform factor when ``noise_relative`` > 0.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    if not 0 <= noise_relative <= 0.5:
        raise InvalidConfig("noise_relative must be within [0, 0.5]")
    sample = _sample_spec(spec, scale)
    rng = random.Random(f"{noise_seed}/{scale!r}")
    records = []
    for d in sample.datasets:
        if not d.cached:
            continue
        size = d.size_at(scale)
        if noise_relative:
            size = math.floor(size * (1 + rng.uniform(-noise_relative, noise_relative)) + 0.5)
        records.append(CachedDatasetRecord(d.id, size, d.partitions, 0))

    peak = sample.exec_total()
    ratio = scale / spec.scale if spec.scale else 1.0
    blocks = max(1, round(spec.blocks_full * ratio))
    # sample runs are assumed unconstrained: give the machine room for everything
    room = max(1, sample.total_cached() + peak)
    wall = run(sample, 1, MachineProfile(room, room)).total_time
    return SampleRunLog(
        app_id=spec.app_id,
        data_scale=float(scale),
        input_bytes=round(spec.input_bytes_full * ratio),
        block_count=blocks,
        machines=1,
        cached_datasets=tuple(records),
        peak_execution_memory=peak,
        task_placements={"m0": blocks},
        wall_time=wall,
    )


def stage_peaks(log: SampleRunLog) -> list[int]:
    """A plausible per-stage breakdown whose maximum is the run's peak."""
    p = log.peak_execution_memory
    return [p // 4, p, p // 2]
