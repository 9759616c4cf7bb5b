"""Cluster-size selection from predicted cache and execution-memory demand."""

from __future__ import annotations

import enum
import json
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from .errors import InfeasibleAtAnyScale, InvalidProfile, ModelMissing, Unbounded
from .predictor import LinearModel

DEFAULT_GRANULARITY = 10.0  # 1% of full scale


@dataclass(frozen=True)
class MachineProfile:
    """Memory geometry of one machine.

    ``unified_memory`` (M) is shared by caching and execution;
    ``storage_floor`` (R) is never handed to execution.
    """

    unified_memory: int
    storage_floor: int
    task_capacity: int | None = None

    def __post_init__(self):
        if not 0 < self.storage_floor <= self.unified_memory:
            raise InvalidProfile(
                f"need 0 < R <= M, got R={self.storage_floor}, M={self.unified_memory}"
            )
        if self.task_capacity is not None and self.task_capacity < 1:
            raise InvalidProfile("task_capacity must be positive")

    @property
    def execution_headroom(self) -> int:
        return self.unified_memory - self.storage_floor

    def cache_capacity(self, exec_total: float, machines: int) -> Fraction:
        """Bytes left for caching on each machine of an ``machines``-node cluster."""
        return Fraction(self.aggregate_cache_capacity(exec_total, machines), machines)

    def aggregate_cache_capacity(self, exec_total: float, machines: int) -> Fraction | int:
        # M*n - min((M-R)*n, E): exact for integer inputs
        exec_total = Fraction(exec_total)
        return self.unified_memory * machines - min(self.execution_headroom * machines, exec_total)

    def to_dict(self) -> dict:
        out = {
            "unified_memory_bytes": self.unified_memory,
            "storage_floor_bytes": self.storage_floor,
        }
        if self.task_capacity is not None:
            out["task_capacity"] = self.task_capacity
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "MachineProfile":
        try:
            return cls(
                int(data["unified_memory_bytes"]),
                int(data["storage_floor_bytes"]),
                data.get("task_capacity"),
            )
        except KeyError as exc:
            raise InvalidProfile(f"profile missing {exc.args[0]}") from None

    @classmethod
    def load(cls, path: str | os.PathLike) -> "MachineProfile":
        return cls.from_dict(json.loads(Path(path).read_text()))


class Rationale(str, enum.Enum):
    NO_CACHED_DATA = "NO_CACHED_DATA"
    FITS = "FITS"
    CAPPED_AT_MAX = "CAPPED_AT_MAX"


@dataclass(frozen=True)
class Recommendation:
    machines: int
    predicted_total_cached: int
    predicted_execution_memory: int
    machines_min: int
    machines_max: int
    rationale: Rationale

    def to_dict(self) -> dict:
        return {
            "machines": self.machines,
            "predicted_total_cached": self.predicted_total_cached,
            "predicted_execution_memory": self.predicted_execution_memory,
            "machines_min": self.machines_min,
            "machines_max": self.machines_max,
            "rationale": self.rationale.value,
        }


@dataclass(frozen=True)
class SkewCheck:
    ok: bool
    predicted_evictions: int
    assignment: tuple[int, ...]


def machines_bounds(total_cached: int, profile: MachineProfile) -> tuple[int, int]:
    if total_cached < 0:
        raise ValueError("total cached size cannot be negative")
    lo = max(1, -(-total_cached // profile.unified_memory))
    hi = max(1, -(-total_cached // profile.storage_floor))
    return lo, hi


def machine_execution_memory(exec_total: float, machines: int, profile: MachineProfile) -> float:
    if machines < 1:
        raise ValueError("machines must be >= 1")
    return min(profile.execution_headroom, exec_total / machines)


def fits(total_cached: int, exec_total: int, machines: int, profile: MachineProfile) -> bool:
    """Aggregate cache condition: total <= (M - per-machine execution) * machines."""
    return total_cached <= profile.aggregate_cache_capacity(exec_total, machines)


def _demand(size_models: Mapping[str, LinearModel], exec_model: LinearModel, scale: float):
    # same rounding as predictor.predict, but defined at scale 0 too
    total = sum(math.floor(m.value(scale) + 0.5) for m in size_models.values())
    return total, math.floor(exec_model.value(scale) + 0.5)


def select_cluster_size(
    size_models: Mapping[str, LinearModel],
    exec_model: LinearModel | None,
    scale: float,
    profile: MachineProfile,
) -> Recommendation:
    if exec_model is None:
        raise ModelMissing("no execution-memory model")
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    total, exec_total = _demand(size_models, exec_model, scale)
    lo, hi = machines_bounds(total, profile)
    if total == 0:
        return Recommendation(1, 0, exec_total, lo, hi, Rationale.NO_CACHED_DATA)
    n = lo
    while not fits(total, exec_total, n, profile):
        n += 1
    assert n <= hi, "capacity never drops below R per machine"
    capped = n == hi and exec_total >= profile.execution_headroom * n and hi > lo
    return Recommendation(
        n, total, exec_total, lo, hi, Rationale.CAPPED_AT_MAX if capped else Rationale.FITS
    )


def cluster_bounds(
    size_models: Mapping[str, LinearModel],
    exec_model: LinearModel | None,
    machines: int,
    profile: MachineProfile,
    granularity: float = DEFAULT_GRANULARITY,
) -> float:
    """Largest multiple of ``granularity`` that ``machines`` can run eviction-free."""
    if exec_model is None:
        raise ModelMissing("no execution-memory model")
    if machines < 1:
        raise ValueError("machines must be >= 1")
    if granularity <= 0:
        raise ValueError("granularity must be positive")

    def ok(s: float) -> bool:
        return fits(*_demand(size_models, exec_model, s), machines, profile)

    if not ok(0.0):
        raise InfeasibleAtAnyScale("model intercepts alone exceed cluster capacity")

    # Both sides are monotone in scale, so feasibility is a prefix of [0, inf).
    hi = granularity
    while ok(hi):
        if hi > 1e15:
            raise Unbounded("every data scale fits this cluster")
        hi *= 2
    lo = hi / 2 if hi > granularity else 0.0
    for _ in range(200):
        mid = (lo + hi) / 2
        if mid in (lo, hi):
            break
        if ok(mid):
            lo = mid
        else:
            hi = mid

    k = math.floor(lo / granularity)
    while ok((k + 1) * granularity):
        k += 1
    while k > 0 and not ok(k * granularity):
        k -= 1
    return round(k * granularity, 12)


def balanced_assignment(partitions: int, machines: int) -> tuple[int, ...]:
    base, extra = divmod(partitions, machines)
    return tuple(base + (1 if i < extra else 0) for i in range(machines))


def skew_adjusted_check(
    machines: int | Recommendation,
    partitions: int,
    profile: MachineProfile,
    assignment: Sequence[int] | None = None,
) -> SkewCheck:
    """Count cached partitions that overflow each machine's task capacity."""
    if isinstance(machines, Recommendation):
        machines = machines.machines
    if profile.task_capacity is None:
        raise InvalidProfile("skew check needs a task_capacity")
    if partitions < 1:
        raise ValueError("partitions must be >= 1")
    if assignment is None:
        assignment = balanced_assignment(partitions, machines)
    assignment = tuple(assignment)
    if len(assignment) != machines or sum(assignment) != partitions:
        raise ValueError("assignment must cover every partition on the given machines")
    over = sum(max(0, a - profile.task_capacity) for a in assignment)
    return SkewCheck(over == 0, over, assignment)
