"""Planning and monitoring of the lightweight sample runs."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

from .errors import DataError, EmptyInput, InvalidScale, ThresholdInvalid
from .logmodel import SampleRunLog

DEFAULT_SCALES = (0.001, 0.002, 0.003)
DEFAULT_THRESHOLD = 0.30
RERUN_FACTOR = 0.5
MAX_RERUNS = 3


class Method(str, enum.Enum):
    BLOCK_N = "BLOCK_N"  # pick a subset of full-size blocks
    BLOCK_S = "BLOCK_S"  # keep the block count, shrink each block


class Decision(str, enum.Enum):
    CONTINUE = "CONTINUE"
    RECOMMEND_SINGLE_MACHINE = "RECOMMEND_SINGLE_MACHINE"
    RERUN_LOWER_SCALE = "RERUN_LOWER_SCALE"


@dataclass(frozen=True)
class SamplePlan:
    method: Method
    scales: tuple[float, ...]
    total_bytes: int
    total_blocks: int
    per_scale_blocks: tuple[int, ...] = ()
    per_scale_block_size: tuple[int, ...] = ()
    machines: int = 1
    saturated: bool = False

    def to_dict(self) -> dict:
        out = {
            "method": self.method.value,
            "scales": list(self.scales),
            "total_bytes": self.total_bytes,
            "total_blocks": self.total_blocks,
            "machines": self.machines,
        }
        if self.method is Method.BLOCK_N:
            out["per_scale_blocks"] = list(self.per_scale_blocks)
        else:
            out["per_scale_block_size"] = list(self.per_scale_block_size)
        if self.saturated:
            out["saturated"] = True
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SamplePlan":
        return cls(
            method=Method(data["method"]),
            scales=tuple(data["scales"]),
            total_bytes=data["total_bytes"],
            total_blocks=data["total_blocks"],
            per_scale_blocks=tuple(data.get("per_scale_blocks", ())),
            per_scale_block_size=tuple(data.get("per_scale_block_size", ())),
            machines=data.get("machines", 1),
            saturated=data.get("saturated", False),
        )


@dataclass(frozen=True)
class MonitorDecision:
    kind: Decision
    scales: tuple[float, ...] | None = field(default=None)


def _validate_scales(scales) -> tuple[float, ...]:
    scales = tuple(float(s) for s in scales)
    if not scales:
        raise InvalidScale("at least one scale is required")
    for s in scales:
        if not 0 < s < 1:
            raise InvalidScale(f"scale {s} outside (0, 1)")
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise InvalidScale("scales must be strictly increasing")
    return scales


def _block_counts(scales: tuple[float, ...], total_blocks: int) -> list[int]:
    # Anchor on the smallest scale and grow the others by their exact ratio,
    # so task counts stay proportional to data scale (16/32/48 for 16Ki blocks).
    first = round(scales[0] * total_blocks)
    return [round(first * s / scales[0]) for s in scales]


def plan_samples(
    total_bytes: int, block_size: int, scales=DEFAULT_SCALES
) -> SamplePlan:
    if total_bytes <= 0:
        raise EmptyInput("input is empty")
    if block_size <= 0:
        raise InvalidScale("block size must be positive")
    scales = _validate_scales(scales)
    total_blocks = math.ceil(total_bytes / block_size)

    counts = _block_counts(scales, total_blocks)
    if counts[0] >= 1 and len(set(counts)) == len(counts) and counts[-1] <= total_blocks:
        return SamplePlan(Method.BLOCK_N, scales, total_bytes, total_blocks,
                          per_scale_blocks=tuple(counts))
    sizes = tuple(max(1, round(s * total_bytes / total_blocks)) for s in scales)
    return SamplePlan(Method.BLOCK_S, scales, total_bytes, total_blocks,
                      per_scale_block_size=sizes)


def monitor_sample_run(
    log: SampleRunLog, scales=None, attempt: int = 0
) -> MonitorDecision:
    """Decide how to proceed after one sample run.

    ``scales`` is the current plan's scale list; when omitted the log's own
    scale is the only one shrunk. ``attempt`` counts reruns already made;
    evictions past MAX_RERUNS raise DataError.
    """
    if not log.cached_datasets:
        return MonitorDecision(Decision.RECOMMEND_SINGLE_MACHINE)
    if log.eviction_occurred:
        if attempt >= MAX_RERUNS:
            raise DataError(f"sample runs still evict after {attempt} reruns")
        current = tuple(scales) if scales is not None else (log.data_scale,)
        return MonitorDecision(
            Decision.RERUN_LOWER_SCALE, tuple(s * RERUN_FACTOR for s in current)
        )
    return MonitorDecision(Decision.CONTINUE)


def adaptive_extend(
    plan: SamplePlan,
    cv_relative_error: float,
    threshold: float = DEFAULT_THRESHOLD,
    max_runs: int = 10,
) -> SamplePlan:
    """Add sample scales along the plan's arithmetic progression.

    The plan is returned unchanged while the cross-validation error is within
    ``threshold``. Otherwise it is grown to ``max_runs`` scales; a plan already
    at that size comes back flagged ``saturated``.
    """
    if threshold <= 0:
        raise ThresholdInvalid(f"threshold must be positive, got {threshold}")
    if cv_relative_error < 0:
        raise ValueError("cross-validation error cannot be negative")
    if len(plan.scales) < 2:
        raise InvalidScale("adaptive extension needs at least two scales")
    if cv_relative_error <= threshold:
        return plan
    if len(plan.scales) >= max_runs:
        return replace(plan, saturated=True)

    step = plan.scales[1] - plan.scales[0]
    first = plan.scales[0]
    scales = list(plan.scales)
    while len(scales) < max_runs:
        nxt = round(first + step * len(scales), 12)
        if nxt >= 1:
            break
        scales.append(nxt)
    saturated = len(scales) < max_runs
    if plan.method is Method.BLOCK_N:
        return replace(plan, scales=tuple(scales), saturated=saturated,
                       per_scale_blocks=tuple(_block_counts(tuple(scales), plan.total_blocks)))
    sizes = tuple(max(1, round(s * plan.total_bytes / plan.total_blocks)) for s in scales)
    return replace(plan, scales=tuple(scales), saturated=saturated, per_scale_block_size=sizes)
