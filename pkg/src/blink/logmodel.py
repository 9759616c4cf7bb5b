"""Sample-run log schema, parser, writer and feature extraction.

A log is UTF-8 text with one JSON object per line. Every object carries an
``event`` key naming one of the kinds below; unknown kinds are skipped.

    run_start          app_id, data_scale, input_bytes, block_count, machines
    dataset_cached     dataset_id, partition_id, size_bytes
    partition_evicted  dataset_id, partition_id
    stage_completed    stage_id, peak_execution_memory_bytes
    task_end           machine_id
    run_end            wall_time_seconds
"""

from __future__ import annotations

import io
import json
import logging
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

from .errors import InconsistentLog, MalformedLog

logger = logging.getLogger(__name__)

FULL_SCALE = 1000.0

_REQUIRED = {
    "run_start": ("app_id", "data_scale", "input_bytes", "block_count", "machines"),
    "dataset_cached": ("dataset_id", "partition_id", "size_bytes"),
    "partition_evicted": ("dataset_id", "partition_id"),
    "stage_completed": ("stage_id", "peak_execution_memory_bytes"),
    "task_end": ("machine_id",),
    "run_end": ("wall_time_seconds",),
}


@dataclass(frozen=True)
class CachedDatasetRecord:
    dataset_id: str
    total_size: int
    partition_count: int
    evicted_partitions: int = 0

    def __post_init__(self):
        if self.total_size < 0:
            raise InconsistentLog(f"dataset {self.dataset_id!r}: negative size")
        if self.partition_count < 1:
            raise InconsistentLog(f"dataset {self.dataset_id!r}: no partitions")
        if not 0 <= self.evicted_partitions <= self.partition_count:
            raise InconsistentLog(
                f"dataset {self.dataset_id!r}: {self.evicted_partitions} evicted "
                f"partitions out of {self.partition_count}"
            )


@dataclass(frozen=True)
class SampleRunLog:
    app_id: str
    data_scale: float
    input_bytes: int
    block_count: int
    machines: int
    cached_datasets: tuple[CachedDatasetRecord, ...]
    peak_execution_memory: int
    task_placements: dict[str, int]
    wall_time: float
    # events of unknown kind skipped while parsing; not part of equality
    skipped_events: int = field(default=0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "cached_datasets", tuple(self.cached_datasets))
        if not self.data_scale > 0:
            raise InconsistentLog(f"data_scale must be positive, got {self.data_scale}")
        if self.block_count < 1:
            raise InconsistentLog(f"block_count must be >= 1, got {self.block_count}")
        if self.machines < 1:
            raise InconsistentLog(f"machines must be >= 1, got {self.machines}")
        if self.input_bytes < 0 or self.peak_execution_memory < 0:
            raise InconsistentLog("byte counts must be non-negative")
        ids = [d.dataset_id for d in self.cached_datasets]
        if len(set(ids)) != len(ids):
            raise InconsistentLog("duplicate cached dataset ids")

    @property
    def eviction_occurred(self) -> bool:
        return any(d.evicted_partitions > 0 for d in self.cached_datasets)


@dataclass(frozen=True)
class RunFeatures:
    data_scale: float
    per_dataset_size: dict[str, int]
    execution_memory: int
    eviction_occurred: bool


def _check_int(value, name: str, lineno: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise MalformedLog(f"{name} must be an integer, got {value!r}", lineno)
    return value


def _check_real(value, name: str, lineno: int) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedLog(f"{name} must be a number, got {value!r}", lineno)
    return float(value)


def _iter_lines(source) -> Iterable[str]:
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8"))
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return io.StringIO(data)
    if isinstance(source, (str, os.PathLike)):
        return io.StringIO(Path(source).read_text(encoding="utf-8"))
    raise TypeError(f"cannot read a log from {type(source).__name__}")


def parse_log(source: str | os.PathLike | bytes | IO) -> SampleRunLog:
    """Parse a log from a path, raw bytes or an open stream.

    Raises MalformedLog for syntax or missing fields (with the 1-based line
    number) and InconsistentLog when the events contradict each other.
    """
    run_start = None
    wall_time = None
    peak = 0
    sizes: dict[str, dict[int, int]] = {}
    evicted: dict[str, set[int]] = {}
    placements: Counter[str] = Counter()
    skipped = 0

    for lineno, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            event = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedLog(f"invalid JSON: {exc.msg}", lineno) from None
        if not isinstance(event, dict) or "event" not in event:
            raise MalformedLog("expected an object with an 'event' key", lineno)
        kind = event["event"]
        if kind not in _REQUIRED:
            skipped += 1
            continue
        missing = [k for k in _REQUIRED[kind] if k not in event]
        if missing:
            raise MalformedLog(f"{kind} missing field(s): {', '.join(missing)}", lineno)

        if kind == "run_start":
            if run_start is not None:
                raise MalformedLog("duplicate run_start", lineno)
            run_start = {
                "app_id": str(event["app_id"]),
                "data_scale": _check_real(event["data_scale"], "data_scale", lineno),
                "input_bytes": _check_int(event["input_bytes"], "input_bytes", lineno),
                "block_count": _check_int(event["block_count"], "block_count", lineno),
                "machines": _check_int(event["machines"], "machines", lineno),
            }
        elif kind == "dataset_cached":
            ds = str(event["dataset_id"])
            pid = _check_int(event["partition_id"], "partition_id", lineno)
            size = _check_int(event["size_bytes"], "size_bytes", lineno)
            if size < 0:
                raise InconsistentLog(f"line {lineno}: negative partition size")
            parts = sizes.setdefault(ds, {})
            if pid in parts:
                raise InconsistentLog(f"line {lineno}: partition {pid} of {ds!r} cached twice")
            parts[pid] = size
        elif kind == "partition_evicted":
            ds = str(event["dataset_id"])
            pid = _check_int(event["partition_id"], "partition_id", lineno)
            evicted.setdefault(ds, set()).add(pid)
        elif kind == "stage_completed":
            mem = _check_int(
                event["peak_execution_memory_bytes"], "peak_execution_memory_bytes", lineno
            )
            if mem < 0:
                raise InconsistentLog(f"line {lineno}: negative execution memory")
            peak = max(peak, mem)
        elif kind == "task_end":
            placements[str(event["machine_id"])] += 1
        elif kind == "run_end":
            wall_time = _check_real(event["wall_time_seconds"], "wall_time_seconds", lineno)

    if run_start is None:
        raise MalformedLog("no run_start event")
    if wall_time is None:
        raise MalformedLog("no run_end event")
    if skipped:
        logger.warning("skipped %d event(s) of unknown kind", skipped)

    unknown = set(evicted) - set(sizes)
    if unknown:
        raise InconsistentLog(f"evictions reported for uncached dataset(s): {sorted(unknown)}")
    records = []
    for ds, parts in sizes.items():
        gone = evicted.get(ds, set())
        # raises InconsistentLog when more partitions are evicted than exist
        records.append(
            CachedDatasetRecord(ds, sum(parts.values()), len(parts), len(gone))
        )
    return SampleRunLog(
        cached_datasets=tuple(records),
        peak_execution_memory=peak,
        task_placements=dict(sorted(placements.items())),
        wall_time=wall_time,
        skipped_events=skipped,
        **run_start,
    )


def _split(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def log_events(log: SampleRunLog, stage_peaks: Iterable[int] | None = None) -> list[dict]:
    """Events describing ``log`` in canonical order.

    Dataset sizes are split as evenly as integer bytes allow. ``stage_peaks``
    lets a caller report several stages; their maximum must equal the run peak.
    """
    events = [
        {
            "event": "run_start",
            "app_id": log.app_id,
            "data_scale": log.data_scale,
            "input_bytes": log.input_bytes,
            "block_count": log.block_count,
            "machines": log.machines,
        }
    ]
    for rec in log.cached_datasets:
        for pid, size in enumerate(_split(rec.total_size, rec.partition_count)):
            events.append(
                {"event": "dataset_cached", "dataset_id": rec.dataset_id,
                 "partition_id": pid, "size_bytes": size}
            )
    for rec in log.cached_datasets:
        for pid in range(rec.evicted_partitions):
            events.append(
                {"event": "partition_evicted", "dataset_id": rec.dataset_id, "partition_id": pid}
            )
    peaks = list(stage_peaks) if stage_peaks is not None else [log.peak_execution_memory]
    if peaks and max(peaks) != log.peak_execution_memory:
        raise ValueError("stage peaks disagree with the run peak")
    for sid, mem in enumerate(peaks):
        events.append(
            {"event": "stage_completed", "stage_id": sid, "peak_execution_memory_bytes": mem}
        )
    for machine, count in sorted(log.task_placements.items()):
        events.extend({"event": "task_end", "machine_id": machine} for _ in range(count))
    events.append({"event": "run_end", "wall_time_seconds": log.wall_time})
    return events


def dumps_log(log: SampleRunLog, stage_peaks: Iterable[int] | None = None) -> str:
    lines = (json.dumps(e, separators=(",", ":")) for e in log_events(log, stage_peaks))
    return "\n".join(lines) + "\n"


def write_log(log: SampleRunLog, path: str | os.PathLike, stage_peaks=None) -> None:
    Path(path).write_text(dumps_log(log, stage_peaks), encoding="utf-8")


def extract_features(log: SampleRunLog) -> RunFeatures:
    return RunFeatures(
        data_scale=log.data_scale,
        per_dataset_size={d.dataset_id: d.total_size for d in log.cached_datasets},
        execution_memory=log.peak_execution_memory,
        eviction_occurred=log.eviction_occurred,
    )
