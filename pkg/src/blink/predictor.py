"""Linear size and execution-memory models fitted with non-negative coefficients.

Both the cached-dataset size and the total execution memory are modeled as
``intercept + slope * scale`` with ``intercept, slope >= 0``. Sample runs use
scales 1, 2, 3 and the full input is scale 1000.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DegenerateInput, ZeroActual

SCALE_CONVENTION = "full=1000"

Point = tuple[float, float]


@dataclass(frozen=True)
class LinearModel:
    intercept: float
    slope: float
    loo_rmse: float | None = None
    loo_relative_error: float | None = None

    def __post_init__(self):
        if self.intercept < 0 or self.slope < 0:
            raise ValueError("model coefficients must be non-negative")

    def predict(self, scale: float) -> int:
        return predict(self, scale)

    def value(self, scale: float) -> float:
        """Unrounded model value."""
        return self.intercept + self.slope * scale

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "LinearModel":
        return cls(
            float(data["intercept"]),
            float(data["slope"]),
            data.get("loo_rmse"),
            data.get("loo_relative_error"),
        )


def _check_points(points: Iterable[Point], minimum: int) -> list[tuple[float, float]]:
    pts = [(float(x), float(y)) for x, y in points]
    if len({x for x, _ in pts}) < 2:
        raise DegenerateInput("need at least two distinct scales")
    if len({x for x, _ in pts}) != len(pts):
        raise DegenerateInput("scales must be distinct")
    if len(pts) < minimum:
        raise DegenerateInput(f"need at least {minimum} points, got {len(pts)}")
    if any(y < 0 for _, y in pts):
        raise DegenerateInput("labels must be non-negative")
    return pts


def _sse(pts, a: float, b: float) -> float:
    return math.fsum((y - a - b * x) ** 2 for x, y in pts)


def _solve(pts: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Exact NNLS for two parameters by enumerating the active sets."""
    n = len(pts)
    mx = math.fsum(x for x, _ in pts) / n
    my = math.fsum(y for _, y in pts) / n
    sxx = math.fsum((x - mx) ** 2 for x, _ in pts)
    sxy = math.fsum((x - mx) * (y - my) for x, y in pts)

    candidates = [(0.0, 0.0), (max(my, 0.0), 0.0)]
    x2 = math.fsum(x * x for x, _ in pts)
    if x2 > 0:
        candidates.append((0.0, max(math.fsum(x * y for x, y in pts) / x2, 0.0)))
    if sxx > 0:
        b = sxy / sxx
        a = my - b * mx
        if a >= 0 and b >= 0:
            candidates.append((a, b))
    return min(candidates, key=lambda c: _sse(pts, *c))


def fit_nnls(points: Iterable[Point]) -> LinearModel:
    """Least-squares line with non-negative intercept and slope.

    With three or more points the leave-one-out error is attached.
    """
    pts = _check_points(points, 2)
    a, b = _solve(pts)
    if len(pts) >= 3:
        rmse, rel = loo_cv(pts)
        return LinearModel(a, b, rmse, rel)
    return LinearModel(a, b)


def loo_cv(points: Iterable[Point]) -> tuple[float, float]:
    """Leave-one-out RMSE and RMSE relative to the mean label."""
    pts = _check_points(points, 3)
    errors = []
    for i, (x, y) in enumerate(pts):
        a, b = _solve(pts[:i] + pts[i + 1:])
        errors.append(a + b * x - y)
    rmse = math.sqrt(math.fsum(e * e for e in errors) / len(errors))
    mean = math.fsum(y for _, y in pts) / len(pts)
    return rmse, (rmse / mean if mean > 0 else 0.0)


def predict(model: LinearModel, scale: float) -> int:
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    return math.floor(model.value(scale) + 0.5)


def prediction_error(predicted: float, actual: float) -> float:
    if actual <= 0:
        raise ZeroActual("actual value must be positive")
    return abs(predicted - actual) / actual


@dataclass
class ModelSet:
    """Per-dataset size models plus the execution-memory model.

    ``sample_runs_cost`` carries the machine-seconds spent on the sample runs
    the models were fitted from, so later reports can add it to the cost of
    the actual run.
    """

    datasets: dict[str, LinearModel]
    execution_memory: LinearModel | None
    sample_runs_cost: float = 0.0
    single_machine: bool = False

    def to_dict(self) -> dict:
        return {
            "datasets": {k: m.to_dict() for k, m in sorted(self.datasets.items())},
            "execution_memory": (
                self.execution_memory.to_dict() if self.execution_memory else None
            ),
            "sample_runs_cost": self.sample_runs_cost,
            "single_machine": self.single_machine,
            "scale_convention": SCALE_CONVENTION,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelSet":
        if data.get("scale_convention", SCALE_CONVENTION) != SCALE_CONVENTION:
            raise DegenerateInput(f"unsupported scale convention {data['scale_convention']!r}")
        exec_model = data.get("execution_memory")
        return cls(
            datasets={k: LinearModel.from_dict(v) for k, v in data.get("datasets", {}).items()},
            execution_memory=LinearModel.from_dict(exec_model) if exec_model else None,
            sample_runs_cost=float(data.get("sample_runs_cost", 0.0)),
            single_machine=bool(data.get("single_machine", False)),
        )

    def dump(self, path: str | os.PathLike) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ModelSet":
        return cls.from_dict(json.loads(Path(path).read_text()))

    @property
    def worst_relative_error(self) -> float:
        errs = [m.loo_relative_error for m in self.datasets.values()]
        if self.execution_memory is not None:
            errs.append(self.execution_memory.loo_relative_error)
        return max((e for e in errs if e is not None), default=0.0)


def fit_models(features) -> ModelSet:
    """Fit one size model per cached dataset and one execution-memory model.

    ``features`` is a sequence of RunFeatures. A dataset missing from some runs
    is treated as size 0 there.
    """
    features = list(features)
    ids = sorted({d for f in features for d in f.per_dataset_size})
    datasets = {
        d: fit_nnls([(f.data_scale, f.per_dataset_size.get(d, 0)) for f in features])
        for d in ids
    }
    exec_model = fit_nnls([(f.data_scale, f.execution_memory) for f in features])
    return ModelSet(datasets, exec_model, single_machine=not ids)
