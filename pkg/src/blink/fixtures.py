"""Reference workloads used by the tests, the acceptance suite and the CLI examples."""

from __future__ import annotations

from .predictor import LinearModel
from .selector import MachineProfile
from .simulator import CostParams, DatasetNode, Placement, WorkloadSpec

GB = 10**9


def lr_dag() -> WorkloadSpec:
    """Logistic-regression style merged DAG with eight actions.

    D0 and D1 feed every action, D2 feeds six of them and D11 four. The
    topology below D2 is illustrative; only those counts are pinned.
    """

    def node(name, *parents):
        return DatasetNode(name, tuple(parents))

    datasets = (
        node("D0"),
        node("D1", "D0"),
        node("D2", "D1"),
        node("D3", "D2"),
        node("D4", "D2"),
        node("D11", "D2"),
        node("D12", "D11"),
        node("D13", "D11"),
        node("D14", "D11"),
        node("D15", "D11"),
        node("D24", "D1"),
    )
    actions = ("D1", "D3", "D4", "D12", "D13", "D14", "D15", "D24")
    return WorkloadSpec(datasets, actions, app_id="lr")


def svm_like() -> tuple[WorkloadSpec, MachineProfile]:
    """Iterative workload whose cache fills exactly seven machines at full scale.

    70 equal partitions of 0.6 GB; with 14 GB of execution memory each of 7
    machines keeps 6 GB for caching.
    """
    points = DatasetNode("D1", ("D0",), True, LinearModel(0.0, 42e6), 70)
    spec = WorkloadSpec(
        datasets=(
            DatasetNode("D0"),
            points,
            DatasetNode("D2", ("D1",)),
        ),
        actions=("D2",),
        iterations=20,
        cost_params=CostParams(
            serial_time=60.0, parallel_work=400.0, overhead_coeff=1.0, task_time_cached=2.0
        ),
        scale=1000.0,
        exec_fn=LinearModel(0.0, 14e6),
        app_id="svm-like",
        input_bytes_full=40 * GB,
        blocks_full=2000,
    )
    return spec, MachineProfile(8 * GB, 4 * GB)


# per-machine task counts observed for K-means on 7 machines; machines 3, 4, 6
# and 7 carry 2, 2, 1 and 2 tasks beyond the 14 that fit
KMEANS_ASSIGNMENT = (13, 12, 16, 16, 12, 15, 16)


def kmeans_skew() -> tuple[WorkloadSpec, MachineProfile, Placement]:
    part = 10**8
    spec = WorkloadSpec(
        datasets=(
            DatasetNode("D0"),
            DatasetNode("D1", ("D0",), True, LinearModel(0.0, 100 * part / 1000), 100),
            DatasetNode("D2", ("D1",)),
        ),
        actions=("D2",),
        iterations=10,
        cost_params=CostParams(serial_time=10.0, parallel_work=50.0, task_time_cached=1.0),
        app_id="kmeans-like",
    )
    profile = MachineProfile(14 * part, 7 * part, task_capacity=14)
    return spec, profile, Placement.skewed(counts=KMEANS_ASSIGNMENT)
