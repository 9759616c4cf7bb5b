"""Exit criteria. Each test records one PASS/FAIL line, shown after the run."""

import random
import time
from contextlib import contextmanager

from scipy.optimize import nnls
import numpy as np

from blink.cli import recommend_report
from blink.fixtures import KMEANS_ASSIGNMENT, kmeans_skew, lr_dag, svm_like
from blink.logmodel import extract_features
from blink.predictor import ModelSet, fit_models, fit_nnls, prediction_error
from blink.sampler import Method, plan_samples
from blink.selector import MachineProfile, cluster_bounds, select_cluster_size, skew_adjusted_check
from blink.simulator import Placement, computation_counts, recompute_counts, run, sweep
from blink.workloadgen import GenConfig, emit_sample_log, generate_spec

from conftest import ACCEPTANCE

GiB = 1 << 30
PROFILE = MachineProfile(12 * GiB, 8 * GiB)


@contextmanager
def criterion(number: int, title: str, budget_s: float):
    start = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        ACCEPTANCE[number] = f"[{number}] FAIL  {title}: {exc!r}"[:200]
        raise
    elapsed = time.perf_counter() - start
    ok = elapsed < budget_s
    ACCEPTANCE[number] = (f"[{number}] {'PASS' if ok else 'FAIL'}  {title} "
                          f"({elapsed:.3f}s, budget {budget_s}s)")
    assert ok, f"criterion {number} took {elapsed:.2f}s (budget {budget_s}s)"


def fitted(spec, noise=0.0, seed=0) -> ModelSet:
    logs = [emit_sample_log(spec, s, noise_seed=seed, noise_relative=noise) for s in (1, 2, 3)]
    models = fit_models(extract_features(lg) for lg in logs)
    models.sample_runs_cost = sum(lg.wall_time * lg.machines for lg in logs)
    return models


def synthetic(seed: int, **kwargs):
    rng = random.Random(seed)
    cfg = GenConfig(seed=seed, cached_count=rng.randint(0, 3),
                    slope_range=(4 << 20, 16 << 20), **kwargs)
    return generate_spec(cfg)


def test_1_lr_dag_counts():
    spec = lr_dag()
    with criterion(1, "LR merged DAG: computed 8/6, recomputed 7/7/5/3", 0.001):
        counts = computation_counts(spec)
        re = recompute_counts(spec, cached_set=())
    assert (counts["D1"], counts["D2"]) == (8, 6)
    assert (re["D0"], re["D1"], re["D2"], re["D11"]) == (7, 7, 5, 3)


def test_2_kmeans_skew():
    with criterion(2, "K-means skew: 7 evictions in check and simulator", 1.0):
        spec, profile, placement = kmeans_skew()
        check = skew_adjusted_check(7, 100, profile, KMEANS_ASSIGNMENT)
        report = run(spec, 7, profile, placement)
        assert check.predicted_evictions == 7
        assert report.evicted_partitions == 7


def test_3_oracle_equivalence():
    with criterion(3, "selector == minimal eviction-free n over 200 workloads", 30.0):
        balanced_hits, skew_mismatch = 0, 0
        for seed in range(200):
            spec = synthetic(seed)
            models = fitted(spec)
            rec = select_cluster_size(models.datasets, models.execution_memory, 1000, PROFILE)
            top = max(rec.machines_max, rec.machines) + 1
            result = sweep(spec, range(1, top + 1), PROFILE)
            for r in result.reports:
                assert r.total_cost == r.machines * r.total_time
            balanced_hits += result.min_eviction_free == rec.machines

            skewed = sweep(spec, range(1, top + 4), PROFILE, Placement.skewed(seed))
            oracle = skewed.min_eviction_free or top + 4
            assert rec.machines <= oracle, "skew can only make the selector optimistic"
            skew_mismatch += oracle != rec.machines
        assert balanced_hits == 200, f"{balanced_hits}/200"
    print(f"skewed placement: {skew_mismatch}/200 under-provisioned by the selector")


def test_4_nnls():
    with criterion(4, "NNLS matches brute-force oracle on 1000 fits", 5.0):
        rng = random.Random(4)
        for _ in range(1000):
            pts = [(x, rng.uniform(0, 1e9)) for x in (1.0, 2.0, 3.0)]
            m = fit_nnls(pts)
            # oracle: each constraint case solved separately, best feasible kept
            A = np.array([[1.0, x] for x, _ in pts])
            y = np.array([v for _, v in pts])
            ref_coef, _ = nnls(A, y)
            ref = float(np.sum((A @ ref_coef - y) ** 2))
            got = float(np.sum((A @ np.array([m.intercept, m.slope]) - y) ** 2))
            assert got <= ref + 1e-9 * (1 + ref)
        m = fit_nnls([(1, 10), (2, 6), (3, 2)])
        assert (m.intercept, m.slope) == (6.0, 0.0)


def test_5_pipeline_exactness():
    with criterion(5, "pipeline: exact at 1000 noiseless, >=95% within 10% at 5% noise", 30.0):
        for seed in range(100):
            spec = generate_spec(GenConfig(seed=seed, cached_count=1 + seed % 3))
            models = fitted(spec)
            for d in spec.datasets:
                if d.cached:
                    assert prediction_error(models.datasets[d.id].predict(1000),
                                            d.size_at(1000)) == 0.0
        good = 0
        for seed in range(100):
            spec = generate_spec(GenConfig(seed=seed, cached_count=1 + seed % 3))
            models = fitted(spec, noise=0.05, seed=seed)
            predicted = sum(m.predict(1000) for m in models.datasets.values())
            good += prediction_error(predicted, spec.total_cached()) <= 0.10
        assert good >= 95, f"{good}/100"


def test_6_cost_curve_shape():
    with criterion(6, "SVM-like sweep: unique cost minimum at first eviction-free n", 5.0):
        spec, profile = svm_like()
        result = sweep(spec, range(1, 13), profile)
        costs = [r.total_cost for r in result.reports]
        c = result.optimal
        assert costs.count(min(costs)) == 1
        assert c == result.min_eviction_free
        assert costs[0] > costs[c - 1] and costs[-1] > costs[c - 1]
        assert set(result.labels[: c - 1]) == {"A"} and set(result.labels[c:]) == {"B"}


def max_eviction_free_scale(spec, n, profile):
    """Brute force with the simulator over integer scales (galloping, then unit steps)."""
    def clean(s):
        return run(spec.at_scale(s), n, profile).evicted_partitions == 0

    s, step = 0, 64
    while clean(s + step):
        s += step
    while clean(s + 1):
        s += 1
    return s


def test_7_cluster_bounds():
    with criterion(7, "cluster bounds within +-5% of simulator, exact duality", 30.0):
        checked = 0
        for seed in range(100):
            spec = synthetic(1000 + seed, iterations=1)
            if not spec.cached_ids:
                spec = generate_spec(GenConfig(seed=1000 + seed, cached_count=2, iterations=1))
            models = fitted(spec)
            n = select_cluster_size(models.datasets, models.execution_memory, 1000, PROFILE).machines
            g = 10.0
            bound = cluster_bounds(models.datasets, models.execution_memory, n, PROFILE, g)
            truth = max_eviction_free_scale(spec, n, PROFILE)
            assert abs(bound - truth) <= 0.05 * truth, (seed, bound, truth)
            assert select_cluster_size(models.datasets, models.execution_memory, bound,
                                       PROFILE).machines <= n
            assert select_cluster_size(models.datasets, models.execution_memory, bound + g,
                                       PROFILE).machines > n
            checked += 1
        assert checked == 100


def test_8_sample_plan():
    with criterion(8, "sample plans: 1 TB/64 MB -> 16/32/48 BLOCK_N; 100 blocks -> BLOCK_S", 1.0):
        plan = plan_samples(1 << 40, 64 << 20)
        assert plan.method is Method.BLOCK_N and plan.per_scale_blocks == (16, 32, 48)
        total = round(30.6 * (1 << 20))
        plan = plan_samples(total, -(-total // 100))
        assert plan.total_blocks == 100 and plan.method is Method.BLOCK_S


def test_9_accounting_identity():
    with criterion(9, "cost = machines x time; total = sample runs + actual run", 5.0):
        spec, profile = svm_like()
        for r in sweep(spec, range(1, 13), profile).reports:
            assert r.total_cost == r.machines * r.total_time
        for seed in range(20):
            spec = synthetic(seed)
            models = fitted(spec)
            report = recommend_report(models, PROFILE, 1000, spec)
            cost = report["cost"]
            actual = report["actual_run"]
            assert actual["total_cost"] == actual["machines"] * actual["total_time"]
            assert cost["sample_runs_machine_s"] == models.sample_runs_cost > 0
            assert cost["total_machine_s"] == (cost["sample_runs_machine_s"]
                                               + cost["actual_run_machine_s"])
