import random

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from blink.errors import InfeasibleAtAnyScale, InvalidProfile, ModelMissing, Unbounded
from blink.predictor import LinearModel
from blink.selector import (
    MachineProfile,
    Rationale,
    cluster_bounds,
    fits,
    machine_execution_memory,
    machines_bounds,
    select_cluster_size,
    skew_adjusted_check,
)

from conftest import GB, constant, per_scale


def test_profile_validation():
    with pytest.raises(InvalidProfile):
        MachineProfile(10, 0)
    with pytest.raises(InvalidProfile):
        MachineProfile(10, 11)
    p = MachineProfile(10 * GB, 5 * GB, 14)
    assert MachineProfile.from_dict(p.to_dict()) == p


@pytest.mark.parametrize(
    "total, expected",
    [(40 * GB, (4, 8)), (0, (1, 1)), (41 * GB, (5, 9))],
)
def test_machines_bounds(profile_10_5, total, expected):
    assert machines_bounds(total, profile_10_5) == expected


@pytest.mark.parametrize("n, expected", [(4, 3 * GB), (2, 5 * GB)])
def test_machine_execution_memory(profile_10_5, n, expected):
    assert machine_execution_memory(12 * GB, n, profile_10_5) == expected


def test_machine_execution_memory_zero(profile_10_5):
    assert machine_execution_memory(0, 3, profile_10_5) == 0


def test_select_40_12(profile_10_5):
    rec = select_cluster_size({"d": per_scale(40 * GB)}, per_scale(12 * GB), 1000, profile_10_5)
    assert rec.machines == 6
    assert (rec.machines_min, rec.machines_max) == (4, 8)
    assert rec.rationale is Rationale.FITS


def test_select_no_cache(profile_10_5):
    rec = select_cluster_size({}, per_scale(12 * GB), 1000, profile_10_5)
    assert rec.machines == 1 and rec.rationale is Rationale.NO_CACHED_DATA


def test_select_small(profile_10_5):
    rec = select_cluster_size({"d": constant(4 * GB)}, constant(1 * GB), 1000, profile_10_5)
    assert rec.machines == 1


def test_select_exact_fit_accepted(profile_10_5):
    # 48 GB on 6 machines with 2 GB execution each is an exact fit
    rec = select_cluster_size({"d": constant(48 * GB)}, constant(12 * GB), 1000, profile_10_5)
    assert rec.machines == 6


def test_select_capped_at_max(profile_10_5):
    rec = select_cluster_size({"d": constant(40 * GB)}, constant(100 * GB), 1000, profile_10_5)
    assert rec.machines == rec.machines_max == 8
    assert rec.rationale is Rationale.CAPPED_AT_MAX


def test_select_needs_exec_model(profile_10_5):
    with pytest.raises(ModelMissing):
        select_cluster_size({"d": constant(1)}, None, 1000, profile_10_5)


def brute_force_min(total, exec_total, profile):
    """Smallest n whose per-machine cache share holds the data, by direct scan."""
    for n in range(1, 10**6):
        per_machine_cache = profile.unified_memory - min(profile.execution_headroom, exec_total / n)
        if total <= per_machine_cache * n + 1e-6:
            return n


def test_select_matches_scan_random():
    rng = random.Random(7)
    for _ in range(300):
        M = rng.randint(2, 64) * GB
        p = MachineProfile(M, rng.randint(1, M // GB) * GB)
        total, ex = rng.randint(1, 500) * GB, rng.randint(0, 300) * GB
        rec = select_cluster_size({"d": constant(total)}, constant(ex), 1, p)
        assert rec.machines == brute_force_min(total, ex, p)


profiles = st.tuples(st.integers(1, 64), st.integers(1, 64)).map(
    lambda t: MachineProfile(max(t) * GB, min(t) * GB)
)
models = st.tuples(st.integers(0, 100 * GB), st.integers(0, 10**8)).map(
    lambda t: LinearModel(float(t[0]), float(t[1]))
)


@given(st.lists(models, min_size=1, max_size=3), models, profiles, st.floats(1, 3000))
def test_minimality_and_range(size_models, exec_model, profile, scale):
    sm = {f"d{i}": m for i, m in enumerate(size_models)}
    rec = select_cluster_size(sm, exec_model, scale, profile)
    if rec.rationale is Rationale.NO_CACHED_DATA:
        return
    assert rec.machines_min <= rec.machines <= rec.machines_max
    T, E = rec.predicted_total_cached, rec.predicted_execution_memory
    if rec.machines - 1 >= rec.machines_min:
        assert not fits(T, E, rec.machines - 1, profile)
    for m in range(rec.machines, rec.machines_max + 3):
        assert fits(T, E, m, profile)


@given(st.lists(models, min_size=1, max_size=3), models, profiles,
       st.floats(1, 3000), st.floats(1, 3000))
def test_monotone_in_scale(size_models, exec_model, profile, s1, s2):
    sm = {f"d{i}": m for i, m in enumerate(size_models)}
    lo, hi = sorted((s1, s2))
    assert (select_cluster_size(sm, exec_model, lo, profile).machines
            <= select_cluster_size(sm, exec_model, hi, profile).machines)


def test_cluster_bounds_example(profile_10_5):
    s = cluster_bounds({"d": LinearModel(0, 0.01 * GB)}, LinearModel(0, 0.004 * GB), 2,
                       profile_10_5, granularity=1)
    assert s == 1428
    # the execution clamp (5 GB per machine) is not reached at that scale
    assert 0.004 * GB * 1428 / 2 < 5 * GB


def test_cluster_bounds_unbounded(profile_10_5):
    with pytest.raises(Unbounded):
        cluster_bounds({"d": constant(GB)}, constant(GB), 2, profile_10_5)


def test_cluster_bounds_infeasible(profile_10_5):
    with pytest.raises(InfeasibleAtAnyScale):
        cluster_bounds({"d": LinearModel(21 * GB, 1)}, constant(0), 2, profile_10_5)


def test_cluster_bounds_exec_growth_only(profile_10_5):
    # cache is constant; only execution memory grows until R is all that's left
    s = cluster_bounds({"d": constant(15 * GB)}, LinearModel(0, 0.01 * GB), 2,
                       profile_10_5, granularity=1)
    assert s == 500


@given(st.lists(models, min_size=1, max_size=3), models, profiles,
       st.integers(1, 12), st.sampled_from([1.0, 10.0, 2.5]))
def test_bounds_select_duality(size_models, exec_model, profile, n, g):
    sm = {f"d{i}": m for i, m in enumerate(size_models)}
    try:
        s = cluster_bounds(sm, exec_model, n, profile, g)
    except (Unbounded, InfeasibleAtAnyScale):
        return
    assume(s > 0)
    assert select_cluster_size(sm, exec_model, s, profile).machines <= n
    assert select_cluster_size(sm, exec_model, s + g, profile).machines > n


def test_skew_observed_kmeans_assignment():
    p = MachineProfile(14, 7, task_capacity=14)
    check = skew_adjusted_check(7, 100, p, [16, 16, 16, 15, 13, 12, 12])
    assert check.predicted_evictions == 7 and not check.ok


def test_skew_balanced():
    p = MachineProfile(14, 7, task_capacity=14)
    check = skew_adjusted_check(8, 100, p)
    assert check.ok and max(check.assignment) == 13


def test_skew_random_matches_recount():
    rng = random.Random(3)
    for _ in range(200):
        machines, cap = rng.randint(1, 12), rng.randint(1, 20)
        parts = rng.randint(1, 300)
        owners = [rng.randrange(machines) for _ in range(parts)]
        counts = [owners.count(m) for m in range(machines)]
        expected = 0
        for m in range(machines):
            held = 0
            for o in owners:
                if o == m:
                    held += 1
                    if held > cap:
                        expected += 1
        check = skew_adjusted_check(machines, parts, MachineProfile(10, 5, cap), counts)
        assert check.predicted_evictions == expected


def test_skew_needs_capacity():
    with pytest.raises(InvalidProfile):
        skew_adjusted_check(2, 10, MachineProfile(10, 5))
