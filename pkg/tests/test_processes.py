import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from deldonsker import processes as P
from deldonsker.deletion import SELECTIONS, DeletionPlan, DeletionSchedule, make_overlapping_pair, make_plan
from deldonsker.errors import ConfigError, DomainError
from deldonsker.sampling import DistributionSpec, SampleSequence, SeededStream, draw_batch, draw_iid
from deldonsker.stats import increment_correlation

RAD = DistributionSpec("rademacher")
UNIT = DistributionSpec.unit_uniform()


def seq(values, spec=RAD):
    return SampleSequence(np.asarray(values, dtype=float), spec)


# --- brute-force reference evaluators ----------------------------------------

def brute_partial_sum(xi, sigma, n, grid, deleted=None, polygonal=False):
    out = []
    for g in range(grid + 1):
        t = g / grid
        m = (n * g) // grid
        drop = set() if deleted is None else set(deleted[g].tolist())
        s = sum(xi[i - 1] for i in range(1, m + 1) if i not in drop)
        if polygonal and m < n:
            s += (n * t - m) * xi[m]
        out.append(s / (sigma * math.sqrt(n)))
    return np.array(out)


def brute_empirical(xi, xs, drop, F, n):
    keep = [v for i, v in enumerate(xi, 1) if i not in drop]
    return np.array([sum((v <= x) - F(x) for v in keep) / n for x in xs])


# --- partial sums ---------------------------------------------------------------

def test_step_and_polygonal_examples():
    s = seq([1, -1, 1, 1])
    assert P.build_partial_sum(s, 4).at(1.0) == 1.0
    poly = P.build_partial_sum(s, 8, "polygonal")
    assert poly.values[3] == pytest.approx(0.25)
    assert poly.values[0] == 0.0 and poly.values[-1] == 1.0


def test_deleted_example():
    s = seq([1, -1, 1, 1])
    plan = DeletionPlan(4, 1, "prefix", (np.array([], dtype=np.int64), np.array([3])))
    assert P.build_deleted_partial_sum(s, plan).values[-1] == 0.5


@given(st.integers(1, 64), st.integers(1, 24), st.sampled_from(["step", "polygonal"]), st.integers(0, 2**32))
def test_empty_plan_is_bit_identical(n, grid, interp, seed):
    s = draw_iid(DistributionSpec("normal", 1.7), n, SeededStream(seed))
    a = P.build_partial_sum(s, grid, interp)
    b = P.build_deleted_partial_sum(s, DeletionPlan.empty(n, grid), interp)
    c = P.build_deleted_partial_sum(s, make_plan(DeletionSchedule.fixed(0), "suffix", n, grid, SeededStream(1)), interp)
    assert a.values.tobytes() == b.values.tobytes() == c.values.tobytes()


@given(st.integers(1, 64), st.integers(1, 24), st.sampled_from(SELECTIONS), st.integers(0, 12),
       st.sampled_from(["step", "polygonal"]), st.integers(0, 2**32))
def test_deleted_partial_sum_brute_force(n, grid, selection, k, interp, seed):
    spec = DistributionSpec("exponential_centered", 0.9)
    s = draw_iid(spec, n, SeededStream(seed, 1))
    plan = make_plan(DeletionSchedule.fixed(k), selection, n, grid, SeededStream(seed, 2))
    got = P.build_deleted_partial_sum(s, plan, interp).values
    ref = brute_partial_sum(s.values, spec.sigma, n, grid, plan.deleted, interp == "polygonal")
    np.testing.assert_allclose(got, ref, rtol=1e-12, atol=1e-12)


@given(st.integers(1, 40), st.integers(1, 12), st.integers(0, 2**32))
def test_batched_rows_equal_single(n, grid, seed):
    spec = DistributionSpec("normal")
    batch = draw_batch(spec, n, seed, range(5))
    plan = make_plan(DeletionSchedule.power(0.5), "random_per_time", n, grid, SeededStream(seed, 9))
    vb = P.build_deleted_partial_sum(batch, plan, "polygonal").values
    for i in range(5):
        one = P.build_deleted_partial_sum(SampleSequence(batch.values[i], spec), plan, "polygonal").values
        assert vb[i].tobytes() == one.tobytes()


@given(st.integers(1, 64), st.integers(1, 16), st.integers(0, 2**32))
def test_step_polygonal_agree_on_integral_nt(n, grid, seed):
    s = draw_iid(DistributionSpec("normal"), n, SeededStream(seed))
    a = P.build_partial_sum(s, grid, "step").values
    b = P.build_partial_sum(s, grid, "polygonal").values
    for g in range(grid + 1):
        if (n * g) % grid == 0:
            assert a[g] == b[g]


def test_raw_sums_and_scale():
    s = seq([1, -1, 1, 1])
    p = P.build_partial_sum(s, 4, normalize=False)
    assert p.scale == 1.0 and p.values.tolist() == [0, 1, 0, 1, 2]
    assert P.build_partial_sum(s, 4).scale == 0.5


def test_partial_sum_errors():
    with pytest.raises(ConfigError):
        P.build_partial_sum(seq([1, 1]), 2, "cubic")
    with pytest.raises(DomainError):
        P.build_partial_sum(seq([0.2, 0.8], UNIT), 2)  # not mean-zero
    with pytest.raises(DomainError):
        P.build_deleted_partial_sum(seq([1, 1, 1]), DeletionPlan.empty(4, 2))


def test_path_csv(tmp_path):
    p = P.build_partial_sum(seq([1, -1, 1, 1]), 4)
    p.to_csv(tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "t,value" and len(lines) == 6 and lines[-1] == "1.0,1.0"
    with pytest.raises(DomainError):
        P.build_partial_sum(SampleSequence(np.ones((2, 4)) * [1, -1, 1, -1], RAD), 4).to_csv(tmp_path / "x.csv")


def test_variance_law_raw_sums():
    """Var S~(t) = ([nt] - k*) sigma^2 for a random per-time plan."""
    spec = DistributionSpec("uniform_centered", 2.0)
    n, m_reps = 200, 10000
    plan = make_plan(DeletionSchedule.power(0.5), "random_per_time", n, 10, SeededStream(4))
    v = P.build_deleted_partial_sum(draw_batch(spec, n, 21, range(m_reps)), plan, normalize=False).values
    for g in (5, 10):
        target = (plan.m[g] - plan.k_star[g]) * spec.variance
        est = v[:, g].var(ddof=1)
        se = math.sqrt((np.mean((v[:, g] - v[:, g].mean()) ** 4) - est**2) / m_reps)
        assert abs(est - target) <= 4 * se


def test_increment_correlation_overlap_vs_complete():
    spec = DistributionSpec("normal")
    n, m_reps = 400, 10000
    sample = draw_batch(spec, n, 5, range(m_reps))
    complete = P.build_partial_sum(sample, 10, normalize=False).values
    assert abs(increment_correlation(complete, 4, 5, 6)) <= 4 / math.sqrt(m_reps)
    plan = make_overlapping_pair(n, 10, 1.0, SeededStream(6), DeletionSchedule.power(0.5))
    over = P.build_deleted_partial_sum(sample, plan, normalize=False).values
    assert abs(increment_correlation(over, 4, 5, 6)) > 5 / math.sqrt(m_reps)


# --- empirical processes ----------------------------------------------------------

def test_empirical_examples():
    s = seq([0.2, 0.8], UNIT)
    assert P.build_empirical(s, UNIT, [0.5]).values[0] == 0.5
    assert P.build_empirical(s, UNIT, [0.5], "centered").values[0] == pytest.approx(0.0)


def test_scaled_is_sqrt_n_centered():
    s = draw_iid(UNIT, 6, SeededStream(3))
    plan = DeletionPlan(6, 1, "prefix", (np.array([], dtype=np.int64), np.array([2, 5])))
    xs = np.linspace(-0.1, 1.1, 50)
    c = P.build_empirical(s, UNIT, xs, "centered", plan).values
    sc = P.build_empirical(s, UNIT, xs, "scaled", plan).values
    np.testing.assert_allclose(sc, math.sqrt(6) * c, rtol=0, atol=1e-15)


@given(st.integers(1, 64), st.integers(0, 20), st.integers(0, 2**32))
def test_empirical_brute_force(n, k, seed):
    s = draw_iid(UNIT, n, SeededStream(seed))
    plan = make_plan(DeletionSchedule.fixed(k), "static_random", n, 1, SeededStream(seed, 3))
    xs = np.sort(np.concatenate([np.linspace(-0.2, 1.2, 17), s.values[:3]]))
    got = P.build_empirical(s, UNIT, xs, "centered", plan).values
    ref = brute_empirical(s.values, xs, set(plan.deleted[-1].tolist()), UNIT.cdf, n)
    np.testing.assert_allclose(got, ref, atol=1e-12)
    raw = P.build_empirical(s, UNIT, xs, "raw_df", plan).values
    assert np.all(np.diff(raw) >= 0) and raw.min() >= 0 and raw.max() <= 1
    assert raw[-1] == pytest.approx((n - plan.k_star[-1]) / n)


def test_empirical_batched_and_errors():
    b = draw_batch(UNIT, 30, 2, range(4))
    xs = np.linspace(0, 1, 11)
    vb = P.build_empirical(b, UNIT, xs, "scaled").values
    for i in range(4):
        assert np.array_equal(vb[i], P.build_empirical(SampleSequence(b.values[i], UNIT), UNIT, xs, "scaled").values)
    with pytest.raises(DomainError):
        P.build_empirical(b, UNIT, [0.5, 0.1])
    with pytest.raises(ConfigError):
        P.build_empirical(b, UNIT, xs, "smoothed")


@given(st.integers(1, 40), st.integers(0, 10), st.integers(0, 2**32))
def test_empirical_sup_abs_matches_dense_search(n, k, seed):
    s = draw_iid(UNIT, n, SeededStream(seed))
    plan = make_plan(DeletionSchedule.fixed(k), "random_per_time", n, 1, SeededStream(seed, 1))
    got = P.empirical_sup_abs(s, UNIT, plan)
    # the sup is attained at a retained point or just to its left
    keep = np.setdiff1d(np.arange(1, n + 1), plan.deleted[-1]) - 1
    pts = np.sort(s.values[keep])
    probes = np.concatenate([pts, np.nextafter(pts, -np.inf), [0.0, 1.0]])
    dense = np.abs(P.build_empirical(s, UNIT, np.sort(probes), "scaled", plan).values).max()
    assert got == pytest.approx(dense, abs=1e-12)


# --- sequential empirical field -------------------------------------------------------

def test_sequential_examples():
    s = seq([0.9, 0.1], UNIT)
    f = P.build_sequential_field(s, [P.TestFunction.identity()], 1)
    assert f.values[-1, 0] == pytest.approx(0.0)
    const = P.TestFunction("one", 0)
    g = P.build_sequential_field(draw_iid(UNIT, 20, SeededStream(1)), [const], 5)
    assert np.all(g.values == 0)


@given(st.integers(1, 64), st.integers(1, 12), st.integers(0, 8), st.integers(0, 2**32))
def test_sequential_brute_force(n, grid, k, seed):
    law = DistributionSpec("normal", 0.5, 0.3)
    s = draw_iid(law, n, SeededStream(seed))
    fs = [P.TestFunction.identity(), P.TestFunction.square(), P.TestFunction.indicator(0.2)]
    plan = make_plan(DeletionSchedule.fixed(k), "random_per_time", n, grid, SeededStream(seed, 1))
    got = P.build_sequential_field(s, fs, grid, plan).values
    assert np.all(got[0] == 0)
    for g in range(grid + 1):
        drop = set(plan.deleted[g].tolist())
        idx = [i for i in range(1, (n * g) // grid + 1) if i not in drop]
        for j, f in enumerate(fs):
            ref = sum(float(f(s.values[i - 1])) - f.mean(law) for i in idx) / math.sqrt(n)
            assert got[g, j] == pytest.approx(ref, abs=1e-12)


def test_sequential_errors_and_csv(tmp_path):
    s = draw_iid(UNIT, 10, SeededStream(1))
    with pytest.raises(ConfigError):
        P.build_sequential_field(s, [lambda x: x], 5)
    with pytest.raises(ConfigError):
        P.build_sequential_field(s, [], 5)
    f = P.build_sequential_field(s, [P.TestFunction.identity(), P.TestFunction.square()], 2)
    f.to_csv(tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "t,f_name,value" and len(lines) == 1 + 3 * 2
    assert lines[1].startswith("0.0,identity,")


def test_test_function_moments():
    u = UNIT
    assert P.TestFunction.identity().mean(u) == pytest.approx(0.5)
    assert P.TestFunction.square().mean(u) == pytest.approx(1 / 3)
    assert P.TestFunction.identity().product_mean(P.TestFunction.square(), u) == pytest.approx(0.25)
    ind = P.TestFunction.indicator(0.3)
    assert ind.mean(u) == pytest.approx(0.3)
    assert ind(np.array([0.1, 0.3, 0.5])).tolist() == [1.0, 1.0, 0.0]
