import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from deldonsker.errors import ConfigError, DomainError
from deldonsker.sampling import KINDS, DistributionSpec, SampleSequence, SeededStream, draw_batch, draw_iid


def test_rademacher_support():
    s = draw_iid(DistributionSpec("rademacher"), 4, SeededStream(2024))
    assert set(s.values.tolist()) <= {-1.0, 1.0}


def test_uniform_mean_clt_band():
    s = draw_iid(DistributionSpec("uniform_centered"), 10**6, SeededStream(99))
    assert abs(s.values.mean()) <= 5 / math.sqrt(10**6)


@pytest.mark.parametrize("kind", KINDS)
def test_variance_within_one_percent(kind):
    spec = DistributionSpec(kind, sigma=2.5)
    v = draw_iid(spec, 10**6, SeededStream(7, 3)).values
    assert abs(v.var() / spec.variance - 1) < 0.01
    assert spec.variance == 6.25


def test_substreams_uncorrelated():
    spec = DistributionSpec("normal")
    a = draw_iid(spec, 10**5, SeededStream(5, 10)).values
    b = draw_iid(spec, 10**5, SeededStream(5, 11)).values
    assert abs(np.corrcoef(a, b)[0, 1]) <= 4 / math.sqrt(10**5)


@given(st.sampled_from(KINDS), st.integers(1, 50), st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1))
def test_reproducible(kind, n, seed, sid):
    spec = DistributionSpec(kind)
    a = draw_iid(spec, n, SeededStream(seed, sid)).values
    b = draw_iid(spec, n, SeededStream(seed, sid)).values
    assert a.tobytes() == b.tobytes()


def test_batch_rows_match_single_streams():
    spec = DistributionSpec("exponential_centered", 0.7)
    batch = draw_batch(spec, 30, 11, [4, 0, 9])
    for row, sid in zip(batch.values, [4, 0, 9]):
        assert row.tobytes() == draw_iid(spec, 30, SeededStream(11, sid)).values.tobytes()


def test_stream_id_changes_output():
    spec = DistributionSpec("normal")
    assert not np.array_equal(draw_iid(spec, 10, SeededStream(1, 0)).values,
                              draw_iid(spec, 10, SeededStream(1, 1)).values)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_bad_sigma(bad):
    with pytest.raises(ConfigError):
        DistributionSpec("normal", sigma=bad)


def test_bad_kind_and_stream():
    with pytest.raises(ConfigError):
        DistributionSpec("cauchy")
    with pytest.raises(ConfigError):
        SeededStream(-1)
    with pytest.raises(ConfigError):
        SeededStream(0, 2**64)


def test_n_zero_is_domain_error():
    with pytest.raises(DomainError):
        draw_iid(DistributionSpec("normal"), 0, SeededStream(1))


def test_sample_sequence_validation():
    spec = DistributionSpec("normal")
    with pytest.raises(DomainError):
        SampleSequence(np.array([1.0, np.nan]), spec)
    with pytest.raises(DomainError):
        SampleSequence(np.zeros(0), spec)


def test_unit_uniform_and_centering():
    spec = DistributionSpec.unit_uniform()
    s = draw_iid(spec, 1000, SeededStream(3))
    assert s.values.min() >= 0 and s.values.max() <= 1
    c = s.centered()
    assert c.spec.loc == 0 and np.allclose(c.values, s.values - 0.5)
    assert spec.cdf(0.3) == pytest.approx(0.3)
    assert spec.ppf(0.7) == pytest.approx(0.7)


@pytest.mark.parametrize("kind", ["uniform_centered", "normal", "exponential_centered"])
@pytest.mark.parametrize("power", [0, 1, 2, 3, 4])
@pytest.mark.parametrize("cutoff", [-0.4, 0.3, 1.1, math.inf])
def test_partial_moments_match_quadrature(kind, power, cutoff):
    spec = DistributionSpec(kind, sigma=0.8, loc=0.2)
    lo = spec.ppf(0.0) if kind != "normal" else -40.0
    hi = min(cutoff, spec.ppf(1.0) if kind == "uniform_centered" else 60.0)
    if hi <= lo:
        expected = 0.0
    else:
        # integrate x^p against the density, obtained by differentiating the cdf in closed form
        dens = {
            "uniform_centered": lambda x: 1 / (2 * math.sqrt(3) * spec.sigma),
            "normal": lambda x: math.exp(-0.5 * ((x - spec.loc) / spec.sigma) ** 2) / (spec.sigma * math.sqrt(2 * math.pi)),
            "exponential_centered": lambda x: math.exp(-((x - spec.loc) / spec.sigma + 1)) / spec.sigma,
        }[kind]
        expected = integrate.quad(lambda x: x**power * dens(x), lo, hi, limit=200)[0]
    assert spec.partial_moment(power, cutoff) == pytest.approx(expected, abs=1e-9, rel=1e-8)


def test_rademacher_partial_moments():
    spec = DistributionSpec("rademacher")
    assert spec.partial_moment(0, 0.0) == 0.5
    assert spec.partial_moment(1) == 0.0
    assert spec.partial_moment(2) == 1.0
    assert spec.partial_moment(1, -1.0) == -0.5
