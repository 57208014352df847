"""Tests and estimators that turn limit statements into pass/fail numbers.

Replication matrices are ``(M, T)`` arrays: one row per replication, one
column per grid time (or any other per-replication feature). Nothing here
draws random numbers.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from deldonsker.errors import ConfigError, DomainError
from deldonsker.oracles import kolmogorov_cdf, kolmogorov_ppf

FUNCTIONALS = ("sup", "abs_sup", "terminal", "mean_abs")
MIN_KS_SAMPLES = 100


@dataclass(frozen=True)
class TestReport:
    """Outcome of one check. ``verdict`` is "pass" iff statistic <= threshold.

    ``expected`` is the verdict the check should produce ("fail" for
    negative controls); ``alpha`` is the nominal false-rejection rate when
    the expected verdict is "pass" and the null holds.
    """

    __test__ = False

    name: str
    statistic: float
    threshold: float
    n_samples: int
    verdict: str
    context: str = ""
    expected: str = "pass"
    alpha: float | None = None

    @property
    def as_expected(self) -> bool:
        return self.verdict == self.expected

    def to_dict(self) -> dict:
        return asdict(self)


def make_report(name, statistic, threshold, n_samples, context="", expected="pass", alpha=None) -> TestReport:
    statistic = float(statistic)
    verdict = "pass" if statistic <= threshold else "fail"
    return TestReport(name, statistic, float(threshold), int(n_samples), verdict, context, expected, alpha)


def _two_sided_normal_alpha(z: float) -> float:
    return math.erfc(z / math.sqrt(2.0))


def ks_statistic(values, cdf) -> float:
    """sup_x |F_M(x) - cdf(x)|, exact: checked on both sides of every jump."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    m = v.size
    c = np.asarray(cdf(v), dtype=float)
    i = np.arange(1, m + 1)
    return float(max(np.max(i / m - c), np.max(c - (i - 1) / m)))


def ks_one_sample(values, cdf, *, critical: float | None = None, alpha: float = 0.01,
                  name: str = "ks", context: str = "", expected: str = "pass") -> TestReport:
    """One-sample Kolmogorov-Smirnov test with threshold critical / sqrt(M).

    ``critical`` defaults to the asymptotic Kolmogorov quantile at 1 - alpha
    (1.628 for alpha = 0.01). A looser ``critical`` widens the band, e.g. for
    grid-discretized functionals.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size < MIN_KS_SAMPLES:
        raise DomainError(f"KS test needs at least {MIN_KS_SAMPLES} values, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise DomainError("KS test values must be finite")
    if critical is None:
        critical = kolmogorov_ppf(1.0 - alpha)
    else:
        alpha = 1.0 - kolmogorov_cdf(critical)
    m = v.size
    return make_report(name, ks_statistic(v, cdf), critical / math.sqrt(m), m, context, expected, alpha)


def cdf_overlay(values, cdf, points: int = 101) -> np.ndarray:
    """(points, 3) array of x, empirical cdf, oracle cdf for plotting."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    xs = np.linspace(v[0], v[-1], points)
    emp = np.searchsorted(v, xs, side="right") / v.size
    return np.column_stack([xs, emp, np.asarray(cdf(xs), dtype=float)])


def _as_matrix(paths) -> np.ndarray:
    p = getattr(paths, "values", paths)
    p = np.asarray(p, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    if p.ndim != 2:
        raise DomainError("expected a (replications, times) matrix")
    return p


def estimate_covariance(paths, s: int, t: int) -> tuple[float, float]:
    """Sample covariance of columns s and t with its jackknife standard error.

    Leave-one-out covariances have the closed form
    (Sxy - x_i y_i M / (M - 1)) / (M - 2) on mean-centered columns.
    """
    p = _as_matrix(paths)
    m = p.shape[0]
    if m < 3:
        raise DomainError(f"need at least 3 replications for a jackknife, got {m}")
    x = p[:, s] - p[:, s].mean()
    y = p[:, t] - p[:, t].mean()
    xy = x * y
    sxy = xy.sum()
    est = sxy / (m - 1)
    loo = (sxy - xy * (m / (m - 1))) / (m - 2)
    se = math.sqrt((m - 1) / m * np.sum((loo - loo.mean()) ** 2))
    return float(est), se


def covariance_check(paths, s: int, t: int, target: float, *, threshold: float = 4.0,
                     name: str = "covariance", context: str = "") -> TestReport:
    """z-test of the estimated covariance against an analytic target."""
    target = float(target)
    est, se = estimate_covariance(paths, s, t)
    z = _z(est - target, se)
    ctx = f"estimate={est!r} se={se!r} target={target!r}" + (f"; {context}" if context else "")
    return make_report(name, abs(z), threshold, _as_matrix(paths).shape[0], ctx,
                       alpha=_two_sided_normal_alpha(threshold))


def _z(diff: float, se: float) -> float:
    if se == 0.0:
        return 0.0 if diff == 0.0 else math.inf
    return diff / se


def increment_correlation(paths, t0: int, t1: int, t2: int) -> float:
    p = _as_matrix(paths)
    a = p[:, t1] - p[:, t0]
    b = p[:, t2] - p[:, t1]
    a = a - a.mean()
    b = b - b.mean()
    va, vb = np.sum(a * a), np.sum(b * b)
    if va == 0.0 or vb == 0.0:
        raise DomainError("increment has zero variance; correlation undefined")
    return float(np.sum(a * b) / math.sqrt(va * vb))


def increment_correlation_test(paths, t0: int, t1: int, t2: int, *, threshold: float = 4.0,
                               name: str = "increment_correlation", context: str = "",
                               expected: str = "pass") -> TestReport:
    """|corr(X(t1) - X(t0), X(t2) - X(t1))| * sqrt(M) against an independence threshold."""
    if not t0 < t1 < t2:
        raise DomainError("need t0 < t1 < t2")
    m = _as_matrix(paths).shape[0]
    rho = increment_correlation(paths, t0, t1, t2)
    ctx = f"rho={rho!r}" + (f"; {context}" if context else "")
    alpha = _two_sided_normal_alpha(threshold) if expected == "pass" else None
    return make_report(name, abs(rho) * math.sqrt(m), threshold, m, ctx, expected, alpha)


def functional_values(paths, functional: str, times=None) -> np.ndarray:
    """Per-replication functional of grid paths.

    mean_abs integrates |X| over the grid with the trapezoid rule.
    """
    if functional not in FUNCTIONALS:
        raise ConfigError(f"unknown functional {functional!r}; expected one of {FUNCTIONALS}")
    p = _as_matrix(paths)
    if functional == "sup":
        return p.max(axis=1)
    if functional == "abs_sup":
        return np.abs(p).max(axis=1)
    if functional == "terminal":
        return p[:, -1]
    if times is None:
        times = getattr(paths, "times", None)
    if times is None:
        times = np.linspace(0.0, 1.0, p.shape[1])
    a = np.abs(p)
    dt = np.diff(np.asarray(times, dtype=float))
    # explicit row sums rather than a BLAS matvec: reduction order stays fixed
    return np.sum((a[:, 1:] + a[:, :-1]) * (0.5 * dt), axis=1)


def mean_check(values, oracle_value: float, *, allowance: float = 0.0, threshold: float = 4.0,
               name: str = "mean", context: str = "", expected: str = "pass") -> TestReport:
    """max(|mean - oracle| - allowance, 0) / standard error, against ``threshold``."""
    v = np.asarray(values, dtype=float).ravel()
    oracle_value = float(oracle_value)
    if not math.isfinite(oracle_value):
        raise DomainError("oracle value must be finite")
    m = v.size
    mean = float(v.mean())
    se = float(v.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0
    excess = max(abs(mean - oracle_value) - allowance, 0.0)
    stat = abs(_z(excess, se))
    ctx = f"mean={mean!r} se={se!r} oracle={oracle_value!r} allowance={allowance!r}"
    if context:
        ctx += f"; {context}"
    alpha = _two_sided_normal_alpha(threshold) if expected == "pass" else None
    return make_report(name, stat, threshold, m, ctx, expected, alpha)


def functional_expectation_check(paths, functional: str, oracle_value: float, oracle_tol: float = 0.0,
                                 *, times=None, threshold: float = 4.0, name: str | None = None,
                                 context: str = "") -> TestReport:
    """Compare the Monte Carlo mean of a path functional with its limit value.

    ``oracle_tol`` is an extra allowance (e.g. grid discretization bias)
    subtracted from |mean - oracle| before standardizing.
    """
    vals = functional_values(paths, functional, times)
    return mean_check(vals, oracle_value, allowance=oracle_tol, threshold=threshold,
                      name=name or f"E[{functional}]", context=context)


def variance_check(values, target: float, *, threshold: float = 4.0, name: str = "variance",
                   context: str = "") -> TestReport:
    """z-test of a sample variance (jackknife standard error) against ``target``."""
    return covariance_check(np.asarray(values, dtype=float).reshape(-1, 1), 0, 0, target,
                            threshold=threshold, name=name, context=context)


def max_abs_z_of_means(sums, sumsq, m: int) -> float:
    """max over columns of |mean| / standard error, from column sums and sums of squares.

    Columns whose values are identically zero (standard error 0, mean 0)
    contribute 0.
    """
    sums = np.asarray(sums, dtype=float)
    sumsq = np.asarray(sumsq, dtype=float)
    mean = sums / m
    var = np.maximum(sumsq - m * mean**2, 0.0) / (m - 1)
    se = np.sqrt(var / m)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, np.abs(mean) / se, np.where(mean == 0, 0.0, np.inf))
    return float(z.max())
