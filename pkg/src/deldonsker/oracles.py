"""Closed-form limit laws: marginal, supremum and covariance targets.

All cdfs accept scalars or arrays and return the same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr

from deldonsker.errors import ConfigError

KOLMOGOROV_TOL = 1e-12
KOLMOGOROV_MAX_TERMS = 100
# below this the alternating series needs more than the term cap; the
# Jacobi-theta form converges in a handful of terms there instead
_KOLMOGOROV_SMALL_X = 0.5
_PI2_8 = math.pi**2 / 8.0

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def _scalar_or_array(out):
    return out if np.ndim(out) else float(out)


def normal_cdf(x):
    """Standard normal cdf, via the complementary error function (|err| ~ 1e-16)."""
    return _scalar_or_array(ndtr(np.asarray(x, dtype=float)))


def bm_sup_cdf(x):
    """P(sup_{[0,1]} W <= x) = 2 Phi(x) - 1 for x >= 0 (reflection principle)."""
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 0, 2.0 * ndtr(np.maximum(x, 0.0)) - 1.0, 0.0)
    return _scalar_or_array(out)


def bm_abs_sup_cdf(x):
    """P(sup_{[0,1]} |W| <= x).

    Large x: sum_k (-1)^k [Phi((2k+1)x) - Phi((2k-1)x)] over all integers k.
    Small x: (4/pi) sum_{k>=0} (-1)^k / (2k+1) exp(-(2k+1)^2 pi^2 / (8 x^2)).
    """
    arr = np.asarray(x, dtype=float)
    x = np.atleast_1d(arr)
    out = np.zeros_like(x)
    small = (x > 0) & (x < 1.0)
    big = x >= 1.0
    xs = x[small]
    acc = np.zeros_like(xs)
    for k in range(KOLMOGOROV_MAX_TERMS):
        j = 2 * k + 1
        term = np.exp(-(j**2) * _PI2_8 / xs**2) / j
        acc += term if k % 2 == 0 else -term
        if term.size == 0 or term.max() < KOLMOGOROV_TOL:
            break
    out[small] = 4.0 / math.pi * acc
    xb = x[big]
    acc = ndtr(xb) - ndtr(-xb)
    for k in range(1, KOLMOGOROV_MAX_TERMS):
        sign = -1.0 if k % 2 else 1.0
        term = (ndtr((2 * k + 1) * xb) - ndtr((2 * k - 1) * xb)) + (ndtr((1 - 2 * k) * xb) - ndtr((-1 - 2 * k) * xb))
        acc += sign * term
        if term.size == 0 or term.max() < KOLMOGOROV_TOL:
            break
    out[big] = acc
    out = np.clip(out, 0.0, 1.0)
    return out.reshape(arr.shape) if arr.ndim else float(out[0])


def kolmogorov_cdf(x):
    """Law of sup |B| for a standard Brownian bridge B.

    K(x) = 1 - 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2), truncated once a term
    drops below 1e-12 (at most 100 terms). For x < 0.5 the equivalent theta
    form sqrt(2 pi)/x sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 x^2)) is used.
    """
    arr = np.asarray(x, dtype=float)
    x = np.atleast_1d(arr)
    out = np.zeros_like(x)
    small = (x > 0) & (x < _KOLMOGOROV_SMALL_X)
    big = x >= _KOLMOGOROV_SMALL_X

    xs = x[small]
    acc = np.zeros_like(xs)
    for k in range(1, KOLMOGOROV_MAX_TERMS + 1):
        term = np.exp(-((2 * k - 1) ** 2) * _PI2_8 / xs**2)
        acc += term
        if term.size == 0 or term.max() < KOLMOGOROV_TOL:
            break
    out[small] = math.sqrt(2.0 * math.pi) / xs * acc

    xb = x[big]
    acc = np.zeros_like(xb)
    for k in range(1, KOLMOGOROV_MAX_TERMS + 1):
        term = np.exp(-2.0 * k * k * xb**2)
        acc += term if k % 2 else -term
        if term.size == 0 or term.max() < KOLMOGOROV_TOL:
            break
    out[big] = 1.0 - 2.0 * acc
    out = np.clip(out, 0.0, 1.0)
    return out.reshape(arr.shape) if arr.ndim else float(out[0])


def kolmogorov_ppf(p: float) -> float:
    if not (0.0 < p < 1.0):
        raise ValueError("p must be in (0, 1)")
    return brentq(lambda v: kolmogorov_cdf(v) - p, 1e-3, 10.0, xtol=1e-14)


def bm_covariance(s: float, t: float) -> float:
    return min(s, t)


def bridge_covariance(s: float, t: float, F) -> float:
    """min{F(s), F(t)} - F(s) F(t); ``F`` is any cdf callable (e.g. a DistributionSpec's)."""
    cdf = F.cdf if hasattr(F, "cdf") else F
    fs, ft = float(cdf(s)), float(cdf(t))
    return min(fs, ft) - fs * ft


def kiefer_muller_covariance(s: float, t: float, f, g, law) -> float:
    """(s ^ t) (Pfg - Pf Pg) under ``law``.

    ``f`` and ``g`` must expose ``mean(law)`` and ``product_mean(other, law)``
    (see ``processes.TestFunction``).
    """
    for fn in (f, g):
        if not (hasattr(fn, "mean") and hasattr(fn, "product_mean")):
            raise ConfigError(f"test function {fn!r} has no analytic moments")
    return min(s, t) * (f.product_mean(g, law) - f.mean(law) * g.mean(law))


@dataclass(frozen=True)
class LimitLaw:
    """A univariate limit law usable as a cdf callable."""

    kind: str
    variance: float = 1.0

    KINDS = ("normal_marginal", "bm_sup", "bm_abs_sup", "bridge_sup", "bridge_marginal")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"unknown limit law {self.kind!r}")
        if self.kind in ("normal_marginal", "bridge_marginal") and not self.variance > 0:
            raise ConfigError("marginal laws need a positive variance")

    @classmethod
    def normal_marginal(cls, t: float) -> "LimitLaw":
        """W(t) ~ N(0, t)."""
        return cls("normal_marginal", float(t))

    @classmethod
    def bridge_marginal(cls, p: float) -> "LimitLaw":
        """B(p) ~ N(0, p (1 - p))."""
        return cls("bridge_marginal", float(p * (1.0 - p)))

    def cdf(self, x):
        if self.kind in ("normal_marginal", "bridge_marginal"):
            return normal_cdf(np.asarray(x, dtype=float) / math.sqrt(self.variance))
        if self.kind == "bm_sup":
            return bm_sup_cdf(x)
        if self.kind == "bm_abs_sup":
            return bm_abs_sup_cdf(x)
        return kolmogorov_cdf(x)

    __call__ = cdf
