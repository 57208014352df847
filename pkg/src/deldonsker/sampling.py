"""Seeded i.i.d. draws from a small catalog of standardized laws.

Every replication owns a ``SeededStream``: a (seed, stream_id) pair used as the
128-bit key of a Philox counter-based generator. Substreams are therefore
derived by keying, not by jumping a shared state, and replication ``i`` gets
the same numbers no matter which worker produces it or in which order.

Each law is ``loc + sigma * Z`` with ``Z`` standardized analytically
(mean 0, variance 1), so reported moments are exact rather than estimated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.special import ndtr, ndtri

from deldonsker.errors import ConfigError, DomainError

KINDS = ("rademacher", "uniform_centered", "normal", "exponential_centered")

_SQRT3 = math.sqrt(3.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class DistributionSpec:
    """Law of one summand.

    ``kind`` selects the standardized shape; ``sigma`` is the exact standard
    deviation and ``loc`` the exact mean (0 for the partial-sum constructions,
    non-zero e.g. for Uniform(0, 1) samples fed to empirical processes).
    """

    kind: str
    sigma: float = 1.0
    loc: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown distribution kind {self.kind!r}; expected one of {KINDS}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ConfigError(f"sigma must be a positive finite number, got {self.sigma!r}")
        if not math.isfinite(self.loc):
            raise ConfigError(f"loc must be finite, got {self.loc!r}")

    @classmethod
    def unit_uniform(cls) -> "DistributionSpec":
        """Uniform(0, 1) expressed in the catalog."""
        return cls("uniform_centered", sigma=1.0 / math.sqrt(12.0), loc=0.5)

    @property
    def mean(self) -> float:
        return self.loc

    @property
    def variance(self) -> float:
        return self.sigma**2

    @property
    def is_continuous(self) -> bool:
        return self.kind != "rademacher"

    def centered(self) -> "DistributionSpec":
        return DistributionSpec(self.kind, self.sigma, 0.0)

    def _standardize(self, x):
        return (np.asarray(x, dtype=float) - self.loc) / self.sigma

    def cdf(self, x):
        z = self._standardize(x)
        if self.kind == "rademacher":
            out = 0.5 * (z >= -1.0) + 0.5 * (z >= 1.0)
        elif self.kind == "uniform_centered":
            out = np.clip((z + _SQRT3) / (2.0 * _SQRT3), 0.0, 1.0)
        elif self.kind == "normal":
            out = ndtr(z)
        else:
            e = np.maximum(z + 1.0, 0.0)
            out = -np.expm1(-e)
        return out if np.ndim(out) else float(out)

    def ppf(self, u):
        """Quantile function (left-continuous inverse of ``cdf``)."""
        u = np.asarray(u, dtype=float)
        if np.any((u < 0) | (u > 1)):
            raise DomainError("probabilities must lie in [0, 1]")
        if self.kind == "rademacher":
            z = np.where(u <= 0.5, -1.0, 1.0)
        elif self.kind == "uniform_centered":
            z = -_SQRT3 + 2.0 * _SQRT3 * u
        elif self.kind == "normal":
            z = ndtri(u)
        else:
            z = -np.log1p(-u) - 1.0
        out = self.loc + self.sigma * z
        return out if np.ndim(out) else float(out)

    def partial_moment(self, power: int, cutoff: float = math.inf) -> float:
        """E[X**power * 1{X <= cutoff}] in closed form."""
        if power < 0:
            raise DomainError("power must be a non-negative integer")
        z = (cutoff - self.loc) / self.sigma if math.isfinite(cutoff) else cutoff
        return sum(
            comb(power, j) * self.loc ** (power - j) * self.sigma**j * _std_partial_moment(self.kind, j, z)
            for j in range(power + 1)
        )


def _std_partial_moment(kind: str, j: int, z: float) -> float:
    """E[Z**j * 1{Z <= z}] for the standardized law of ``kind``."""
    if z == -math.inf:
        return 0.0
    if kind == "rademacher":
        return sum(0.5 * a**j for a in (-1.0, 1.0) if a <= z)
    if kind == "uniform_centered":
        u = min(max(z, -_SQRT3), _SQRT3)
        return (u ** (j + 1) - (-_SQRT3) ** (j + 1)) / ((j + 1) * 2.0 * _SQRT3)
    if kind == "normal":
        if z == math.inf:
            return float(math.prod(range(j - 1, 0, -2))) if j % 2 == 0 else 0.0
        dens = _INV_SQRT_2PI * math.exp(-0.5 * z * z)
        moments = [float(ndtr(z)), -dens]
        for i in range(2, j + 1):
            moments.append((i - 1) * moments[i - 2] - z ** (i - 1) * dens)
        return moments[j]
    # exponential_centered: Z = E - 1 with E ~ Exp(1)
    e = z + 1.0
    if e <= 0:
        return 0.0
    # lower incomplete gamma integrals I_i = int_0^e x^i exp(-x) dx
    tail = 0.0 if e == math.inf else math.exp(-e)
    inc = [-math.expm1(-e) if e != math.inf else 1.0]
    for i in range(1, j + 1):
        inc.append(i * inc[i - 1] - (0.0 if e == math.inf else e**i * tail))
    return sum(comb(j, i) * (-1.0) ** (j - i) * inc[i] for i in range(j + 1))


@dataclass(frozen=True)
class SeededStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not (isinstance(v, (int, np.integer)) and 0 <= v <= _MASK64):
                raise ConfigError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def generator(self) -> np.random.Generator:
        key = int(self.seed) | (int(self.stream_id) << 64)
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class SampleSequence:
    """A draw of ``n`` summands.

    ``values`` is either one sequence of shape ``(n,)`` or a batch of
    independent replications of shape ``(B, n)``; every builder accepts both.
    """

    values: np.ndarray
    spec: DistributionSpec

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim not in (1, 2) or v.shape[-1] < 1:
            raise DomainError("sample needs shape (n,) or (B, n) with n >= 1")
        if not np.all(np.isfinite(v)):
            raise DomainError("sample contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[-1]

    @property
    def batched(self) -> bool:
        return self.values.ndim == 2

    def centered(self) -> "SampleSequence":
        """Subtract the exact mean; a no-op copy when ``loc`` is already 0."""
        if self.spec.loc == 0.0:
            return self
        return SampleSequence(self.values - self.spec.loc, self.spec.centered())

    @classmethod
    def stack(cls, samples) -> "SampleSequence":
        samples = list(samples)
        spec = samples[0].spec
        if any(s.spec != spec for s in samples):
            raise DomainError("cannot stack samples drawn from different laws")
        return cls(np.stack([s.values for s in samples]), spec)


def _standard_draws(kind: str, n: int, rng: np.random.Generator) -> np.ndarray:
    if kind == "rademacher":
        return 2.0 * rng.integers(0, 2, size=n).astype(float) - 1.0
    if kind == "uniform_centered":
        return rng.uniform(-_SQRT3, _SQRT3, size=n)
    if kind == "normal":
        return rng.standard_normal(n)
    return rng.standard_exponential(n) - 1.0


def draw_iid(spec: DistributionSpec, n: int, stream: SeededStream) -> SampleSequence:
    if not isinstance(spec, DistributionSpec):
        raise ConfigError("spec must be a DistributionSpec")
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    z = _standard_draws(spec.kind, int(n), stream.generator())
    values = z * spec.sigma + spec.loc if (spec.sigma != 1.0 or spec.loc != 0.0) else z
    return SampleSequence(values, spec)


def draw_batch(spec: DistributionSpec, n: int, seed: int, stream_ids) -> SampleSequence:
    """Stack ``draw_iid`` over several replication streams (row i = stream_ids[i])."""
    return SampleSequence.stack(draw_iid(spec, n, SeededStream(seed, int(i))) for i in stream_ids)
