"""Process builders: complete and deleting-item partial sums, empirical
distribution functions and sequential empirical fields.

Every builder accepts a single sample (values of shape ``(n,)``) or a batch
of replications (``(B, n)``); outputs gain a leading batch axis in the second
case. Deleted sums are taken with one sparse product against the plan's
indicator matrix, so each replication row is reduced independently of how
rows are batched.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from deldonsker.deletion import DeletionPlan, grid_prefix_lengths
from deldonsker.errors import ConfigError, DomainError
from deldonsker.sampling import DistributionSpec, SampleSequence

INTERPOLATIONS = ("step", "polygonal")
FLAVORS = ("raw_df", "centered", "scaled")


@dataclass(frozen=True)
class PathOnGrid:
    times: np.ndarray
    values: np.ndarray
    interpolation: str
    scale: float

    def at(self, t: float) -> np.ndarray:
        """Values at the grid point closest to ``t``."""
        g = int(round(t * (self.times.size - 1)))
        return self.values[..., g]

    def to_csv(self, path) -> None:
        if self.values.ndim != 1:
            raise DomainError("only a single path can be dumped; index the batch first")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "value"])
            for t, v in zip(self.times, self.values):
                w.writerow([repr(float(t)), repr(float(v))])


@dataclass(frozen=True)
class EmpiricalPath:
    xs: np.ndarray
    values: np.ndarray
    flavor: str
    truth: object
    n: int


@dataclass(frozen=True)
class SequentialField:
    times: np.ndarray
    functions: tuple
    values: np.ndarray  # (..., time, function)

    def to_csv(self, path) -> None:
        if self.values.ndim != 2:
            raise DomainError("only a single field can be dumped; index the batch first")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "f_name", "value"])
            for g, t in enumerate(self.times):
                for j, f in enumerate(self.functions):
                    w.writerow([repr(float(t)), f.name, repr(float(self.values[g, j]))])


@dataclass(frozen=True)
class TestFunction:
    """f(x) = x**power * 1{x <= cutoff}.

    Identity, square and indicators are all of this form, and so is any
    product of two of them, which gives Pf, Pg and Pfg in closed form.
    """

    __test__ = False  # not a pytest class

    name: str
    power: int
    cutoff: float = math.inf

    @classmethod
    def identity(cls) -> "TestFunction":
        return cls("identity", 1)

    @classmethod
    def square(cls) -> "TestFunction":
        return cls("square", 2)

    @classmethod
    def indicator(cls, c: float) -> "TestFunction":
        return cls(f"indicator_le_{c:g}", 0, float(c))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = x**self.power if self.power else np.ones_like(x)
        if math.isfinite(self.cutoff):
            out = out * (x <= self.cutoff)
        return out

    def mean(self, law: DistributionSpec) -> float:
        return law.partial_moment(self.power, self.cutoff)

    def product_mean(self, other: "TestFunction", law: DistributionSpec) -> float:
        return law.partial_moment(self.power + other.power, min(self.cutoff, other.cutoff))


def _check_interpolation(interpolation: str) -> None:
    if interpolation not in INTERPOLATIONS:
        raise ConfigError(f"unknown interpolation {interpolation!r}; expected one of {INTERPOLATIONS}")


def _prefix_sums(values: np.ndarray) -> np.ndarray:
    zeros = np.zeros(values.shape[:-1] + (1,))
    return np.concatenate([zeros, np.cumsum(values, axis=-1)], axis=-1)


def _deleted_sums(values: np.ndarray, plan: DeletionPlan) -> np.ndarray:
    """Sum of values over deleted(g) for every grid point, shape (..., G + 1)."""
    if plan.is_empty:
        return np.zeros(values.shape[:-1] + (plan.grid_size + 1,))
    mat = plan.deletion_matrix
    if values.ndim == 1:
        return mat @ values
    return np.asarray(mat @ values.T).T


def _fraction_term(values: np.ndarray, n: int, grid_size: int) -> np.ndarray:
    """(nt - [nt]) xi_{[nt]+1} at each grid time."""
    g = np.arange(grid_size + 1, dtype=np.int64)
    m = (n * g) // grid_size
    frac = ((n * g) % grid_size) / grid_size
    nxt = np.minimum(m, n - 1)  # 0-based position of xi_{m+1}; frac is 0 whenever m == n
    return frac * values[..., nxt]


def _require_centered(sample: SampleSequence) -> None:
    if sample.spec.loc != 0.0:
        raise DomainError("partial-sum processes need mean-zero summands; use sample.centered()")


def build_partial_sum(
    sample: SampleSequence,
    grid_size: int,
    interpolation: str = "step",
    normalize: bool = True,
) -> PathOnGrid:
    """W_n (step) or X_n (polygonal) on the grid t_g = g / grid_size.

    With ``normalize=False`` the raw sums S_[nt] are returned (scale 1).
    """
    _check_interpolation(interpolation)
    _require_centered(sample)
    if grid_size < 1:
        raise DomainError("grid_size must be >= 1")
    n = sample.n
    v = sample.values
    out = _prefix_sums(v)[..., grid_prefix_lengths(n, grid_size)]
    if interpolation == "polygonal":
        out = out + _fraction_term(v, n, grid_size)
    scale = 1.0 / (sample.spec.sigma * math.sqrt(n)) if normalize else 1.0
    if normalize:
        out = out * scale
    return PathOnGrid(np.arange(grid_size + 1) / grid_size, out, interpolation, scale)


def build_deleted_partial_sum(
    sample: SampleSequence,
    plan: DeletionPlan,
    interpolation: str = "step",
    normalize: bool = True,
) -> PathOnGrid:
    """Deleting-item partial sums: the summands in {1..[nt]} minus deleted(g).

    The polygonal correction uses xi_{[nt]+1} from the raw sequence even if
    that index is deleted at a later grid time.
    """
    _check_interpolation(interpolation)
    _require_centered(sample)
    n = sample.n
    if plan.n != n:
        raise DomainError(f"plan is for n={plan.n} but the sample has n={n}")
    v = sample.values
    out = _prefix_sums(v)[..., plan.m]
    if not plan.is_empty:
        out = out - _deleted_sums(v, plan)
    if interpolation == "polygonal":
        out = out + _fraction_term(v, n, plan.grid_size)
    scale = 1.0 / (sample.spec.sigma * math.sqrt(n)) if normalize else 1.0
    if normalize:
        out = out * scale
    return PathOnGrid(plan.times, out, interpolation, scale)


def _retained_mask(n: int, plan: DeletionPlan | None) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    if plan is not None:
        if plan.n != n:
            raise DomainError(f"plan is for n={plan.n} but the sample has n={n}")
        mask[plan.deleted[-1] - 1] = False
    return mask


def build_empirical(
    sample: SampleSequence,
    truth,
    xs,
    flavor: str = "raw_df",
    plan: DeletionPlan | None = None,
) -> EmpiricalPath:
    """Empirical df over the retained items, normalized by n (not n - k*).

    Retained items are {1..n} minus the plan's deleted set at its final grid
    time (t = 1); with no plan every item is kept.
    """
    if flavor not in FLAVORS:
        raise ConfigError(f"unknown flavor {flavor!r}; expected one of {FLAVORS}")
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1 or np.any(np.diff(xs) < 0):
        raise DomainError("xs must be a sorted 1-d grid")
    n = sample.n
    keep = _retained_mask(n, plan)
    v = sample.values
    nx = xs.size
    # bins[i] = number of grid points strictly below xi_i, so xi_i <= xs[j] iff bins[i] <= j
    bins = np.searchsorted(xs, v, side="left")
    weights = np.broadcast_to(keep, v.shape).astype(float)
    if v.ndim == 1:
        counts = np.cumsum(np.bincount(bins, weights=weights, minlength=nx + 1))[:nx]
    else:
        b = v.shape[0]
        offs = bins + (nx + 1) * np.arange(b)[:, None]
        hist = np.bincount(offs.ravel(), weights=weights.ravel(), minlength=b * (nx + 1))
        counts = np.cumsum(hist.reshape(b, nx + 1), axis=1)[:, :nx]
    if flavor == "raw_df":
        values = counts / n
    else:
        cdf = truth.cdf if hasattr(truth, "cdf") else truth
        centered = (counts - keep.sum() * np.asarray(cdf(xs), dtype=float)) / n
        values = centered if flavor == "centered" else math.sqrt(n) * centered
    return EmpiricalPath(xs, values, flavor, truth, n)


def empirical_sup_abs(sample: SampleSequence, truth, plan: DeletionPlan | None = None):
    """sup over all real x of |scaled empirical process|, evaluated exactly.

    The path is a step function in x that jumps only at retained sample
    points and decreases in between, so the supremum is attained at a jump
    or at its left limit.
    """
    n = sample.n
    keep = _retained_mask(n, plan)
    cdf = truth.cdf if hasattr(truth, "cdf") else truth
    v = np.sort(sample.values[..., keep], axis=-1)
    r = v.shape[-1]
    if r == 0:
        return np.zeros(v.shape[:-1]) if v.ndim > 1 else 0.0
    j = np.arange(1, r + 1)
    rf = r * np.asarray(cdf(v), dtype=float)
    dev = np.maximum(np.abs(j - rf), np.abs(j - 1 - rf)).max(axis=-1)
    out = dev / math.sqrt(n)
    return out if np.ndim(out) else float(out)


def build_sequential_field(
    sample: SampleSequence,
    functions,
    grid_size: int,
    plan: DeletionPlan | None = None,
) -> SequentialField:
    """(1/sqrt n) sum over retained i <= [nt] of (f(xi_i) - Pf), per grid time and f."""
    functions = tuple(functions)
    if not functions:
        raise ConfigError("need at least one test function")
    for f in functions:
        if not isinstance(f, TestFunction):
            raise ConfigError(f"test function {f!r} has no analytic moments")
    n = sample.n
    if plan is not None and (plan.n != n or plan.grid_size != grid_size):
        raise DomainError("plan does not match the sample size or grid")
    m = grid_prefix_lengths(n, grid_size)
    v = sample.values
    cols = []
    for f in functions:
        c = f(v) - f.mean(sample.spec)
        s = _prefix_sums(c)[..., m]
        if plan is not None and not plan.is_empty:
            s = s - _deleted_sums(c, plan)
        cols.append(s / math.sqrt(n))
    return SequentialField(np.arange(grid_size + 1) / grid_size, functions, np.stack(cols, axis=-1))
