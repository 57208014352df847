"""Deletion schedules and concrete deleted-index sets on a time grid.

Indices are 1-based throughout, as in the sums they describe. Grid time
``g`` (``0 <= g <= grid_size``) sits at ``t_g = g / grid_size`` and sees the
prefix ``{1, ..., m_g}`` with ``m_g = floor(n * g / grid_size)``, computed in
integer arithmetic.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse

from deldonsker.errors import ConfigError, DomainError
from deldonsker.sampling import SeededStream

log = logging.getLogger(__name__)

SCHEDULE_KINDS = ("none", "fixed_k", "power_law")
SELECTIONS = ("prefix", "suffix", "random_per_time", "static_random")

_EMPTY = np.zeros(0, dtype=np.int64)


@dataclass(frozen=True)
class DeletionSchedule:
    """How many items to delete from a prefix of length m.

    fixed_k:   k*(m) = min(k, m - 1)
    power_law: k*(m) = min(floor(m**r), m - 1), 0 < r < 1
    none:      k*(m) = 0
    """

    kind: str = "none"
    k: int = 0
    r: float = 0.5

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ConfigError(f"unknown schedule kind {self.kind!r}; expected one of {SCHEDULE_KINDS}")
        if self.kind == "fixed_k" and (int(self.k) != self.k or self.k < 0):
            raise ConfigError(f"fixed_k needs a non-negative integer k, got {self.k!r}")
        if self.kind == "power_law" and not (0.0 < self.r < 1.0):
            raise ConfigError(f"power_law needs 0 < r < 1, got {self.r!r}")

    @classmethod
    def fixed(cls, k: int) -> "DeletionSchedule":
        return cls("fixed_k", k=int(k))

    @classmethod
    def power(cls, r: float) -> "DeletionSchedule":
        return cls("power_law", r=float(r))

    def k_star(self, m: int) -> int:
        if m <= 0 or self.kind == "none":
            return 0
        if self.kind == "fixed_k":
            raw = int(self.k)
        else:
            # guard against m**r landing a hair below an exact integer
            raw = math.floor(m**self.r + 1e-9)
        return max(0, min(raw, m - 1))


def negligibility_ratio(schedule: DeletionSchedule, n: int) -> float:
    """k*(n) / n; tends to zero exactly when deletion is asymptotically negligible."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return schedule.k_star(n) / n


def grid_prefix_lengths(n: int, grid_size: int) -> np.ndarray:
    """m_g = floor(n g / grid_size) for g = 0..grid_size."""
    g = np.arange(grid_size + 1, dtype=np.int64)
    return (n * g) // grid_size


@dataclass(frozen=True, eq=False)
class DeletionPlan:
    """Deleted index sets per grid time.

    ``deleted[g]`` is a sorted int64 array of 1-based indices within
    ``{1..m_g}``. ``overlap_floor`` is only set by ``make_overlapping_pair``.
    """

    n: int
    grid_size: int
    selection: str
    deleted: tuple
    warnings: tuple = ()
    overlap_floor: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.n < 1 or self.grid_size < 1:
            raise DomainError("plan needs n >= 1 and grid_size >= 1")
        if self.selection not in SELECTIONS:
            raise ConfigError(f"unknown selection {self.selection!r}; expected one of {SELECTIONS}")
        if len(self.deleted) != self.grid_size + 1:
            raise DomainError("plan needs one deleted set per grid point 0..grid_size")
        m = self.m
        sets = []
        for g, d in enumerate(self.deleted):
            d = np.asarray(d, dtype=np.int64)
            if d.size and (d[0] < 1 or d[-1] > m[g] or np.any(np.diff(d) <= 0)):
                raise DomainError(f"deleted set at grid point {g} must be sorted, unique and within 1..{m[g]}")
            sets.append(d)
        object.__setattr__(self, "deleted", tuple(sets))

    def __eq__(self, other):
        if not isinstance(other, DeletionPlan):
            return NotImplemented
        return (
            (self.n, self.grid_size, self.selection) == (other.n, other.grid_size, other.selection)
            and all(np.array_equal(a, b) for a, b in zip(self.deleted, other.deleted))
        )

    __hash__ = None

    @classmethod
    def empty(cls, n: int, grid_size: int) -> "DeletionPlan":
        return cls(n, grid_size, "prefix", tuple(_EMPTY for _ in range(grid_size + 1)))

    @property
    def m(self) -> np.ndarray:
        return grid_prefix_lengths(self.n, self.grid_size)

    @property
    def k_star(self) -> np.ndarray:
        return np.array([d.size for d in self.deleted], dtype=np.int64)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.grid_size + 1) / self.grid_size

    @property
    def is_empty(self) -> bool:
        return all(d.size == 0 for d in self.deleted)

    @cached_property
    def deletion_matrix(self) -> sparse.csr_array:
        """(grid_size + 1, n) 0/1 matrix; row g selects deleted(g) (0-based columns)."""
        rows = np.repeat(np.arange(self.grid_size + 1), [d.size for d in self.deleted])
        cols = np.concatenate(self.deleted + (_EMPTY,)) - 1
        data = np.ones(cols.size)
        return sparse.csr_array((data, (rows, cols)), shape=(self.grid_size + 1, self.n))

    def retained(self, g: int) -> np.ndarray:
        """1-based retained indices {1..m_g} minus deleted(g)."""
        return np.setdiff1d(np.arange(1, self.m[g] + 1), self.deleted[g], assume_unique=True)

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "grid": self.grid_size,
                "selection": self.selection,
                "deleted": [d.tolist() for d in self.deleted],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "DeletionPlan":
        obj = json.loads(text)
        unknown = set(obj) - {"n", "grid", "selection", "deleted"}
        if unknown:
            raise ConfigError(f"unknown plan keys {sorted(unknown)}")
        return cls(
            int(obj["n"]),
            int(obj["grid"]),
            obj["selection"],
            tuple(np.asarray(d, dtype=np.int64) for d in obj["deleted"]),
        )


def _random_subset(rng: np.random.Generator, pool: np.ndarray, k: int) -> np.ndarray:
    if k == 0:
        return _EMPTY
    return np.sort(rng.choice(pool, size=k, replace=False))


def make_plan(
    schedule: DeletionSchedule,
    selection: str,
    n: int,
    grid_size: int,
    stream: SeededStream,
) -> DeletionPlan:
    if selection not in SELECTIONS:
        raise ConfigError(f"unknown selection {selection!r}; expected one of {SELECTIONS}")
    if n < 1 or grid_size < 1:
        raise DomainError("make_plan needs n >= 1 and grid_size >= 1")
    warns = []
    if schedule.kind == "fixed_k" and schedule.k >= n:
        msg = f"fixed_k k={schedule.k} >= n={n}; clamped to k*={n - 1}"
        log.warning(msg)
        warns.append(msg)

    m = grid_prefix_lengths(n, grid_size)
    rng = stream.generator()
    deleted = []
    if selection == "static_random":
        order = rng.permutation(np.arange(1, n + 1, dtype=np.int64))
        pool = np.sort(order[: schedule.k_star(n)])
        for mg in m:
            deleted.append(pool[pool <= mg])
    else:
        for mg in m:
            k = schedule.k_star(int(mg))
            if k == 0:
                deleted.append(_EMPTY)
            elif selection == "prefix":
                deleted.append(np.arange(1, k + 1, dtype=np.int64))
            elif selection == "suffix":
                deleted.append(np.arange(mg - k + 1, mg + 1, dtype=np.int64))
            else:
                deleted.append(_random_subset(rng, np.arange(1, mg + 1, dtype=np.int64), k))
    return DeletionPlan(n, grid_size, selection, tuple(deleted), tuple(warns))


def make_overlapping_pair(
    n: int,
    grid_size: int,
    overlap_fraction: float,
    stream: SeededStream,
    schedule: DeletionSchedule,
) -> DeletionPlan:
    """Random per-time plan whose consecutive increments share summands.

    Each interior grid time g deletes ``ceil(overlap_fraction * k*)`` indices
    taken from the block (m_{g-2}, m_{g-1}] that entered one step earlier and
    were retained at g - 1; the remaining deletions come from older indices
    that were retained at g - 1. Everything deleted at g is retained again at
    g + 1. Each toggled index therefore appears with opposite signs in the
    increments over [t_{g-1}, t_g] and [t_g, t_{g+1}], which makes their
    covariance strictly negative. ``overlap_floor[g]`` records the number of
    such shared indices guaranteed at g.
    """
    if not (0.0 < overlap_fraction <= 1.0):
        raise ConfigError(f"overlap_fraction must be in (0, 1], got {overlap_fraction!r}")
    if n < 1 or grid_size < 1:
        raise DomainError("make_overlapping_pair needs n >= 1 and grid_size >= 1")
    if schedule.k_star(n) == 0:
        raise DomainError("overlap is impossible when the schedule deletes nothing (k* = 0)")

    m = grid_prefix_lengths(n, grid_size)
    rng = stream.generator()
    deleted = [_EMPTY]
    toggles = [_EMPTY]
    for g in range(1, grid_size + 1):
        k = schedule.k_star(int(m[g]))
        prev = deleted[g - 1]
        if g >= 2:
            block = np.arange(m[g - 2] + 1, m[g - 1] + 1, dtype=np.int64)
            block = np.setdiff1d(block, prev, assume_unique=True)
            q = min(math.ceil(overlap_fraction * k), block.size, k)
            toggled = _random_subset(rng, block, q)
            older = np.setdiff1d(np.arange(1, m[g - 2] + 1, dtype=np.int64), prev, assume_unique=True)
        else:
            toggled = _EMPTY
            older = np.arange(1, m[g] + 1, dtype=np.int64)
        rest = k - toggled.size
        if rest > older.size:
            # small prefixes: fall back to anything not already toggled
            older = np.setdiff1d(np.arange(1, m[g] + 1, dtype=np.int64), toggled, assume_unique=True)
        deleted.append(np.union1d(toggled, _random_subset(rng, older, rest)))
        toggles.append(toggled)
    # a toggle at g counts only if the index is retained again at g + 1
    floors = [0] * (grid_size + 1)
    for g in range(1, grid_size):
        floors[g] = int(np.setdiff1d(toggles[g], deleted[g + 1]).size)
    return DeletionPlan(n, grid_size, "random_per_time", tuple(deleted), (), tuple(floors))


def increment_support(plan: DeletionPlan, g: int) -> set:
    """Indices whose coefficient changes between grid times g and g + 1."""
    before = set(plan.retained(g).tolist())
    after = set(plan.retained(g + 1).tolist())
    return before ^ after
