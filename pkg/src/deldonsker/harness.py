"""Config-driven experiment runner.

A run draws ``replications`` sample paths per ``n`` (replication ``i`` always
uses stream ``(seed, i)``), feeds every requested suite from the same draws,
and turns the per-replication features into ``TestReport`` rows.

Replications are processed in fixed-size chunks; a thread pool maps over
chunks and results are concatenated in chunk order, so the output does not
depend on the number of workers.

Config grammar (one ``key = value`` per line, ``#`` starts a comment, lists
are comma separated, unknown keys are errors)::

    name = donsker_demo
    distribution = normal          # rademacher | uniform_centered | normal | exponential_centered
    sigma = 1.0
    loc = 0.0
    n_list = 1000, 10000
    grid_size = 1200
    schedule = power_law           # none | fixed_k | power_law
    r = 0.5                        # power_law exponent
    k = 0                          # fixed_k count
    selection = random_per_time    # prefix | suffix | random_per_time | static_random
    replications = 10000
    seed = 20240611
    suites = donsker_complete, donsker_deleted, polygonal
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from deldonsker import deletion, oracles, processes, stats
from deldonsker.deletion import DeletionSchedule
from deldonsker.errors import ConfigError
from deldonsker.oracles import LimitLaw
from deldonsker.processes import TestFunction
from deldonsker.sampling import DistributionSpec, SampleSequence, SeededStream, draw_batch

log = logging.getLogger(__name__)

SUITES = (
    "donsker_complete",
    "donsker_deleted",
    "polygonal",
    "empirical_bridge",
    "sequential_km",
    "lemma2_structure",
    "negligibility_violation",
)
MIN_REPLICATIONS = 1000
MIN_GRID = 10
PLAN_STREAM_BASE = 1 << 63
CSV_HEADER = ("suite", "n", "k_star", "statistic", "threshold", "verdict", "test", "expected")

SQRT_PI_OVER_2 = math.sqrt(math.pi / 2.0)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    distribution: DistributionSpec
    n_list: tuple
    grid_size: int
    schedule: DeletionSchedule
    selection: str
    replications: int
    seed: int
    suites: tuple
    # coarse grid for the structural checks (increment correlation, variance
    # deficit, negative control); they only look at a few time points
    structure_grid_size: int = 10
    x_grid_size: int = 512
    overlap_fraction: float = 1.0
    # sup-functional discretization allowance is sup_allowance / sqrt(min(n, grid_size))
    sup_allowance: float = 0.8
    sup_ks_band: float = 2.5
    ks_alpha: float = 0.01
    z_threshold: float = 4.0
    detect_threshold: float = 5.0
    marginal_times: tuple = (0.5, 1.0)
    covariance_times: tuple = (0.3, 0.7)
    km_times: tuple = (0.5, 1.0)
    chunk_size: int = 250

    def __post_init__(self):
        if not self.n_list:
            raise ConfigError("n_list must not be empty")
        if any(int(n) != n or n < 1 for n in self.n_list):
            raise ConfigError(f"n_list entries must be positive integers, got {self.n_list}")
        if not self.suites:
            raise ConfigError("suites must not be empty")
        unknown = [s for s in self.suites if s not in SUITES]
        if unknown:
            raise ConfigError(f"unknown suite(s) {unknown}; expected a subset of {SUITES}")
        if len(set(self.suites)) != len(self.suites):
            raise ConfigError("suites must not repeat")
        if self.replications < MIN_REPLICATIONS:
            raise ConfigError(f"replications must be >= {MIN_REPLICATIONS}, got {self.replications}")
        if self.grid_size < MIN_GRID or self.structure_grid_size < MIN_GRID:
            raise ConfigError(f"grid sizes must be >= {MIN_GRID}")
        if self.selection not in deletion.SELECTIONS:
            raise ConfigError(f"unknown selection {self.selection!r}")
        if not 0 <= self.seed < (1 << 64):
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not 0.0 < self.overlap_fraction <= 1.0:
            raise ConfigError("overlap_fraction must be in (0, 1]")
        if self.chunk_size < 1 or self.x_grid_size < 2:
            raise ConfigError("chunk_size must be >= 1 and x_grid_size >= 2")
        for key in ("marginal_times", "covariance_times", "km_times"):
            for t in getattr(self, key):
                if not 0.0 < t <= 1.0:
                    raise ConfigError(f"{key} must lie in (0, 1], got {t}")
                if abs(t * self.grid_size - round(t * self.grid_size)) > 1e-9:
                    raise ConfigError(f"{key} value {t} is not a point of the {self.grid_size}-grid")
        for key in ("covariance_times", "km_times"):
            if len(getattr(self, key)) != 2:
                raise ConfigError(f"{key} needs exactly two times")
        if "empirical_bridge" in self.suites and not self.distribution.is_continuous:
            raise ConfigError("empirical_bridge needs a continuous distribution")

    def to_dict(self) -> dict:
        """Flat key/value view using the config-file keys."""
        out = {
            "name": self.name,
            "distribution": self.distribution.kind,
            "sigma": self.distribution.sigma,
            "loc": self.distribution.loc,
            "n_list": list(self.n_list),
            "grid_size": self.grid_size,
            "schedule": self.schedule.kind,
            "k": self.schedule.k,
            "r": self.schedule.r,
            "selection": self.selection,
            "replications": self.replications,
            "seed": self.seed,
            "suites": list(self.suites),
        }
        for f in dataclasses.fields(self):
            if f.name not in out and f.name not in ("distribution", "schedule"):
                v = getattr(self, f.name)
                out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


# ---------------------------------------------------------------------------
# config file parsing

def _parse_int(text: str) -> int:
    text = text.strip().replace("_", "")
    try:
        return int(text)
    except ValueError:
        v = float(text)
        if not v.is_integer():
            raise ConfigError(f"expected an integer, got {text!r}") from None
        return int(v)


def _parse_list(text: str, item) -> tuple:
    return tuple(item(p) for p in text.split(",") if p.strip())


_KEYS = {
    "name": str,
    "distribution": str,
    "sigma": float,
    "loc": float,
    "n_list": lambda s: _parse_list(s, _parse_int),
    "grid_size": _parse_int,
    "schedule": str,
    "k": _parse_int,
    "r": float,
    "selection": str,
    "replications": _parse_int,
    "seed": _parse_int,
    "suites": lambda s: _parse_list(s, str.strip),
    "structure_grid_size": _parse_int,
    "x_grid_size": _parse_int,
    "overlap_fraction": float,
    "sup_allowance": float,
    "sup_ks_band": float,
    "ks_alpha": float,
    "z_threshold": float,
    "detect_threshold": float,
    "marginal_times": lambda s: _parse_list(s, float),
    "covariance_times": lambda s: _parse_list(s, float),
    "km_times": lambda s: _parse_list(s, float),
    "chunk_size": _parse_int,
}
_REQUIRED = ("distribution", "n_list", "replications", "seed", "suites")


def parse_config(text: str) -> ExperimentConfig:
    raw: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            raw[key] = _KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    missing = [k for k in _REQUIRED if k not in raw]
    if missing:
        raise ConfigError(f"missing required key(s) {missing}")
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    raw = dict(raw)
    unknown = set(raw) - set(_KEYS)
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)}")
    dist = DistributionSpec(raw.pop("distribution"), float(raw.pop("sigma", 1.0)), float(raw.pop("loc", 0.0)))
    sched = DeletionSchedule(raw.pop("schedule", "none"), int(raw.pop("k", 0)), float(raw.pop("r", 0.5)))
    for key in ("n_list", "suites", "marginal_times", "covariance_times", "km_times"):
        if key in raw:
            raw[key] = tuple(raw[key])
    raw.setdefault("name", "experiment")
    raw.setdefault("grid_size", 100)
    raw.setdefault("selection", "random_per_time")
    return ExperimentConfig(distribution=dist, schedule=sched, **raw)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def config_to_text(cfg: ExperimentConfig) -> str:
    lines = []
    for key, value in cfg.to_dict().items():
        if isinstance(value, list):
            value = ", ".join(str(v) for v in value)
        lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# suites

def _g(t: float, grid: int) -> int:
    return int(round(t * grid))


@dataclass
class _Suite:
    """One suite at one sample size: prepares plans, extracts per-chunk
    features, and evaluates them into reports."""

    cfg: ExperimentConfig
    n: int
    n_index: int
    k_star: int = 0

    def __post_init__(self):
        pass  # subclasses build their plans here

    def stream(self, purpose: int) -> SeededStream:
        return SeededStream(self.cfg.seed, PLAN_STREAM_BASE + 16 * self.n_index + purpose)

    def main_plan(self, grid: int):
        return deletion.make_plan(self.cfg.schedule, self.cfg.selection, self.n, grid, self.stream(0))

    def chunk(self, sample: SampleSequence) -> dict:
        raise NotImplementedError

    def evaluate(self, feats: dict, out: "_SuiteOutput") -> None:
        raise NotImplementedError

    def example(self, sample: SampleSequence):
        return None

    # helpers shared by the path suites
    def _ks(self, out, values, law, name, **kw):
        rep = stats.ks_one_sample(values, law, alpha=self.cfg.ks_alpha, name=name, **kw)
        out.add(rep, overlay=stats.cdf_overlay(values, law))
        return rep


@dataclass
class _SuiteOutput:
    reports: list = field(default_factory=list)
    overlays: dict = field(default_factory=dict)

    def add(self, rep, overlay=None):
        self.reports.append(rep)
        if overlay is not None:
            self.overlays[rep.name] = overlay


class _DonskerSuite(_Suite):
    deleted = False

    def __post_init__(self):
        g = self.cfg.grid_size
        self.plan = self.main_plan(g) if self.deleted else None
        self.k_star = int(self.plan.k_star[-1]) if self.plan is not None else 0
        times = {0.0, *self.cfg.marginal_times, *self.cfg.covariance_times}
        self.times = sorted(times)
        self.cols = [_g(t, g) for t in self.times]

    def path(self, sample):
        centered = sample.centered()
        if self.plan is None:
            return processes.build_partial_sum(centered, self.cfg.grid_size, "step")
        return processes.build_deleted_partial_sum(centered, self.plan, "step")

    def chunk(self, sample):
        return {"cols": self.path(sample).values[:, self.cols]}

    def example(self, sample):
        p = self.path(sample)
        return processes.PathOnGrid(p.times, p.values[0], p.interpolation, p.scale)

    def evaluate(self, feats, out):
        cols = feats["cols"]
        idx = {t: i for i, t in enumerate(self.times)}
        ctx = f"k_star={self.k_star} selection={self.cfg.selection if self.deleted else 'none'}"
        for t in self.cfg.marginal_times:
            self._ks(out, cols[:, idx[t]], LimitLaw.normal_marginal(t), f"ks_marginal_t{t:g}", context=ctx)
        s, t = self.cfg.covariance_times
        out.add(stats.covariance_check(cols, idx[s], idx[t], oracles.bm_covariance(s, t),
                                       threshold=self.cfg.z_threshold, name=f"covariance_{s:g}_{t:g}",
                                       context=ctx))
        out.add(stats.mean_check(cols[:, idx[max(self.times)]], 0.0, threshold=self.cfg.z_threshold,
                                 name="mean_terminal", context=ctx))
        incr = cols[:, idx[t]] - cols[:, idx[s]]
        self._ks(out, incr, LimitLaw.normal_marginal(t - s), f"ks_increment_{s:g}_{t:g}", context=ctx)
        if not self.deleted:
            out.add(stats.increment_correlation_test(cols, idx[0.0], idx[s], idx[t],
                                                     threshold=self.cfg.z_threshold,
                                                     name=f"increment_independence_0_{s:g}_{t:g}", context=ctx))


class DonskerComplete(_DonskerSuite):
    deleted = False


class DonskerDeleted(_DonskerSuite):
    deleted = True


class Polygonal(_Suite):
    def __post_init__(self):
        g = self.cfg.grid_size
        self.plan = self.main_plan(g)
        self.k_star = int(self.plan.k_star[-1])
        self.cols = [_g(t, g) for t in self.cfg.marginal_times]
        self.allowance = self.cfg.sup_allowance / math.sqrt(min(self.n, g))

    def path(self, sample):
        return processes.build_deleted_partial_sum(sample.centered(), self.plan, "polygonal")

    def chunk(self, sample):
        p = self.path(sample)
        return {
            "cols": p.values[:, self.cols],
            "sup": stats.functional_values(p, "sup"),
            "abs_sup": stats.functional_values(p, "abs_sup"),
            "mean_abs": stats.functional_values(p, "mean_abs"),
        }

    def example(self, sample):
        p = self.path(sample)
        return processes.PathOnGrid(p.times, p.values[0], p.interpolation, p.scale)

    def evaluate(self, feats, out):
        cfg = self.cfg
        ctx = f"k_star={self.k_star} selection={cfg.selection} interpolation=polygonal"
        for i, t in enumerate(cfg.marginal_times):
            self._ks(out, feats["cols"][:, i], LimitLaw.normal_marginal(t), f"ks_marginal_t{t:g}", context=ctx)
        band = f"{ctx} band={cfg.sup_ks_band!r}"
        out.add(stats.mean_check(feats["sup"], oracles.SQRT_2_OVER_PI, allowance=self.allowance,
                                 threshold=cfg.z_threshold, name="mean_sup", context=ctx))
        self._ks(out, feats["sup"], LimitLaw("bm_sup"), "ks_sup", critical=cfg.sup_ks_band, context=band)
        out.add(stats.mean_check(feats["abs_sup"], SQRT_PI_OVER_2, allowance=self.allowance,
                                 threshold=cfg.z_threshold, name="mean_abs_sup", context=ctx))
        self._ks(out, feats["abs_sup"], LimitLaw("bm_abs_sup"), "ks_abs_sup", critical=cfg.sup_ks_band,
                 context=band)
        out.add(stats.mean_check(feats["mean_abs"], 2.0 / 3.0 * oracles.SQRT_2_OVER_PI,
                                 threshold=cfg.z_threshold, name="mean_integral_abs", context=ctx))


class EmpiricalBridge(_Suite):
    def __post_init__(self):
        cfg = self.cfg
        self.truth = cfg.distribution
        self.plan = deletion.make_plan(cfg.schedule, cfg.selection, self.n, 1, self.stream(1))
        self.k_star = int(self.plan.k_star[-1])
        self.xs = np.asarray(self.truth.ppf((np.arange(cfg.x_grid_size) + 0.5) / cfg.x_grid_size))
        self.probs = cfg.covariance_times
        self.cov_xs = np.asarray(self.truth.ppf(np.asarray(self.probs)))

    def chunk(self, sample):
        grid = processes.build_empirical(sample, self.truth, self.xs, "scaled", self.plan)
        at = processes.build_empirical(sample, self.truth, self.cov_xs, "scaled", self.plan)
        return {
            "sup": processes.empirical_sup_abs(sample, self.truth, self.plan),
            "grid_sup": np.abs(grid.values).max(axis=1),
            "at": at.values,
        }

    def evaluate(self, feats, out):
        cfg = self.cfg
        law = LimitLaw("bridge_sup")
        grid_ks = stats.ks_statistic(feats["grid_sup"], law)
        ctx = (f"k_star={self.k_star} selection={cfg.selection} band={cfg.sup_ks_band!r} "
               f"sup=exact_over_jumps grid{cfg.x_grid_size}_sup_ks={grid_ks!r}")
        self._ks(out, feats["sup"], law, "ks_sup_abs", critical=cfg.sup_ks_band, context=ctx)
        s, t = self.cov_xs
        target = oracles.bridge_covariance(s, t, self.truth)
        ps, pt = self.probs
        out.add(stats.covariance_check(feats["at"], 0, 1, target, threshold=cfg.z_threshold,
                                       name=f"covariance_F{ps:g}_F{pt:g}", context=f"k_star={self.k_star}"))
        for i, p in enumerate(self.probs):
            out.add(stats.variance_check(feats["at"][:, i], p * (1 - p), threshold=cfg.z_threshold,
                                         name=f"variance_F{p:g}", context=f"k_star={self.k_star}"))


class SequentialKM(_Suite):
    def __post_init__(self):
        cfg = self.cfg
        self.law = cfg.distribution
        median = float(self.law.ppf(0.5))
        self.functions = (TestFunction.identity(), TestFunction.square(), TestFunction.indicator(median))
        self.plan = self.main_plan(cfg.grid_size)
        self.k_star = int(self.plan.k_star[-1])
        self.cols = [_g(t, cfg.grid_size) for t in cfg.km_times]

    def field(self, sample):
        return processes.build_sequential_field(sample, self.functions, self.cfg.grid_size, self.plan)

    def chunk(self, sample):
        v = self.field(sample).values  # (B, G + 1, F)
        return {
            "at": v[:, self.cols, :].reshape(v.shape[0], -1),
            "sum": v.sum(axis=0)[None],
            "sumsq": (v * v).sum(axis=0)[None],
        }

    def example(self, sample):
        f = self.field(sample)
        return processes.SequentialField(f.times, f.functions, f.values[0])

    def evaluate(self, feats, out):
        cfg = self.cfg
        m = feats["at"].shape[0]
        nf = len(self.functions)
        s, t = cfg.km_times
        ctx = f"k_star={self.k_star} selection={cfg.selection}"
        for i, f in enumerate(self.functions):
            for j, g in enumerate(self.functions):
                target = oracles.kiefer_muller_covariance(s, t, f, g, self.law)
                out.add(stats.covariance_check(feats["at"], i, nf + j, target, threshold=cfg.z_threshold,
                                               name=f"covariance_{f.name}@{s:g}_{g.name}@{t:g}", context=ctx))
        sums = feats["sum"].sum(axis=0)
        sumsq = feats["sumsq"].sum(axis=0)
        for j, f in enumerate(self.functions):
            z = stats.max_abs_z_of_means(sums[:, j], sumsq[:, j], m)
            out.add(stats.make_report(f"zero_mean_all_times_{f.name}", z, cfg.z_threshold, m,
                                      f"max |mean|/se over grid; {ctx}",
                                      alpha=None))


class Lemma2Structure(_Suite):
    def __post_init__(self):
        cfg = self.cfg
        self.grid = cfg.structure_grid_size
        sched = cfg.schedule
        if sched.k_star(self.n) == 0:
            sched = DeletionSchedule.fixed(math.isqrt(self.n))
        self.schedule = sched
        self.overlap_plan = deletion.make_overlapping_pair(self.n, self.grid, cfg.overlap_fraction,
                                                           self.stream(2), sched)
        self.var_plan = deletion.make_plan(sched, cfg.selection, self.n, self.grid, self.stream(3))
        self.k_star = int(self.var_plan.k_star[-1])
        mid = self.grid // 2
        self.triple = [mid - 1, mid, mid + 1]
        self.var_cols = [_g(t, self.grid) for t in cfg.marginal_times]

    def chunk(self, sample):
        c = sample.centered()
        complete = processes.build_partial_sum(c, self.grid, "step", normalize=False)
        overlap = processes.build_deleted_partial_sum(c, self.overlap_plan, "step", normalize=False)
        var = processes.build_deleted_partial_sum(c, self.var_plan, "step", normalize=False)
        return {
            "complete": complete.values[:, self.triple],
            "overlap": overlap.values[:, self.triple],
            "var": var.values[:, self.var_cols],
        }

    def evaluate(self, feats, out):
        cfg = self.cfg
        tt = ",".join(f"{g / self.grid:g}" for g in self.triple)
        out.add(stats.increment_correlation_test(feats["complete"], 0, 1, 2, threshold=cfg.z_threshold,
                                                 name="increment_independence_complete",
                                                 context=f"plan=none times={tt}"))
        floor = self.overlap_plan.overlap_floor[self.triple[1]]
        out.add(stats.increment_correlation_test(
            feats["overlap"], 0, 1, 2, threshold=cfg.detect_threshold, name="increment_dependence_overlap",
            context=f"plan=overlapping fraction={cfg.overlap_fraction!r} shared={floor} times={tt}",
            expected="fail"))
        sigma2 = cfg.distribution.variance
        m = self.var_plan.m
        ks = self.var_plan.k_star
        for i, (t, g) in enumerate(zip(cfg.marginal_times, self.var_cols)):
            target = float((m[g] - ks[g]) * sigma2)
            out.add(stats.variance_check(feats["var"][:, i], target, threshold=cfg.z_threshold,
                                         name=f"raw_variance_t{t:g}",
                                         context=f"m={m[g]} k_star={ks[g]} selection={cfg.selection}"))


class NegligibilityViolation(_Suite):
    def __post_init__(self):
        cfg = self.cfg
        self.grid = cfg.structure_grid_size
        self.schedule = DeletionSchedule.fixed(self.n // 2)
        self.plan = deletion.make_plan(self.schedule, cfg.selection, self.n, self.grid, self.stream(4))
        self.k_star = int(self.plan.k_star[-1])

    def chunk(self, sample):
        p = processes.build_deleted_partial_sum(sample.centered(), self.plan, "step")
        return {"terminal": p.values[:, -1]}

    def evaluate(self, feats, out):
        cfg = self.cfg
        target = (self.n - self.k_star) / self.n
        ctx = f"k_star={self.k_star} ratio={self.k_star / self.n!r}"
        out.add(stats.variance_check(feats["terminal"], target, threshold=cfg.z_threshold,
                                     name="terminal_variance_deficit", context=ctx))
        self._ks(out, feats["terminal"], LimitLaw.normal_marginal(1.0), "ks_terminal_vs_standard_normal",
                 context=ctx, expected="fail")


SUITE_CLASSES = {
    "donsker_complete": DonskerComplete,
    "donsker_deleted": DonskerDeleted,
    "polygonal": Polygonal,
    "empirical_bridge": EmpiricalBridge,
    "sequential_km": SequentialKM,
    "lemma2_structure": Lemma2Structure,
    "negligibility_violation": NegligibilityViolation,
}


# ---------------------------------------------------------------------------
# running

@dataclass(frozen=True)
class ReportRow:
    suite: str
    n: int
    k_star: int
    report: stats.TestReport

    def to_dict(self) -> dict:
        return {"suite": self.suite, "n": self.n, "k_star": self.k_star, **self.report.to_dict()}


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list = field(default_factory=list)
    overlays: dict = field(default_factory=dict)   # file stem -> (points, 3) array
    examples: dict = field(default_factory=dict)   # file stem -> PathOnGrid | SequentialField
    timings: dict = field(default_factory=dict)
    complete: bool = True
    errors: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.complete and all(r.report.as_expected for r in self.rows)

    def by_suite(self) -> dict:
        out: dict = {}
        for r in self.rows:
            out.setdefault(r.suite, []).append(r)
        return out


def _chunks(m: int, size: int):
    return [(a, min(a + size, m)) for a in range(0, m, size)]


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    result = ExperimentResult(cfg)
    for n_index, n in enumerate(cfg.n_list):
        try:
            _run_one_n(cfg, n, n_index, workers, result)
        except MemoryError as exc:
            log.error("out of memory at n=%d: %s", n, exc)
            result.complete = False
            result.errors.append(f"n={n}: out of memory")
    return result


def _run_one_n(cfg, n, n_index, workers, result):
    t0 = time.perf_counter()
    suites = {name: SUITE_CLASSES[name](cfg, n, n_index) for name in cfg.suites}
    t1 = time.perf_counter()

    def work(bounds):
        a, b = bounds
        sample = draw_batch(cfg.distribution, n, cfg.seed, range(a, b))
        return {name: s.chunk(sample) for name, s in suites.items()}

    bounds = _chunks(cfg.replications, cfg.chunk_size)
    if workers == 1:
        parts = [work(b) for b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, bounds))
    t2 = time.perf_counter()

    first = draw_batch(cfg.distribution, n, cfg.seed, [0])
    for name, suite in suites.items():
        feats = {k: np.concatenate([p[name][k] for p in parts]) for k in parts[0][name]}
        out = _SuiteOutput()
        suite.evaluate(feats, out)
        for rep in out.reports:
            result.rows.append(ReportRow(name, n, suite.k_star, rep))
        for test, arr in out.overlays.items():
            result.overlays[f"cdf_{name}_n{n}_{test}"] = arr
        ex = suite.example(first)
        if ex is not None:
            kind = "field" if isinstance(ex, processes.SequentialField) else "path"
            result.examples[f"{kind}_{name}_n{n}"] = ex
    t3 = time.perf_counter()
    result.timings[f"n={n}"] = {"prepare": t1 - t0, "simulate": t2 - t1, "evaluate": t3 - t2}


# ---------------------------------------------------------------------------
# output

def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _write_matrix_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def emit_report(result: ExperimentResult, fmt: str, out_path) -> Path:
    """Write the report table as ``csv`` or ``json`` to ``out_path``, plus
    cdf-overlay and example-path CSVs in the same directory."""
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown report format {fmt!r}")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        _write_matrix_csv(
            out_path,
            CSV_HEADER,
            [(r.suite, r.n, r.k_star, r.report.statistic, r.report.threshold, r.report.verdict,
              r.report.name, r.report.expected) for r in result.rows],
        )
    else:
        doc = {
            "config": result.config.to_dict(),
            "complete": result.complete,
            "errors": result.errors,
            "passed": result.passed,
            "reports": [r.to_dict() for r in result.rows],
        }
        out_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    for stem, arr in sorted(result.overlays.items()):
        _write_matrix_csv(out_path.parent / f"{stem}.csv", ("x", "empirical", "oracle"), arr)
    for stem, ex in sorted(result.examples.items()):
        ex.to_csv(out_path.parent / f"{stem}.csv")
    return out_path


def summary_lines(result: ExperimentResult):
    for r in result.rows:
        rep = r.report
        mark = "PASS" if rep.as_expected else "FAIL"
        yield (f"{mark} {r.suite} n={r.n} k*={r.k_star} {rep.name}: statistic={rep.statistic:.4g} "
               f"threshold={rep.threshold:.4g} verdict={rep.verdict} expected={rep.expected}")
