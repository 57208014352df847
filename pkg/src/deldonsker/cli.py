"""Command line entry point: simulate, verify, soak.

Exit status is 0 iff every report matched its expected verdict (and, for
``soak``, no check's unexpected-outcome count exceeded its binomial bound).
"""

from __future__ import annotations

import argparse
import json
import logging
import secrets
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
from scipy.stats import binom

from deldonsker import harness
from deldonsker.errors import ConfigError, DomainError

# nominal miss rate assumed for negative controls during a soak
NEGATIVE_CONTROL_MISS_RATE = 0.01
SOAK_CONFIDENCE = 0.999


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="deldonsker", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a config and write results.csv / results.json")
    sim.add_argument("--config", required=True, type=Path)
    sim.add_argument("--workers", type=_positive_int, default=1)
    sim.add_argument("--out", type=Path, default=None, help="output directory (default results/<name>)")

    ver = sub.add_parser("verify", help="run a config and print one line per check")
    ver.add_argument("--config", required=True, type=Path)
    ver.add_argument("--workers", type=_positive_int, default=1)

    soak = sub.add_parser("soak", help="repeat a config with fresh seeds and tally unexpected outcomes")
    soak.add_argument("--config", required=True, type=Path)
    soak.add_argument("--runs", type=_positive_int, required=True)
    soak.add_argument("--workers", type=_positive_int, default=1)
    soak.add_argument("--base-seed", type=int, default=None,
                      help="derive the run seeds from this value instead of fresh entropy")
    soak.add_argument("--out", type=Path, default=None, help="optional JSON summary path")
    return p


def cmd_simulate(args) -> int:
    cfg = harness.load_config(args.config)
    out = args.out or Path("results") / cfg.name
    result = harness.run_experiment(cfg, workers=args.workers)
    harness.emit_report(result, "csv", out / "results.csv")
    harness.emit_report(result, "json", out / "results.json")
    (out / "timings.json").write_text(json.dumps(result.timings, indent=2, sort_keys=True) + "\n")
    bad = [r for r in result.rows if not r.report.as_expected]
    print(f"{len(result.rows)} checks, {len(bad)} unexpected; results in {out}")
    for line in harness.summary_lines(result):
        if line.startswith("FAIL"):
            print(line)
    for err in result.errors:
        print(f"ERROR {err}")
    return 0 if result.passed else 1


def cmd_verify(args) -> int:
    cfg = harness.load_config(args.config)
    result = harness.run_experiment(cfg, workers=args.workers)
    for line in harness.summary_lines(result):
        print(line)
    for err in result.errors:
        print(f"ERROR {err}")
    print("OK" if result.passed else "NOT OK")
    return 0 if result.passed else 1


def soak_bound(runs: int, rate: float) -> int:
    """Largest unexpected-outcome count still consistent with ``rate``."""
    return int(binom.ppf(SOAK_CONFIDENCE, runs, rate))


def cmd_soak(args) -> int:
    cfg = harness.load_config(args.config)
    base = secrets.randbits(64) if args.base_seed is None else args.base_seed
    seeds = [int(s) for s in np.random.SeedSequence(base).generate_state(args.runs, dtype=np.uint64)]
    tally: dict = {}
    for seed in seeds:
        result = harness.run_experiment(replace(cfg, seed=seed), workers=args.workers)
        if not result.complete:
            print(f"seed={seed}: incomplete run: {result.errors}")
            return 1
        for r in result.rows:
            key = (r.suite, r.n, r.report.name)
            entry = tally.setdefault(key, {"misses": 0, "rate": r.report.alpha, "expected": r.report.expected})
            entry["misses"] += not r.report.as_expected
    ok = True
    rows = []
    for (suite, n, name), e in sorted(tally.items()):
        rate = e["rate"] if e["expected"] == "pass" and e["rate"] is not None else NEGATIVE_CONTROL_MISS_RATE
        bound = soak_bound(args.runs, rate)
        good = e["misses"] <= bound
        ok &= good
        rows.append({"suite": suite, "n": n, "test": name, "expected": e["expected"], "misses": e["misses"],
                     "runs": args.runs, "nominal_rate": rate, "bound": bound, "ok": good})
        print(f"{'ok ' if good else 'BAD'} {suite} n={n} {name}: {e['misses']}/{args.runs} unexpected "
              f"(bound {bound} at rate {rate:.3g})")
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(json.dumps({"base_seed": base, "seeds": seeds, "checks": rows}, indent=2) + "\n")
    return 0 if ok else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return {"simulate": cmd_simulate, "verify": cmd_verify, "soak": cmd_soak}[args.command](args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
