"""Sweep n for one config and print how the key statistics shrink.

Runs the given config once per n (overriding n_list) and prints a table of
statistic / threshold per check, which makes slow finite-n convergence (or
its absence, for the negative control) visible.

    python3 scripts/convergence_sweep.py --config configs/smoke.cfg --n 100 400 1600 6400
"""

from __future__ import annotations

import argparse
from dataclasses import replace

from deldonsker import harness


def sweep(cfg: harness.ExperimentConfig, ns, workers: int = 1) -> dict:
    table: dict = {}
    for n in ns:
        res = harness.run_experiment(replace(cfg, n_list=(n,)), workers=workers)
        for r in res.rows:
            table.setdefault((r.suite, r.report.name), {})[n] = r.report.statistic / r.report.threshold
    return table


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True)
    ap.add_argument("--n", type=int, nargs="+", required=True)
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args(argv)
    cfg = harness.load_config(a.config)
    table = sweep(cfg, a.n, a.workers)
    print("statistic / threshold (> 1 means the check rejects)")
    print(f"{'suite':<24} {'check':<44}" + "".join(f"{n:>10}" for n in a.n))
    for (suite, name), row in table.items():
        print(f"{suite:<24} {name:<44}" + "".join(f"{row.get(n, float('nan')):>10.3f}" for n in a.n))


if __name__ == "__main__":
    main()
