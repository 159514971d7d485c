#!/usr/bin/env python3
"""Desk-scale coverage experiment: semantic scripted policy vs random monkey.

Runs every bundled SimApp fixture for 15 steps over seeds 0..9 and prints the
per-app table plus policy medians (and writes benchmark.csv).
"""

from __future__ import annotations

import argparse
from pathlib import Path

from ui_miner.bundled import load_suite, semantic_policy
from ui_miner.explorer import SessionConfig, run_benchmark
from ui_miner.policy import RandomPolicy


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--apps", type=Path, default=None, help="fixture dir (default: bundled)")
    parser.add_argument("--budget-steps", type=int, default=15)
    parser.add_argument("--seeds", type=int, default=10, help="seeds 0..N-1")
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--out", type=Path, default=Path("benchmark.csv"))
    args = parser.parse_args()

    apps = load_suite(args.apps)
    config = SessionConfig(max_steps=args.budget_steps, wait_ms=0, restart_on_exit=True)
    report = run_benchmark(
        apps,
        [semantic_policy(), RandomPolicy()],
        config,
        seeds=range(args.seeds),
        jobs=args.jobs,
    )
    print(report.to_table())
    args.out.write_text(report.to_csv(), encoding="utf-8")
    print(f"\nwrote {args.out}")
    gap = report.medians["scripted"] - report.medians["random"]
    print(f"median gap (scripted - random): {gap:.3f}")


if __name__ == "__main__":
    main()
