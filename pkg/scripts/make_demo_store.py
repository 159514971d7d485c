#!/usr/bin/env python3
"""Build a small demo dataset store by exploring the bundled fixtures.

Useful for exercising `ui-miner stats/retrieve/annotate-serve` and the
annotation webapp against realistic pending records:

    python scripts/make_demo_store.py --out demo_store
    ui-miner annotate-serve --store demo_store --port 8600
"""

from __future__ import annotations

import argparse
from pathlib import Path

from ui_miner.bundled import load_suite, semantic_policy
from ui_miner.device import SimDriver
from ui_miner.explorer import SessionConfig, run_session
from ui_miner.store import DatasetStore


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("demo_store"))
    parser.add_argument("--budget-steps", type=int, default=8)
    args = parser.parse_args()

    store = DatasetStore(args.out)
    clock_ms = [1_700_000_000_000]

    def clock() -> int:
        clock_ms[0] += 1000
        return clock_ms[0]

    config = SessionConfig(max_steps=args.budget_steps, wait_ms=0, restart_on_exit=False)
    total = 0
    for app in load_suite():
        driver = SimDriver(app, clock=clock)
        trace = run_session(driver, semantic_policy(), config, clock=clock)
        for capture, stable in zip(trace.captures, trace.capture_stable):
            store.ingest_capture(capture, stable=stable)
            total += 1
    print(f"ingested {total} captures into {args.out}")
    print(store.corpus_stats().to_table())


if __name__ == "__main__":
    main()
