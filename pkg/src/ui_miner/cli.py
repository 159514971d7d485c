"""Single entry point: explore, benchmark, filter, stats, retrieve, annotate-serve."""

from __future__ import annotations

import json
import shutil
import sys
import time
from pathlib import Path
from typing import Callable

import click

from ui_miner import bundled
from ui_miner.device import (
    AdbDriver,
    DeviceError,
    Driver,
    SimDriver,
    load_sim_app,
)
from ui_miner.explorer import (
    ExplorerError,
    SessionConfig,
    activity_coverage,
    run_benchmark,
    run_session,
    save_trace,
)
from ui_miner.llm import BackendError, HttpBackend, load_scripted_backend
from ui_miner.noise import (
    HttpOverlayScorer,
    load_type_index_table,
    DEFAULT_TYPE_TABLE,
    retention_fraction,
    run_pipeline,
)
from ui_miner.policy import LlmPolicy, RandomPolicy, load_prompt_template
from ui_miner.store import DatasetStore, StoreError

_OPERATIONAL_ERRORS = (DeviceError, ExplorerError, BackendError, StoreError, OSError, ValueError)


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


def _make_clock(fixed_clock: int | None) -> Callable[[], int]:
    if fixed_clock is not None:
        return lambda: fixed_clock
    return lambda: time.time_ns() // 1_000_000


def _make_driver(spec: str, app_id: str, adb_path: str | None, clock: Callable[[], int]) -> Driver:
    if spec == "adb":
        if not app_id:
            raise click.UsageError("--app-id is required with --device adb")
        return AdbDriver(app_id=app_id, adb_path=adb_path, clock=clock)
    if spec.startswith("sim:"):
        ref = spec[len("sim:") :]
        path = Path(ref)
        if not path.exists():
            path = bundled.bundled_fixture_path(ref)
        if not path.exists():
            raise click.UsageError(f"no sim fixture {ref!r}")
        return SimDriver(load_sim_app(path), clock=clock)
    raise click.UsageError(f"--device must be adb or sim:<fixture>, got {spec!r}")


def _make_policy(spec: str, llm_url: str | None, prompt_file: str | None):
    template = load_prompt_template(prompt_file) if prompt_file else None
    if spec == "random":
        return RandomPolicy()
    if spec == "llm":
        backend = HttpBackend(url=llm_url or "")
        if template is not None:
            return LlmPolicy(backend=backend, template=template)
        return LlmPolicy(backend=backend)
    if spec == "scripted" or spec.startswith("scripted:"):
        _, _, rules_ref = spec.partition(":")
        rules_path = Path(rules_ref) if rules_ref else bundled.SEMANTIC_RULES
        backend = load_scripted_backend(str(rules_path))
        if template is not None:
            return LlmPolicy(backend=backend, template=template, name="scripted")
        return LlmPolicy(backend=backend, name="scripted")
    raise click.UsageError(f"--policy must be random, llm or scripted:<rules>, got {spec!r}")


def _parse_seeds(spec: str) -> list[int]:
    spec = spec.strip()
    if ".." in spec:
        lo, _, hi = spec.partition("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in spec.split(",") if s.strip()]


@click.group()
def main() -> None:
    """Mine, filter, store and validate mobile UI screens."""


@main.command()
@click.option("--device", "device_spec", required=True, help="adb or sim:<fixture>")
@click.option("--policy", "policy_spec", required=True, help="random, llm or scripted:<rules>")
@click.option("--budget-steps", type=int, default=None)
@click.option("--budget-minutes", type=float, default=None)
@click.option("--wait-ms", type=int, default=2000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--app-id", default="", help="package under test (adb only)")
@click.option("--adb-path", default=None, envvar="UI_MINER_ADB")
@click.option("--llm-url", default=None, envvar="UI_MINER_LLM_URL")
@click.option("--prompt-file", default=None, type=click.Path(exists=True))
@click.option("--restart-on-exit/--no-restart-on-exit", default=False)
@click.option("--fixed-clock", type=int, default=None, help="freeze timestamps (testing)")
def explore(
    device_spec: str,
    policy_spec: str,
    budget_steps: int | None,
    budget_minutes: float | None,
    wait_ms: int,
    seed: int,
    out_dir: str,
    app_id: str,
    adb_path: str | None,
    llm_url: str | None,
    prompt_file: str | None,
    restart_on_exit: bool,
    fixed_clock: int | None,
) -> None:
    """Run one exploration session and persist its trace."""
    if (budget_steps is None) == (budget_minutes is None):
        raise click.UsageError("set exactly one of --budget-steps / --budget-minutes")
    clock = _make_clock(fixed_clock)
    driver = _make_driver(device_spec, app_id, adb_path, clock)
    policy = _make_policy(policy_spec, llm_url, prompt_file)
    config = SessionConfig(
        max_steps=budget_steps,
        max_duration_ms=None if budget_minutes is None else int(budget_minutes * 60_000),
        wait_ms=wait_ms,
        restart_on_exit=restart_on_exit,
        rng_seed=seed,
    )
    try:
        trace = run_session(driver, policy, config, clock=clock)
        trace_path = save_trace(trace, out_dir)
        declared = driver.list_activities()
        coverage = activity_coverage(trace, declared) if declared else 0.0
    except _OPERATIONAL_ERRORS as exc:
        _fail(exc)
        return
    click.echo(f"trace written to {trace_path}")
    click.echo(f"captures: {len(trace.captures)}  visited: {len(trace.visited_activities)}")
    click.echo(f"coverage: {coverage:.3f}")
    if trace.aborted:
        click.echo(f"aborted: {trace.abort_reason}", err=True)


@main.command()
@click.option("--apps", "apps_dir", required=True, type=click.Path(exists=True))
@click.option("--policies", default="scripted,random", show_default=True)
@click.option("--seeds", default="0..9", show_default=True)
@click.option("--out", "out_csv", required=True, type=click.Path())
@click.option("--budget-steps", type=int, default=15, show_default=True)
@click.option("--wait-ms", type=int, default=0, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--llm-url", default=None, envvar="UI_MINER_LLM_URL")
@click.option("--prompt-file", default=None, type=click.Path(exists=True))
@click.option("--fixed-clock", type=int, default=None)
def benchmark(
    apps_dir: str,
    policies: str,
    seeds: str,
    out_csv: str,
    budget_steps: int,
    wait_ms: int,
    jobs: int,
    llm_url: str | None,
    prompt_file: str | None,
    fixed_clock: int | None,
) -> None:
    """Compare policies by activity coverage over a SimApp fixture suite."""
    clock = _make_clock(fixed_clock)
    try:
        apps = bundled.load_suite(Path(apps_dir))
        policy_objs = [
            _make_policy(spec.strip(), llm_url, prompt_file)
            for spec in policies.split(",")
            if spec.strip()
        ]
        config = SessionConfig(
            max_steps=budget_steps, wait_ms=wait_ms, restart_on_exit=True, rng_seed=0
        )
        report = run_benchmark(
            apps, policy_objs, config, _parse_seeds(seeds), jobs=jobs, clock=clock
        )
        Path(out_csv).write_text(report.to_csv(), encoding="utf-8")
    except _OPERATIONAL_ERRORS as exc:
        _fail(exc)
        return
    click.echo(report.to_table())
    click.echo(f"report written to {out_csv}")


@main.command(name="filter")
@click.option("--in", "in_dir", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.option("--scorer-url", default=None)
@click.option("--type-index-file", default=None, type=click.Path(exists=True))
@click.option(
    "--counts-manifest",
    default=None,
    type=click.Path(exists=True),
    help="JSON {total, auto_removed, human_removed}: report retention arithmetic only",
)
def filter_cmd(
    in_dir: str | None,
    out_dir: str | None,
    scorer_url: str | None,
    type_index_file: str | None,
    counts_manifest: str | None,
) -> None:
    """Run the automated noise pipeline over a store, or check count arithmetic."""
    try:
        if counts_manifest is not None:
            counts = json.loads(Path(counts_manifest).read_text(encoding="utf-8"))
            retention = retention_fraction(
                int(counts["total"]),
                int(counts.get("auto_removed", 0)),
                int(counts.get("human_removed", 0)),
            )
            click.echo(f"retention {retention * 100:.1f}%")
            return
        if in_dir is None or out_dir is None:
            raise click.UsageError("--in and --out are required without --counts-manifest")
        table = load_type_index_table(type_index_file) if type_index_file else DEFAULT_TYPE_TABLE
        scorer = HttpOverlayScorer(scorer_url) if scorer_url else None
        in_store = DatasetStore(in_dir, table=table)
        records = in_store.list_records()
        for record in records:
            in_store.load_tree(record)
        report = run_pipeline(records, table=table, scorer=scorer)
        out_store = DatasetStore(out_dir, table=table)
        for record in records:
            for rel in (record.screenshot_path, record.dump_path):
                src = in_store.blob_path(rel)
                dst = out_store.blob_path(rel)
                dst.parent.mkdir(parents=True, exist_ok=True)
                if src.exists():
                    shutil.copyfile(src, dst)
            out_store.put_record(record)
        (Path(out_dir) / "pipeline_report.json").write_text(
            report.to_json(), encoding="utf-8"
        )
    except _OPERATIONAL_ERRORS as exc:
        _fail(exc)
        return
    click.echo(report.to_table())


@main.command()
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["csv", "table"]), default="table")
def stats(store_dir: str, fmt: str) -> None:
    """Corpus statistics: per-category, per-status, retention, per-app counts."""
    try:
        report = DatasetStore(store_dir).corpus_stats()
    except _OPERATIONAL_ERRORS as exc:
        _fail(exc)
        return
    click.echo(report.to_csv() if fmt == "csv" else report.to_table())


@main.command()
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True))
@click.option("--query", "query_id", required=True)
@click.option("--top", "k", type=int, default=5, show_default=True)
def retrieve(store_dir: str, query_id: str, k: int) -> None:
    """Top-k validated records most similar to the query by layout distance."""
    try:
        hits = DatasetStore(store_dir).retrieve_similar(query_id, k)
    except _OPERATIONAL_ERRORS as exc:
        _fail(exc)
        return
    for record, distance in hits:
        click.echo(f"{record.record_id}  {distance:.4f}  {record.app_id}")


@main.command(name="annotate-serve")
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True))
@click.option("--port", type=int, default=8600, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
def annotate_serve(store_dir: str, port: int, host: str) -> None:
    """Serve the annotation API (and screenshot blobs) for the webapp."""
    import uvicorn

    from ui_miner.annotation import create_app

    try:
        store = DatasetStore(store_dir)
    except _OPERATIONAL_ERRORS as exc:
        _fail(exc)
        return
    uvicorn.run(create_app(store), host=host, port=port)


if __name__ == "__main__":
    main()
