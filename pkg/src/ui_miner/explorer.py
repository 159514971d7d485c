"""Exploration session loop with coverage accounting and trace persistence."""

from __future__ import annotations

import csv
import io
import json
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Protocol, Sequence

from ui_miner.device import (
    Action,
    DeviceUnavailable,
    Driver,
    ScreenCapture,
    SimApp,
    SimDriver,
    TargetNotFound,
    wait_for_render,
)
from ui_miner.noise import DEFAULT_TYPE_TABLE, structural_hash
from ui_miner.policy import ParsedPlan


class ExplorerError(Exception):
    pass


class EmptyDeclared(ExplorerError):
    pass


class EmptyBenchmark(ExplorerError):
    pass


class Policy(Protocol):
    name: str

    def next_plan(self, capture: ScreenCapture, rng_seed: int = 0) -> ParsedPlan: ...


@dataclass(frozen=True)
class SessionConfig:
    """Budget and loop knobs for one exploration session."""

    max_steps: int | None = None
    max_duration_ms: int | None = None
    wait_ms: int = 2000
    max_render_retries: int = 2
    restart_on_exit: bool = False
    back_on_stuck_after: int = 3
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if (self.max_steps is None) == (self.max_duration_ms is None):
            raise ValueError("exactly one of max_steps / max_duration_ms must be set")
        if self.wait_ms < 0:
            raise ValueError("wait_ms must be >= 0")


@dataclass
class ExecutedStep:
    action: Action
    applied: bool
    note: str = ""


@dataclass
class PlanRecord:
    source: str  # policy | stuck_recovery | login_hook
    steps: tuple[Action, ...] = ()
    executed: list[ExecutedStep] = field(default_factory=list)
    fragments: tuple[str, ...] = ()
    note: str = ""


@dataclass
class SessionTrace:
    app_id: str
    policy_name: str
    captures: list[ScreenCapture] = field(default_factory=list)
    capture_stable: list[bool] = field(default_factory=list)
    actions: list[PlanRecord] = field(default_factory=list)
    started_at: int = 0
    ended_at: int = 0
    aborted: bool = False
    abort_reason: str = ""

    @property
    def visited_activities(self) -> set[str]:
        return {c.activity_name for c in self.captures}


def _step_seed(base_seed: int, step: int) -> int:
    return base_seed * 1_000_003 + step


def run_session(
    driver: Driver,
    policy: Policy,
    config: SessionConfig,
    clock: Callable[[], int] | None = None,
) -> SessionTrace:
    """Explore until the budget runs out: wait, capture, plan, execute, record.

    Compound plans stop early on TargetNotFound; a run of identical screens
    triggers a Back press; app exit either relaunches or ends the session.
    """
    clock = clock or (lambda: time.time_ns() // 1_000_000)
    trace = SessionTrace(app_id=driver.app_id, policy_name=policy.name, started_at=clock())
    hook_fired: set[str] = set()
    started_monotonic = time.monotonic()
    step = 0
    try:
        while True:
            if config.max_steps is not None and step >= config.max_steps:
                break
            if (
                config.max_duration_ms is not None
                and (time.monotonic() - started_monotonic) * 1000 >= config.max_duration_ms
            ):
                break
            capture, stable = wait_for_render(driver, config.wait_ms, config.max_render_retries)
            trace.captures.append(capture)
            trace.capture_stable.append(stable)
            step += 1

            if not driver.app_running():
                if config.restart_on_exit:
                    driver.relaunch()
                    trace.actions.append(PlanRecord(source="relaunch", note="app exited"))
                    continue
                break

            if driver.login_hook is not None and driver.login_hook.matches(capture.tree):
                screen_hash = structural_hash(capture.tree, DEFAULT_TYPE_TABLE)
                if screen_hash not in hook_fired:
                    hook_fired.add(screen_hash)
                    record = PlanRecord(
                        source="login_hook", steps=tuple(driver.login_hook.script)
                    )
                    _execute_plan(driver, driver.login_hook.script, record)
                    trace.actions.append(record)
                    continue

            if _is_stuck(trace, config.back_on_stuck_after):
                driver.press_back()
                trace.actions.append(PlanRecord(source="stuck_recovery", note="back"))
                continue

            plan = policy.next_plan(capture, _step_seed(config.rng_seed, step - 1))
            record = PlanRecord(
                source="policy", steps=plan.steps, fragments=plan.unparsed_fragments
            )
            _execute_plan(driver, plan.steps, record)
            trace.actions.append(record)
    except DeviceUnavailable as exc:
        trace.aborted = True
        trace.abort_reason = str(exc)
    trace.ended_at = clock()
    return trace


def _execute_plan(driver: Driver, steps: Sequence[Action], record: PlanRecord) -> None:
    for action in steps:
        try:
            result = driver.execute(action)
        except TargetNotFound as exc:
            record.executed.append(ExecutedStep(action=action, applied=False, note=str(exc)))
            record.note = "plan aborted: target not found"
            break
        record.executed.append(
            ExecutedStep(action=action, applied=result.applied, note=result.note)
        )


def _is_stuck(trace: SessionTrace, window: int) -> bool:
    if window <= 0 or len(trace.captures) < window:
        return False
    recent = trace.captures[-window:]
    hashes = {structural_hash(c.tree, DEFAULT_TYPE_TABLE) for c in recent}
    return len(hashes) == 1


def activity_coverage(trace: SessionTrace, declared: set[str]) -> float:
    """Fraction of declared activities the session visited."""
    if not declared:
        raise EmptyDeclared("declared activity set is empty")
    return len(trace.visited_activities & declared) / len(declared)


# ---------------------------------------------------------------------------
# Benchmark harness


@dataclass(frozen=True)
class BenchmarkCell:
    app_id: str
    policy_name: str
    seed: int
    coverage: float
    error: str = ""


@dataclass
class CoverageReport:
    cells: list[BenchmarkCell]
    medians: dict[str, float]

    def per_app_rows(self) -> list[tuple[str, str, float]]:
        """Median coverage per (app, policy), sorted for stable output."""
        grouped: dict[tuple[str, str], list[float]] = {}
        for cell in self.cells:
            if cell.error:
                continue
            grouped.setdefault((cell.app_id, cell.policy_name), []).append(cell.coverage)
        return [
            (app, pol, statistics.median(vals))
            for (app, pol), vals in sorted(grouped.items())
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["app_id", "policy", "seed", "coverage", "error"])
        for cell in self.cells:
            writer.writerow(
                [
                    cell.app_id,
                    cell.policy_name,
                    cell.seed,
                    f"{cell.coverage:.4f}",
                    cell.error,
                ]
            )
        return buf.getvalue()

    def to_table(self) -> str:
        lines = ["app x policy median coverage"]
        for app, pol, median in self.per_app_rows():
            lines.append(f"  {app:<24} {pol:<16} {median:.3f}")
        lines.append("policy medians")
        for pol in sorted(self.medians):
            lines.append(f"  {pol:<16} {self.medians[pol]:.3f}")
        return "\n".join(lines)


def run_benchmark(
    apps: Sequence[SimApp],
    policies: Sequence[Policy],
    config: SessionConfig,
    seeds: Sequence[int],
    jobs: int = 1,
    clock: Callable[[], int] | None = None,
) -> CoverageReport:
    """Coverage of every policy on every app over the given seeds.

    Deterministic for fixed seeds; failures stay confined to their cell.
    """
    if not apps or not policies or not seeds:
        raise EmptyBenchmark("benchmark needs at least one app, policy and seed")

    tasks = [
        (app, policy, seed) for app in apps for policy in policies for seed in seeds
    ]

    def run_cell(task: tuple[SimApp, Policy, int]) -> BenchmarkCell:
        app, policy, seed = task
        cell_config = replace(config, rng_seed=seed)
        try:
            driver = SimDriver(app, clock=clock)
            trace = run_session(driver, policy, cell_config, clock=clock)
            coverage = activity_coverage(trace, set(app.declared_activities))
            return BenchmarkCell(
                app_id=app.app_id, policy_name=policy.name, seed=seed, coverage=coverage
            )
        except Exception as exc:
            return BenchmarkCell(
                app_id=app.app_id,
                policy_name=policy.name,
                seed=seed,
                coverage=0.0,
                error=str(exc),
            )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(run_cell, tasks))
    else:
        cells = [run_cell(t) for t in tasks]

    medians: dict[str, float] = {}
    for policy in policies:
        values = [c.coverage for c in cells if c.policy_name == policy.name and not c.error]
        medians[policy.name] = statistics.median(values) if values else 0.0
    return CoverageReport(cells=cells, medians=medians)


# ---------------------------------------------------------------------------
# Trace persistence


def save_trace(trace: SessionTrace, out_dir: str | Path) -> Path:
    """Write trace.json plus captures/NNNN.xml and captures/NNNN.png."""
    out = Path(out_dir)
    captures_dir = out / "captures"
    captures_dir.mkdir(parents=True, exist_ok=True)
    capture_entries = []
    for i, (capture, stable) in enumerate(zip(trace.captures, trace.capture_stable)):
        xml_name = f"captures/{i:04d}.xml"
        png_name = f"captures/{i:04d}.png"
        (out / xml_name).write_text(capture.raw_dump, encoding="utf-8")
        (out / png_name).write_bytes(capture.screenshot)
        capture_entries.append(
            {
                "index": i,
                "activity": capture.activity_name,
                "captured_at": capture.captured_at,
                "stable": stable,
                "hash": structural_hash(capture.tree, DEFAULT_TYPE_TABLE),
                "width": capture.tree.screen_width,
                "height": capture.tree.screen_height,
                "xml": xml_name,
                "png": png_name,
            }
        )
    action_entries = []
    for record in trace.actions:
        action_entries.append(
            {
                "source": record.source,
                "steps": [a.to_dict() for a in record.steps],
                "executed": [
                    {"action": e.action.to_dict(), "applied": e.applied, "note": e.note}
                    for e in record.executed
                ],
                "fragments": list(record.fragments),
                "note": record.note,
            }
        )
    doc = {
        "app_id": trace.app_id,
        "policy": trace.policy_name,
        "started_at": trace.started_at,
        "ended_at": trace.ended_at,
        "aborted": trace.aborted,
        "abort_reason": trace.abort_reason,
        "visited_activities": sorted(trace.visited_activities),
        "captures": capture_entries,
        "actions": action_entries,
    }
    trace_path = out / "trace.json"
    trace_path.write_text(json.dumps(doc, indent=2, sort_keys=True), encoding="utf-8")
    return trace_path
