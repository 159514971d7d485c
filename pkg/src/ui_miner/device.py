"""Device abstraction: a real driver over the adb CLI and a simulated-app driver.

Both drivers expose the same surface: capture the foreground screen, execute
an action, report declared activities, press back, relaunch. A driver serves
one device or sim and is not safe for concurrent calls; run one session per
driver.
"""

from __future__ import annotations

import json
import os
import re
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Protocol

from ui_miner.hierarchy import (
    ViewTree,
    parse_hierarchy,
    serialize_hierarchy,
)
from ui_miner.layout import layout_to_png, render_layout
from ui_miner.noise import DEFAULT_TYPE_TABLE, TypeIndexTable, structural_hash


class DeviceError(Exception):
    pass


class DeviceUnavailable(DeviceError):
    pass


class DumpFailed(DeviceError):
    pass


class TargetNotFound(DeviceError):
    pass


class ManifestUnavailable(DeviceError):
    pass


class FixtureInvalid(DeviceError):
    pass


TAP = "tap"
LONG_TAP = "long-tap"
SCROLL = "scroll"
INPUT = "input"
ACTION_KINDS = (TAP, LONG_TAP, SCROLL, INPUT)
DIRECTIONS = ("up", "down", "left", "right")


@dataclass(frozen=True)
class Action:
    """One interaction primitive; exactly the fields its kind needs are set."""

    kind: str
    target_resource_id: str = ""
    direction: str = ""
    value: str = ""

    def __post_init__(self) -> None:
        if self.kind not in ACTION_KINDS:
            raise ValueError(f"unknown action kind {self.kind!r}")
        needs_target = self.kind in (TAP, LONG_TAP, INPUT)
        if needs_target and not self.target_resource_id:
            raise ValueError(f"{self.kind} requires target_resource_id")
        if not needs_target and self.target_resource_id:
            raise ValueError(f"{self.kind} does not take target_resource_id")
        if self.kind == SCROLL:
            if self.direction not in DIRECTIONS:
                raise ValueError(f"scroll direction must be one of {DIRECTIONS}")
        elif self.direction:
            raise ValueError(f"{self.kind} does not take a direction")
        if self.kind == INPUT:
            if not self.value:
                raise ValueError("input requires a non-empty value")
        elif self.value:
            raise ValueError(f"{self.kind} does not take a value")

    @staticmethod
    def tap(target: str) -> "Action":
        return Action(kind=TAP, target_resource_id=target)

    @staticmethod
    def long_tap(target: str) -> "Action":
        return Action(kind=LONG_TAP, target_resource_id=target)

    @staticmethod
    def scroll(direction: str) -> "Action":
        return Action(kind=SCROLL, direction=direction)

    @staticmethod
    def input(target: str, value: str) -> "Action":
        return Action(kind=INPUT, target_resource_id=target, value=value)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.target_resource_id:
            d["target"] = self.target_resource_id
        if self.direction:
            d["direction"] = self.direction
        if self.value:
            d["value"] = self.value
        return d

    @staticmethod
    def from_dict(d: dict) -> "Action":
        return Action(
            kind=d["kind"],
            target_resource_id=d.get("target", ""),
            direction=d.get("direction", ""),
            value=d.get("value", ""),
        )


@dataclass(frozen=True)
class ExecutionResult:
    applied: bool
    note: str = ""


@dataclass
class ScreenCapture:
    """One foreground screen: parsed tree, pixels, and capture metadata."""

    tree: ViewTree
    screenshot: bytes
    activity_name: str
    captured_at: int  # UTC milliseconds
    app_id: str
    raw_dump: str


@dataclass(frozen=True)
class LoginHook:
    """Runs a canned action script when a login-looking screen appears.

    id_pattern is a regex searched against every resource id on the screen;
    a Google-auth style flow is approximated by whatever script the
    operator configures.
    """

    id_pattern: str
    script: tuple[Action, ...] = ()

    def matches(self, tree: ViewTree) -> bool:
        rx = re.compile(self.id_pattern)
        return any(rx.search(n.resource_id) for n in tree.iter_nodes() if n.resource_id)


class Driver(Protocol):
    app_id: str
    login_hook: Optional[LoginHook]

    def capture(self) -> ScreenCapture: ...

    def execute(self, action: Action) -> ExecutionResult: ...

    def list_activities(self) -> set[str]: ...

    def press_back(self) -> None: ...

    def relaunch(self) -> None: ...

    def app_running(self) -> bool: ...


def wait_for_render(
    driver: Driver,
    wait_ms: int,
    max_retries: int,
    table: TypeIndexTable = DEFAULT_TYPE_TABLE,
    sleep: Callable[[float], None] = time.sleep,
) -> tuple[ScreenCapture, bool]:
    """Capture after the screen settles, up to max_retries extra waits.

    Two consecutive captures wait_ms apart with equal structural hashes count
    as stable; the last capture is returned either way, with the flag saying
    whether the final pair matched.
    """
    if wait_ms < 0 or max_retries < 0:
        raise ValueError("wait_ms and max_retries must be >= 0")
    sleep(wait_ms / 1000.0)
    previous = driver.capture()
    retries = 0
    while True:
        sleep(wait_ms / 1000.0)
        current = driver.capture()
        if structural_hash(previous.tree, table) == structural_hash(current.tree, table):
            return current, True
        if retries >= max_retries:
            return current, False
        retries += 1
        previous = current


# ---------------------------------------------------------------------------
# ADB driver


RunnerResult = tuple[int, bytes, bytes]
Runner = Callable[[list[str], float], RunnerResult]


def _subprocess_runner(args: list[str], timeout: float) -> RunnerResult:
    try:
        proc = subprocess.run(args, capture_output=True, timeout=timeout)
    except FileNotFoundError as exc:
        raise DeviceUnavailable(f"adb binary not found: {exc}") from exc
    except subprocess.TimeoutExpired as exc:
        raise DeviceUnavailable(f"adb command timed out: {' '.join(args)}") from exc
    return proc.returncode, proc.stdout, proc.stderr

_FOCUS_RE = re.compile(r"mCurrentFocus=Window\{\S+ \S+ ([\w\.\$/]+)\}")
_SIZE_RE = re.compile(r"Physical size: (\d+)x(\d+)")

LONG_TAP_MS = 600
SWIPE_MS = 300
_CLEAR_DEL_REPEAT = 50


class AdbDriver:
    """Talks to one attached device through the adb command-line tool."""

    def __init__(
        self,
        app_id: str,
        adb_path: str | None = None,
        serial: str | None = None,
        runner: Runner | None = None,
        clock: Callable[[], int] | None = None,
        login_hook: LoginHook | None = None,
        command_timeout_s: float = 30.0,
    ):
        self.app_id = app_id
        self.adb_path = adb_path or os.environ.get("UI_MINER_ADB", "adb")
        self.serial = serial
        self._runner = runner or _subprocess_runner
        self._clock = clock or (lambda: time.time_ns() // 1_000_000)
        self.login_hook = login_hook
        self._timeout = command_timeout_s
        self._screen_size: tuple[int, int] | None = None

    def _adb(self, *args: str) -> list[str]:
        base = [self.adb_path]
        if self.serial:
            base += ["-s", self.serial]
        return base + list(args)

    def _run(self, *args: str) -> bytes:
        code, out, err = self._runner(self._adb(*args), self._timeout)
        if code != 0:
            raise DeviceUnavailable(
                f"adb {' '.join(args)} exited {code}: {err.decode('utf-8', 'replace').strip()}"
            )
        return out

    def screen_size(self) -> tuple[int, int]:
        if self._screen_size is None:
            out = self._run("shell", "wm", "size").decode("utf-8", "replace")
            m = _SIZE_RE.search(out)
            if m is None:
                raise DeviceUnavailable(f"cannot parse wm size output: {out!r}")
            self._screen_size = (int(m.group(1)), int(m.group(2)))
        return self._screen_size

    def _dump_hierarchy(self) -> str:
        code, out, err = self._runner(
            self._adb("shell", "uiautomator", "dump", "/sdcard/ui_miner_dump.xml"),
            self._timeout,
        )
        if code != 0:
            raise DumpFailed(f"uiautomator dump exited {code}: {err.decode('utf-8', 'replace')}")
        xml = self._run("shell", "cat", "/sdcard/ui_miner_dump.xml").decode("utf-8", "replace")
        if not xml.strip():
            raise DumpFailed("empty hierarchy dump")
        return xml

    def _focused_component(self) -> str:
        out = self._run("shell", "dumpsys", "window").decode("utf-8", "replace")
        m = _FOCUS_RE.search(out)
        if m is None:
            raise DumpFailed("no focused window in dumpsys output")
        return m.group(1)

    def capture(self) -> ScreenCapture:
        w, h = self.screen_size()
        raw = self._dump_hierarchy()
        tree = parse_hierarchy(raw, w, h)
        png = self._run("exec-out", "screencap", "-p")
        activity = self._focused_component()
        return ScreenCapture(
            tree=tree,
            screenshot=png,
            activity_name=activity,
            captured_at=self._clock(),
            app_id=self.app_id,
            raw_dump=raw,
        )

    def execute(self, action: Action) -> ExecutionResult:
        w, h = self.screen_size()
        if action.kind == SCROLL:
            x1, y1, x2, y2 = _scroll_swipe(action.direction, w, h)
            self._run("shell", "input", "swipe", str(x1), str(y1), str(x2), str(y2), str(SWIPE_MS))
            return ExecutionResult(applied=True, note=f"swipe {action.direction}")

        raw = self._dump_hierarchy()
        tree = parse_hierarchy(raw, w, h)
        node = tree.find_by_resource_id(action.target_resource_id)
        if node is None:
            raise TargetNotFound(f"resource id {action.target_resource_id!r} not on screen")
        cx, cy = node.bounds.center()
        if action.kind == TAP:
            self._run("shell", "input", "tap", str(cx), str(cy))
            return ExecutionResult(applied=True, note=f"tap ({cx},{cy})")
        if action.kind == LONG_TAP:
            self._run(
                "shell", "input", "swipe", str(cx), str(cy), str(cx), str(cy), str(LONG_TAP_MS)
            )
            return ExecutionResult(applied=True, note=f"long-tap ({cx},{cy})")
        # INPUT: focus the field, clear whatever is there, then type.
        self._run("shell", "input", "tap", str(cx), str(cy))
        self._run("shell", "input", "keyevent", "KEYCODE_MOVE_END")
        self._run("shell", "input", "keyevent", *(["KEYCODE_DEL"] * _CLEAR_DEL_REPEAT))
        self._run("shell", "input", "text", _escape_input_text(action.value))
        return ExecutionResult(applied=True, note=f"input into {action.target_resource_id}")

    def list_activities(self) -> set[str]:
        try:
            out = self._run("shell", "dumpsys", "package", self.app_id).decode("utf-8", "replace")
        except DeviceUnavailable as exc:
            raise ManifestUnavailable(str(exc)) from exc
        rx = re.compile(re.escape(self.app_id) + r"/([\w\.\$]+)")
        found = {f"{self.app_id}/{m.group(1)}" for m in rx.finditer(out)}
        if not found:
            raise ManifestUnavailable(f"no activities found for {self.app_id}")
        return found

    def press_back(self) -> None:
        self._run("shell", "input", "keyevent", "KEYCODE_BACK")

    def relaunch(self) -> None:
        self._run(
            "shell", "monkey", "-p", self.app_id, "-c", "android.intent.category.LAUNCHER", "1"
        )

    def app_running(self) -> bool:
        try:
            component = self._focused_component()
        except (DumpFailed, DeviceUnavailable):
            return False
        return component.startswith(self.app_id + "/") or component.startswith(self.app_id + ".")


def _scroll_swipe(direction: str, w: int, h: int) -> tuple[int, int, int, int]:
    """Swipe across the middle 50% of the screen in the given direction."""
    cx, cy = w // 2, h // 2
    if direction == "up":
        return cx, (3 * h) // 4, cx, h // 4
    if direction == "down":
        return cx, h // 4, cx, (3 * h) // 4
    if direction == "left":
        return (3 * w) // 4, cy, w // 4, cy
    return w // 4, cy, (3 * w) // 4, cy


def _escape_input_text(value: str) -> str:
    # `input text` needs %s for spaces and is fed through a shell on-device.
    return shlex.quote(value.replace(" ", "%s"))


# ---------------------------------------------------------------------------
# Simulated-app driver


@dataclass(frozen=True)
class Matcher:
    """Pattern an action must fit for a transition; empty fields match anything."""

    kind: str
    target_resource_id: str = ""
    direction: str = ""
    value_pattern: str = ""

    def matches(self, action: Action) -> bool:
        if action.kind != self.kind:
            return False
        if self.target_resource_id and action.target_resource_id != self.target_resource_id:
            return False
        if self.direction and action.direction != self.direction:
            return False
        if self.value_pattern and re.fullmatch(self.value_pattern, action.value) is None:
            return False
        return True


@dataclass(frozen=True)
class SimTransition:
    from_state: str
    matcher: Matcher
    to_state: str
    guard: dict[str, bool] = field(default_factory=dict)
    set_flags: dict[str, bool] = field(default_factory=dict)

    def guard_holds(self, flags: dict[str, bool]) -> bool:
        return all(flags.get(name, False) == want for name, want in self.guard.items())


@dataclass(frozen=True)
class SimState:
    state_id: str
    activity_name: str
    tree: ViewTree
    terminal: bool = False


@dataclass(frozen=True)
class SimApp:
    """Declarative finite-state-machine app fixture standing in for a real app."""

    app_id: str
    declared_activities: frozenset[str]
    states: dict[str, SimState]
    transitions: tuple[SimTransition, ...]
    initial_state: str
    back_targets: dict[str, str] = field(default_factory=dict)
    # Serialized dumps / rendered screenshots per state, shared by every
    # driver over this app; states are immutable so entries never go stale.
    render_cache: dict[str, object] = field(
        default_factory=dict, compare=False, repr=False
    )

    def back_target(self, state_id: str) -> str:
        return self.back_targets.get(state_id, self.initial_state)


def _guards_compatible(a: dict[str, bool], b: dict[str, bool]) -> bool:
    return all(b.get(name, want) == want for name, want in a.items())


def _matchers_may_overlap(a: Matcher, b: Matcher) -> bool:
    if a.kind != b.kind:
        return False
    if a.target_resource_id and b.target_resource_id and a.target_resource_id != b.target_resource_id:
        return False
    if a.direction and b.direction and a.direction != b.direction:
        return False
    # Distinct non-empty value patterns are assumed to denote disjoint inputs;
    # full regex-intersection checking is not worth its weight here.
    if a.value_pattern and b.value_pattern and a.value_pattern != b.value_pattern:
        return False
    return True


def _validate_sim_app(app: SimApp) -> None:
    if app.initial_state not in app.states:
        raise FixtureInvalid(f"initial_state {app.initial_state!r} is not a state")
    for state in app.states.values():
        if state.activity_name not in app.declared_activities:
            raise FixtureInvalid(
                f"state {state.state_id!r} activity {state.activity_name!r} not declared"
            )
    for t in app.transitions:
        if t.from_state not in app.states or t.to_state not in app.states:
            raise FixtureInvalid(
                f"transition endpoint unknown: {t.from_state!r} -> {t.to_state!r}"
            )
        if t.matcher.kind not in ACTION_KINDS:
            raise FixtureInvalid(f"matcher kind {t.matcher.kind!r} unknown")
        if t.matcher.value_pattern:
            try:
                re.compile(t.matcher.value_pattern)
            except re.error as exc:
                raise FixtureInvalid(f"bad value_pattern {t.matcher.value_pattern!r}: {exc}")
    for state_id, target in app.back_targets.items():
        if state_id not in app.states or target not in app.states:
            raise FixtureInvalid(f"back transition endpoint unknown: {state_id!r} -> {target!r}")
    by_state: dict[str, list[SimTransition]] = {}
    for t in app.transitions:
        by_state.setdefault(t.from_state, []).append(t)
    for state_id, ts in by_state.items():
        for i, a in enumerate(ts):
            for b in ts[i + 1 :]:
                if _matchers_may_overlap(a.matcher, b.matcher) and _guards_compatible(
                    a.guard, b.guard
                ):
                    raise FixtureInvalid(
                        f"ambiguous transitions from {state_id!r} on {a.matcher.kind}"
                    )


def load_sim_app(path: str | Path) -> SimApp:
    """Load and validate a SimApp fixture file (UTF-8 JSON)."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FixtureInvalid(f"cannot read fixture {path}: {exc}") from exc
    screen = data.get("screen", {})
    screen_w = int(screen.get("width", 1080))
    screen_h = int(screen.get("height", 1920))
    states = {}
    for state_id, sdata in data.get("states", {}).items():
        if "tree" in sdata:
            xml = sdata["tree"]
        elif "tree_file" in sdata:
            xml = (path.parent / sdata["tree_file"]).read_text(encoding="utf-8")
        else:
            raise FixtureInvalid(f"state {state_id!r} has neither tree nor tree_file")
        try:
            tree = parse_hierarchy(xml, screen_w, screen_h)
        except Exception as exc:
            raise FixtureInvalid(f"state {state_id!r} tree does not parse: {exc}") from exc
        states[state_id] = SimState(
            state_id=state_id,
            activity_name=sdata["activity"],
            tree=tree,
            terminal=bool(sdata.get("terminal", False)),
        )
    transitions = []
    for tdata in data.get("transitions", []):
        on = tdata.get("on", {})
        transitions.append(
            SimTransition(
                from_state=tdata["from"],
                matcher=Matcher(
                    kind=on.get("kind", ""),
                    target_resource_id=on.get("target", ""),
                    direction=on.get("direction", ""),
                    value_pattern=on.get("value_pattern", ""),
                ),
                to_state=tdata["to"],
                guard={k: bool(v) for k, v in tdata.get("guard", {}).items()},
                set_flags={k: bool(v) for k, v in tdata.get("set", {}).items()},
            )
        )
    app = SimApp(
        app_id=data["app_id"],
        declared_activities=frozenset(data.get("declared_activities", [])),
        states=states,
        transitions=tuple(transitions),
        initial_state=data.get("initial_state", ""),
        back_targets=dict(data.get("back", {})),
    )
    _validate_sim_app(app)
    return app


class SimDriver:
    """Deterministic driver over a SimApp fixture."""

    def __init__(
        self,
        app: SimApp,
        clock: Callable[[], int] | None = None,
        login_hook: LoginHook | None = None,
    ):
        self.app = app
        self.app_id = app.app_id
        self.login_hook = login_hook
        self._clock = clock or (lambda: time.time_ns() // 1_000_000)
        self.current_state_id = app.initial_state
        self.flags: dict[str, bool] = {}

    @property
    def _state(self) -> SimState:
        return self.app.states[self.current_state_id]

    def _raw_dump(self, state: SimState) -> str:
        key = f"dump:{state.state_id}"
        dump = self.app.render_cache.get(key)
        if dump is None:
            dump = serialize_hierarchy(state.tree)
            self.app.render_cache[key] = dump
        return dump

    def _screenshot(self, state: SimState) -> bytes:
        key = f"png:{state.state_id}"
        png = self.app.render_cache.get(key)
        if png is None:
            layout = render_layout(state.tree)
            png = layout_to_png(layout, layout.width * 4, layout.height * 4)
            self.app.render_cache[key] = png
        return png

    def capture(self) -> ScreenCapture:
        state = self._state
        return ScreenCapture(
            tree=state.tree,
            screenshot=self._screenshot(state),
            activity_name=state.activity_name,
            captured_at=self._clock(),
            app_id=self.app_id,
            raw_dump=self._raw_dump(state),
        )

    def execute(self, action: Action) -> ExecutionResult:
        if action.kind in (TAP, LONG_TAP, INPUT):
            if self._state.tree.find_by_resource_id(action.target_resource_id) is None:
                raise TargetNotFound(
                    f"resource id {action.target_resource_id!r} not in state "
                    f"{self.current_state_id!r}"
                )
        for t in self.app.transitions:
            if t.from_state != self.current_state_id:
                continue
            if not t.matcher.matches(action):
                continue
            if not t.guard_holds(self.flags):
                continue
            self.flags.update(t.set_flags)
            self.current_state_id = t.to_state
            return ExecutionResult(applied=True, note=f"-> {t.to_state}")
        return ExecutionResult(applied=False, note="no transition matched")

    def list_activities(self) -> set[str]:
        return set(self.app.declared_activities)

    def press_back(self) -> None:
        self.current_state_id = self.app.back_target(self.current_state_id)

    def relaunch(self) -> None:
        self.current_state_id = self.app.initial_state
        self.flags = {}

    def app_running(self) -> bool:
        return not self._state.terminal
