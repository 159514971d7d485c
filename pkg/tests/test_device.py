from __future__ import annotations

import json
from pathlib import Path

import pytest

from conftest import make_node, make_tree
from ui_miner.bundled import bundled_fixture_path
from ui_miner.device import (
    Action,
    AdbDriver,
    DeviceUnavailable,
    DumpFailed,
    FixtureInvalid,
    LoginHook,
    ManifestUnavailable,
    SimDriver,
    TargetNotFound,
    load_sim_app,
    wait_for_render,
)
from ui_miner.hierarchy import serialize_hierarchy

DUMP_XML = (Path(__file__).parent / "data" / "dump_12_nodes.xml").read_text(encoding="utf-8")


class TestAction:
    def test_constructors(self):
        assert Action.tap("a").kind == "tap"
        assert Action.scroll("up").direction == "up"
        assert Action.input("f", "v").value == "v"
        assert Action.long_tap("a").kind == "long-tap"

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"kind": "tap"},  # missing target
            {"kind": "scroll", "direction": "sideways"},
            {"kind": "scroll", "direction": "up", "target_resource_id": "x"},
            {"kind": "input", "target_resource_id": "x"},  # missing value
            {"kind": "tap", "target_resource_id": "x", "value": "v"},
            {"kind": "fling", "target_resource_id": "x"},
        ],
    )
    def test_invalid_combinations_rejected(self, kwargs):
        with pytest.raises(ValueError):
            Action(**kwargs)

    def test_dict_roundtrip(self):
        action = Action.input("field", "hello world")
        assert Action.from_dict(action.to_dict()) == action


class TestSimDriver:
    def test_capture_at_initial_state(self):
        app = load_sim_app(bundled_fixture_path("policy_gate"))
        driver = SimDriver(app, clock=lambda: 42)
        capture = driver.capture()
        assert capture.activity_name == "com.fixture.consent.ConsentActivity"
        assert capture.captured_at == 42
        assert capture.app_id == "policy_gate"
        assert capture.tree.find_by_resource_id("checkbox_policy") is not None
        assert capture.screenshot.startswith(b"\x89PNG")

    def test_tap_transition_moves_to_destination(self):
        app = load_sim_app(bundled_fixture_path("chain3"))
        driver = SimDriver(app)
        result = driver.execute(Action.tap("next"))
        assert result.applied is True
        assert driver.capture().activity_name == "com.fixture.chain3.StepTwoActivity"

    def test_guarded_tap_noop_until_checkbox(self):
        # Agree only works after ticking the policy checkbox.
        app = load_sim_app(bundled_fixture_path("policy_gate"))
        driver = SimDriver(app)
        blocked = driver.execute(Action.tap("agree"))
        assert blocked.applied is False
        assert driver.current_state_id == "consent"
        assert driver.execute(Action.tap("checkbox_policy")).applied is True
        assert driver.execute(Action.tap("agree")).applied is True
        assert driver.current_state_id == "dashboard"

    def test_email_value_pattern(self):
        # A well-formed email passes the field's pattern; junk does not.
        app = load_sim_app(bundled_fixture_path("email_login"))
        driver = SimDriver(app)
        ok = driver.execute(Action.input("email", "example@gmail.com"))
        assert ok.applied is True
        bad = driver.execute(Action.input("email", "not-an-email"))
        assert bad.applied is False

    def test_tap_unknown_id_raises(self):
        app = load_sim_app(bundled_fixture_path("chain3"))
        driver = SimDriver(app)
        with pytest.raises(TargetNotFound):
            driver.execute(Action.tap("missing_button"))

    def test_failed_execute_never_mutates(self):
        app = load_sim_app(bundled_fixture_path("policy_gate"))
        driver = SimDriver(app)
        before = (driver.current_state_id, dict(driver.flags))
        driver.execute(Action.tap("decline"))  # exists, no transition
        assert (driver.current_state_id, dict(driver.flags)) == before

    def test_deterministic_trajectories(self):
        app = load_sim_app(bundled_fixture_path("signup_strong"))
        script = [
            Action.input("new_email", "example@gmail.com"),
            Action.input("password", "Aa1!aaaa"),
            Action.tap("tos_check"),
            Action.tap("create_account"),
            Action.input("code_box", "482913"),
            Action.tap("verify_btn"),
        ]

        def run() -> list[str]:
            driver = SimDriver(app)
            states = [driver.current_state_id]
            for action in script:
                driver.execute(action)
                states.append(driver.current_state_id)
            return states

        assert run() == run()
        assert run()[-1] == "welcome"

    def test_back_and_relaunch(self):
        app = load_sim_app(bundled_fixture_path("policy_gate"))
        driver = SimDriver(app)
        driver.execute(Action.tap("checkbox_policy"))
        driver.execute(Action.tap("agree"))
        driver.press_back()
        assert driver.current_state_id == "consent"
        driver.relaunch()
        assert driver.flags == {}
        assert driver.current_state_id == "consent"

    def test_terminal_state_reports_app_exit(self):
        app = load_sim_app(bundled_fixture_path("chain3"))
        driver = SimDriver(app)
        assert driver.app_running() is True
        driver.execute(Action.tap("next"))
        driver.execute(Action.tap("next"))
        assert driver.app_running() is False

    def test_list_activities_equals_declared(self):
        app = load_sim_app(bundled_fixture_path("email_login"))
        assert SimDriver(app).list_activities() == set(app.declared_activities)

    def test_compound_fixture_declares_three_activities(self):
        # Authored with exactly three activities; counted by hand.
        app = load_sim_app(bundled_fixture_path("policy_gate"))
        assert len(app.declared_activities) == 3


class TestSimAppValidation:
    def _base(self) -> dict:
        tree = serialize_hierarchy(
            make_tree(make_node("android.widget.Button", rid="go", clickable=True))
        )
        return {
            "app_id": "t",
            "declared_activities": ["com.t.A"],
            "initial_state": "s0",
            "states": {"s0": {"activity": "com.t.A", "tree": tree}},
            "transitions": [],
        }

    def _load(self, data: dict, tmp_path: Path):
        path = tmp_path / "app.json"
        path.write_text(json.dumps(data), encoding="utf-8")
        return load_sim_app(path)

    def test_valid_fixture_loads(self, tmp_path):
        app = self._load(self._base(), tmp_path)
        assert app.app_id == "t"

    def test_unknown_transition_endpoint(self, tmp_path):
        data = self._base()
        data["transitions"] = [{"from": "s0", "on": {"kind": "tap", "target": "go"}, "to": "nope"}]
        with pytest.raises(FixtureInvalid, match="transition endpoint"):
            self._load(data, tmp_path)

    def test_undeclared_activity(self, tmp_path):
        data = self._base()
        data["states"]["s0"]["activity"] = "com.t.Undeclared"
        with pytest.raises(FixtureInvalid, match="not declared"):
            self._load(data, tmp_path)

    def test_unknown_initial_state(self, tmp_path):
        data = self._base()
        data["initial_state"] = "missing"
        with pytest.raises(FixtureInvalid, match="initial_state"):
            self._load(data, tmp_path)

    def test_ambiguous_transitions_rejected(self, tmp_path):
        data = self._base()
        data["states"]["s1"] = dict(data["states"]["s0"])
        data["states"]["s2"] = dict(data["states"]["s0"])
        data["transitions"] = [
            {"from": "s0", "on": {"kind": "tap", "target": "go"}, "to": "s1"},
            {"from": "s0", "on": {"kind": "tap", "target": "go"}, "to": "s2"},
        ]
        with pytest.raises(FixtureInvalid, match="ambiguous"):
            self._load(data, tmp_path)

    def test_guard_disjoint_transitions_allowed(self, tmp_path):
        data = self._base()
        data["states"]["s1"] = dict(data["states"]["s0"])
        data["transitions"] = [
            {"from": "s0", "on": {"kind": "tap", "target": "go"}, "to": "s1", "guard": {"f": True}},
            {"from": "s0", "on": {"kind": "tap", "target": "go"}, "to": "s0", "guard": {"f": False}},
        ]
        app = self._load(data, tmp_path)
        assert len(app.transitions) == 2

    def test_tree_file_reference(self, tmp_path):
        data = self._base()
        xml = data["states"]["s0"].pop("tree")
        data["states"]["s0"]["tree_file"] = "s0.xml"
        (tmp_path / "s0.xml").write_text(xml, encoding="utf-8")
        app = self._load(data, tmp_path)
        assert app.states["s0"].tree.root.resource_id == "go"


class FakeRunner:
    """Records every adb invocation and replays canned outputs."""

    def __init__(self, dumps: list[str] | None = None, focused: str = "com.demo.app/com.demo.app.MainActivity"):
        self.commands: list[list[str]] = []
        self.dumps = list(dumps) if dumps else [DUMP_XML]
        self.focused = focused
        self.package_dump = (
            "Activity Resolver Table:\n"
            "  Non-Data Actions:\n"
            "    android.intent.action.MAIN:\n"
            "      abc123 com.demo.app/com.demo.app.MainActivity filter xyz\n"
            "      def456 com.demo.app/com.demo.app.SettingsActivity filter xyz\n"
        )

    def __call__(self, args: list[str], timeout: float):
        self.commands.append(list(args))
        joined = " ".join(args)
        if "wm size" in joined:
            return 0, b"Physical size: 1080x1920\n", b""
        if "uiautomator dump" in joined:
            return 0, b"UI hierchary dumped to: /sdcard/ui_miner_dump.xml\n", b""
        if "cat /sdcard" in joined:
            dump = self.dumps.pop(0) if len(self.dumps) > 1 else self.dumps[0]
            return 0, dump.encode("utf-8"), b""
        if "screencap" in joined:
            return 0, b"\x89PNG\r\n\x1a\nfake", b""
        if "dumpsys window" in joined:
            body = f"  mCurrentFocus=Window{{f00 u0 {self.focused}}}\n"
            return 0, body.encode("utf-8"), b""
        if "dumpsys package" in joined:
            return 0, self.package_dump.encode("utf-8"), b""
        return 0, b"", b""

    def input_commands(self) -> list[list[str]]:
        return [c for c in self.commands if "input" in c]


class TestAdbDriver:
    def _driver(self, runner: FakeRunner) -> AdbDriver:
        return AdbDriver(app_id="com.demo.app", adb_path="adb", runner=runner, clock=lambda: 7)

    def test_capture_replays_recorded_dump(self):
        runner = FakeRunner()
        capture = self._driver(runner).capture()
        # Node count oracle: occurrences of "<node" in the fixture file.
        assert capture.tree.node_count() == DUMP_XML.count("<node")
        assert capture.activity_name == "com.demo.app/com.demo.app.MainActivity"
        assert capture.screenshot.startswith(b"\x89PNG")
        assert capture.raw_dump == DUMP_XML

    def test_tap_resolves_center_of_target(self):
        runner = FakeRunner()
        result = self._driver(runner).execute(Action.tap("com.demo.app:id/login_button"))
        assert result.applied is True
        # login_button bounds are [140,300][940,440] -> center (540, 370)
        assert runner.input_commands()[-1][-4:] == ["input", "tap", "540", "370"]

    def test_tap_resolves_local_id_suffix(self):
        runner = FakeRunner()
        self._driver(runner).execute(Action.tap("login_button"))
        assert runner.input_commands()[-1][-2:] == ["540", "370"]

    def test_long_tap_uses_600ms_swipe(self):
        runner = FakeRunner()
        self._driver(runner).execute(Action.long_tap("login_button"))
        assert runner.input_commands()[-1][-7:] == [
            "input", "swipe", "540", "370", "540", "370", "600",
        ]

    def test_scroll_swipes_across_middle_half(self):
        runner = FakeRunner()
        self._driver(runner).execute(Action.scroll("up"))
        assert runner.input_commands()[-1][-5:] == ["540", "1440", "540", "480", "300"]

    def test_input_focuses_clears_then_types(self):
        runner = FakeRunner()
        self._driver(runner).execute(Action.input("email", "hi there"))
        cmds = runner.input_commands()
        assert cmds[0][-3:] == ["tap", "540", "570"]  # email center
        assert cmds[1][-1] == "KEYCODE_MOVE_END"
        assert cmds[2].count("KEYCODE_DEL") == 50
        assert cmds[3][-1] == "hi%sthere"

    def test_target_not_found_issues_no_input_command(self):
        runner = FakeRunner()
        with pytest.raises(TargetNotFound):
            self._driver(runner).execute(Action.tap("ghost"))
        assert runner.input_commands() == []

    def test_empty_dump_fails(self):
        runner = FakeRunner(dumps=["  "])
        with pytest.raises(DumpFailed):
            self._driver(runner).capture()

    def test_nonzero_exit_is_device_unavailable(self):
        def failing(args, timeout):
            return 1, b"", b"device offline"

        driver = AdbDriver(app_id="x", adb_path="adb", runner=failing)
        with pytest.raises(DeviceUnavailable):
            driver.screen_size()

    def test_list_activities_from_package_dump(self):
        runner = FakeRunner()
        found = self._driver(runner).list_activities()
        assert found == {
            "com.demo.app/com.demo.app.MainActivity",
            "com.demo.app/com.demo.app.SettingsActivity",
        }

    def test_list_activities_empty_raises_manifest_unavailable(self):
        runner = FakeRunner()
        runner.package_dump = "nothing here"
        with pytest.raises(ManifestUnavailable):
            self._driver(runner).list_activities()

    def test_app_running_tracks_focused_package(self):
        runner = FakeRunner()
        assert self._driver(runner).app_running() is True
        runner.focused = "com.other.launcher/com.other.launcher.Home"
        assert self._driver(runner).app_running() is False


class ScriptedDriver:
    """Driver double that serves a scripted sequence of trees."""

    app_id = "scripted"
    login_hook = None

    def __init__(self, trees):
        self.trees = list(trees)
        self.capture_count = 0

    def capture(self):
        tree = self.trees.pop(0) if len(self.trees) > 1 else self.trees[0]
        self.capture_count += 1
        from ui_miner.device import ScreenCapture

        return ScreenCapture(
            tree=tree,
            screenshot=b"\x89PNG",
            activity_name="com.s.Main",
            captured_at=0,
            app_id=self.app_id,
            raw_dump=serialize_hierarchy(tree),
        )

    def execute(self, action):
        raise NotImplementedError

    def list_activities(self):
        return {"com.s.Main"}

    def press_back(self):
        pass

    def relaunch(self):
        pass

    def app_running(self):
        return True


def _tree_with(count: int):
    children = tuple(make_node("android.widget.TextView") for _ in range(count))
    return make_tree(make_node("android.widget.FrameLayout", children=children))


class TestWaitForRender:
    def test_sim_driver_stable_after_first_pair(self):
        app = load_sim_app(bundled_fixture_path("chain3"))
        capture, stable = wait_for_render(SimDriver(app), 0, 2)
        assert stable is True
        assert capture.activity_name == "com.fixture.chain3.StepOneActivity"

    def test_change_once_then_stabilize(self):
        # Scripted: A, B, B... with two retries allowed -> stable on the
        # third capture (trace: A/B unequal, retry, B/B equal).
        driver = ScriptedDriver([_tree_with(1), _tree_with(2), _tree_with(2)])
        capture, stable = wait_for_render(driver, 0, 2)
        assert stable is True
        assert driver.capture_count == 3

    def test_no_retries_with_changing_dumps(self):
        driver = ScriptedDriver([_tree_with(1), _tree_with(2), _tree_with(3), _tree_with(4)])
        _, stable = wait_for_render(driver, 0, 0)
        assert stable is False
        assert driver.capture_count == 2

    def test_sleeps_between_captures(self):
        slept = []
        app = load_sim_app(bundled_fixture_path("chain3"))
        wait_for_render(SimDriver(app), 2000, 0, sleep=slept.append)
        assert slept == [2.0, 2.0]


class TestLoginHook:
    def test_matches_resource_id_pattern(self):
        hook = LoginHook(id_pattern=r"google_sign_in", script=(Action.tap("google_sign_in"),))
        node = make_node("android.widget.Button", rid="com.x:id/google_sign_in", clickable=True)
        tree = make_tree(make_node("android.widget.FrameLayout", children=(node,)))
        assert hook.matches(tree) is True
        other = make_tree(make_node("android.widget.Button", rid="com.x:id/other"))
        assert hook.matches(other) is False
