"""Access to the bundled SimApp fixture suite and its semantic scripted rules."""

from __future__ import annotations

import json
from pathlib import Path

from ui_miner.device import SimApp, load_sim_app
from ui_miner.llm import load_scripted_backend
from ui_miner.policy import LlmPolicy

FIXTURES_DIR = Path(__file__).parent / "fixtures"
SEMANTIC_RULES = FIXTURES_DIR / "semantic_rules.json"


def bundled_fixture_path(name: str) -> Path:
    return FIXTURES_DIR / f"{name}.json"


def is_sim_fixture(path: Path) -> bool:
    if path.suffix != ".json":
        return False
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError):
        return False
    return isinstance(data, dict) and "app_id" in data


def load_suite(directory: Path | None = None) -> list[SimApp]:
    """Every SimApp fixture in the directory, sorted by filename."""
    directory = directory or FIXTURES_DIR
    apps = []
    for path in sorted(directory.glob("*.json")):
        if is_sim_fixture(path):
            apps.append(load_sim_app(path))
    return apps


def semantic_policy(rules_path: Path | None = None) -> LlmPolicy:
    """Scripted policy that knows the right move on every bundled fixture screen."""
    backend = load_scripted_backend(str(rules_path or SEMANTIC_RULES))
    return LlmPolicy(backend=backend, name="scripted")
