"""Exploration policies: prompt construction, reply parsing, and a random baseline."""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from typing import Sequence

from ui_miner.device import (
    DIRECTIONS,
    INPUT,
    LONG_TAP,
    SCROLL,
    TAP,
    Action,
    ScreenCapture,
)
from ui_miner.hierarchy import ViewNode, interactive_elements, serialize_for_prompt
from ui_miner.llm import ChatBackend, ChatMessage

DEFAULT_ROLE_TEXT = "You are an app expert tasked with exploring apps for maximum coverage."
DEFAULT_QUESTION_TEXT = "How would you interact with the following UI <UI>?"
DEFAULT_PRIMITIVES_TEXT = (
    "Please answer the interactions in the following format: "
    "[tap] [resource_id], [scroll] [direction], [input] [resource_id] [value], "
    "[long-tap] [resource_id]."
)

DEFAULT_INPUT_LEXICON = ("test", "example@gmail.com", "123456789", "Aa1!aaaa")


@dataclass(frozen=True)
class PromptTemplate:
    role_text: str = DEFAULT_ROLE_TEXT
    question_text: str = DEFAULT_QUESTION_TEXT
    primitives_text: str = DEFAULT_PRIMITIVES_TEXT
    include_role: bool = True
    include_primitives: bool = True

    def __post_init__(self) -> None:
        if self.question_text.count("<UI>") != 1:
            raise ValueError("question_text must contain the <UI> placeholder exactly once")


def load_prompt_template(path: str) -> PromptTemplate:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return PromptTemplate(
        role_text=data.get("role_text", DEFAULT_ROLE_TEXT),
        question_text=data.get("question_text", DEFAULT_QUESTION_TEXT),
        primitives_text=data.get("primitives_text", DEFAULT_PRIMITIVES_TEXT),
        include_role=bool(data.get("include_role", True)),
        include_primitives=bool(data.get("include_primitives", True)),
    )


def build_prompt(
    template: PromptTemplate, capture: ScreenCapture, max_chars: int
) -> list[ChatMessage]:
    """Render the per-screen chat messages; pure, byte-stable for equal inputs."""
    ui_context = serialize_for_prompt(capture.tree, max_chars)
    user_text = template.question_text.replace("<UI>", ui_context)
    if template.include_primitives:
        user_text = f"{user_text}\n{template.primitives_text}"
    messages = []
    if template.include_role:
        messages.append(ChatMessage(role="system", content=template.role_text))
    messages.append(ChatMessage(role="user", content=user_text))
    return messages


@dataclass(frozen=True)
class ParsedPlan:
    steps: tuple[Action, ...] = ()
    unparsed_fragments: tuple[str, ...] = ()


_BRACKET_RE = re.compile(r"\[([^\]]*)\]")
_INDEX_BEFORE_RE = re.compile(r"(\d+)[ \t]*[.):\-]*[ \t]*$")
_SEPARATOR_ONLY_RE = re.compile(r"^[\s,;.:\-]*$")

_VERB_KINDS = {"tap": TAP, "long-tap": LONG_TAP, "scroll": SCROLL, "input": INPUT}


def _build_action(kind: str, args: list[str]) -> Action | None:
    try:
        if kind == SCROLL:
            direction = args[0].strip().lower()
            return Action.scroll(direction)
        if kind == INPUT:
            return Action.input(args[0].strip(), args[1].strip())
        target = args[0].strip()
        return Action(kind=kind, target_resource_id=target)
    except (ValueError, IndexError):
        return None


def parse_reply(reply: str) -> ParsedPlan:
    """Extract bracketed primitives from arbitrary reply text; never fails.

    A leading integer sets a step's index and carries forward to unindexed
    patterns after it, so `2. [tap] [a], [tap] [b]` keeps b right after a.
    Steps are ordered by (index, textual position); everything outside the
    matched regions lands in unparsed_fragments.
    """
    tokens = list(_BRACKET_RE.finditer(reply))
    entries: list[tuple[int, int, Action]] = []
    matched_spans: list[tuple[int, int]] = []
    carried_index = 0
    i = 0
    while i < len(tokens):
        verb = tokens[i].group(1).strip().lower()
        kind = _VERB_KINDS.get(verb)
        if kind is None:
            i += 1
            continue
        argc = 2 if kind == INPUT else 1
        args = []
        end = tokens[i].end()
        usable = True
        for j in range(1, argc + 1):
            if i + j >= len(tokens):
                usable = False
                break
            gap = reply[tokens[i + j - 1].end() : tokens[i + j].start()]
            if gap.strip():
                usable = False
                break
            args.append(tokens[i + j].group(1))
            end = tokens[i + j].end()
        action = _build_action(kind, args) if usable else None
        if action is None:
            i += 1
            continue
        start = tokens[i].start()
        index_match = _INDEX_BEFORE_RE.search(reply, 0, start)
        if index_match:
            carried_index = int(index_match.group(1))
            start = index_match.start()
        entries.append((carried_index, len(entries), action))
        matched_spans.append((start, end))
        i += 1 + argc

    entries.sort(key=lambda e: (e[0], e[1]))
    steps = tuple(action for _, _, action in entries)

    fragments = []
    cursor = 0
    for start, end in matched_spans:
        fragments.extend(_fragment_lines(reply[cursor:start]))
        cursor = end
    fragments.extend(_fragment_lines(reply[cursor:]))
    return ParsedPlan(steps=steps, unparsed_fragments=tuple(fragments))


def _fragment_lines(chunk: str) -> list[str]:
    lines = []
    for line in chunk.splitlines():
        line = line.strip()
        if line and not _SEPARATOR_ONLY_RE.match(line):
            lines.append(line)
    return lines


def render_steps(steps: Sequence[Action], numbered: bool = True) -> str:
    """Render actions in the primitive grammar; parse_reply inverts this."""
    lines = []
    for i, action in enumerate(steps):
        if action.kind == SCROLL:
            body = f"[{SCROLL}] [{action.direction}]"
        elif action.kind == INPUT:
            body = f"[{INPUT}] [{action.target_resource_id}] [{action.value}]"
        else:
            body = f"[{action.kind}] [{action.target_resource_id}]"
        lines.append(f"{i + 1}. {body}" if numbered else body)
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Free-text fallback for replies without the primitive format


_FREE_VERB_RE = re.compile(
    r"\b(tap|click|press|type|enter|create|scroll|swipe|hold)\b", re.IGNORECASE
)
_FREE_KINDS = {
    "tap": TAP,
    "click": TAP,
    "press": TAP,
    "type": INPUT,
    "enter": INPUT,
    "create": INPUT,
    "scroll": SCROLL,
    "swipe": SCROLL,
    "hold": LONG_TAP,
}
_QUOTED_RE = re.compile(r"[\"']([^\"']+)[\"']")
_VALUE_AFTER_RE = re.compile(r"\b(?:of|as|with|to)\s+([\w@.!\-]+)", re.IGNORECASE)
_DIRECTION_RE = re.compile(r"\b(up|down|left|right)\b", re.IGNORECASE)


def _candidate_strings(node: ViewNode) -> list[str]:
    local_id = node.resource_id.rsplit("/", 1)[-1]
    candidates = [node.text, local_id, local_id.replace("_", " ")]
    return [c.lower() for c in candidates if len(c) >= 2]


def _match_element(line: str, elements: Sequence[ViewNode]) -> ViewNode | None:
    lowered = line.lower()
    best: tuple[int, int] | None = None
    best_node = None
    for order, node in enumerate(elements):
        for cand in _candidate_strings(node):
            if cand in lowered:
                key = (-len(cand), order)
                if best is None or key < best:
                    best = key
                    best_node = node
    return best_node


def extract_free_text(reply: str, capture: ScreenCapture) -> ParsedPlan:
    """Best-effort action extraction from natural-language replies.

    Verb keywords pick the kind, the longest element text/id substring picks
    the target, quoted or of/as-phrases supply input values. Deliberately
    deterministic and deliberately lossy: ambiguous phrasing yields nothing.
    """
    elements = interactive_elements(capture.tree)
    steps: list[Action] = []
    fragments: list[str] = []
    for line in reply.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        verb_match = _FREE_VERB_RE.search(stripped)
        if verb_match is None:
            fragments.append(stripped)
            continue
        kind = _FREE_KINDS[verb_match.group(1).lower()]
        action: Action | None = None
        if kind == SCROLL:
            direction = _DIRECTION_RE.search(stripped)
            if direction:
                action = Action.scroll(direction.group(1).lower())
        else:
            node = _match_element(stripped, elements)
            if node is not None and node.resource_id:
                if kind == INPUT:
                    value = _free_text_value(stripped)
                    if value:
                        action = Action.input(node.resource_id, value)
                else:
                    action = Action(kind=kind, target_resource_id=node.resource_id)
        if action is None:
            fragments.append(stripped)
        else:
            steps.append(action)
    return ParsedPlan(steps=tuple(steps), unparsed_fragments=tuple(fragments))


def _free_text_value(line: str) -> str:
    quoted = _QUOTED_RE.search(line)
    if quoted:
        return quoted.group(1)
    after = _VALUE_AFTER_RE.search(line)
    if after:
        return after.group(1)
    return DEFAULT_INPUT_LEXICON[0]


# ---------------------------------------------------------------------------
# Policies


@dataclass(frozen=True)
class LlmPolicy:
    """Plan actions by asking a chat backend about the current screen."""

    backend: ChatBackend
    template: PromptTemplate = field(default_factory=PromptTemplate)
    max_prompt_chars: int = 4000
    timeout_ms: int = 30_000
    free_text_fallback: bool = False
    name: str = "llm"

    def next_plan(self, capture: ScreenCapture, rng_seed: int = 0) -> ParsedPlan:
        messages = build_prompt(self.template, capture, self.max_prompt_chars)
        reply = self.backend.complete(messages, timeout_ms=self.timeout_ms)
        plan = parse_reply(reply)
        if not plan.steps and self.free_text_fallback:
            plan = extract_free_text(reply, capture)
        return plan


@dataclass(frozen=True)
class RandomPolicy:
    """Monkey-style baseline: one uniformly random applicable action per screen."""

    lexicon: tuple[str, ...] = DEFAULT_INPUT_LEXICON
    name: str = "random"

    def next_plan(self, capture: ScreenCapture, rng_seed: int = 0) -> ParsedPlan:
        rng = random.Random(rng_seed)
        pool: list[tuple[ViewNode, str]] = []
        for node in interactive_elements(capture.tree):
            addressable = bool(node.resource_id)
            if node.clickable and addressable:
                pool.append((node, TAP))
            if node.long_clickable and addressable:
                pool.append((node, LONG_TAP))
            if node.scrollable:
                pool.append((node, SCROLL))
            if node.editable and addressable:
                pool.append((node, INPUT))
        if not pool:
            return ParsedPlan()
        node, kind = rng.choice(pool)
        if kind == SCROLL:
            action = Action.scroll(rng.choice(DIRECTIONS))
        elif kind == INPUT:
            action = Action.input(node.resource_id, rng.choice(self.lexicon))
        else:
            action = Action(kind=kind, target_resource_id=node.resource_id)
        return ParsedPlan(steps=(action,))
