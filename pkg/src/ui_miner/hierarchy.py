"""Data model, parser and serializers for UIAutomator view-hierarchy dumps."""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from typing import Iterator
from xml.etree import ElementTree


class HierarchyError(Exception):
    """Base class for view-hierarchy parse failures."""


class MalformedXml(HierarchyError):
    pass


class MalformedBounds(HierarchyError):
    pass


class EmptyHierarchy(HierarchyError):
    pass


_BOUNDS_RE = re.compile(r"\[(-?\d+),(-?\d+)\]\[(-?\d+),(-?\d+)\]")


@dataclass(frozen=True)
class Rect:
    """Screen-coordinate rectangle, origin top-left, pixels."""

    left: int
    top: int
    right: int
    bottom: int

    def __post_init__(self) -> None:
        if min(self.left, self.top, self.right, self.bottom) < 0:
            raise ValueError(f"negative coordinate in {self}")
        if self.left > self.right or self.top > self.bottom:
            raise ValueError(f"inverted rect {self}")

    @property
    def width(self) -> int:
        return self.right - self.left

    @property
    def height(self) -> int:
        return self.bottom - self.top

    def center(self) -> tuple[int, int]:
        return (self.left + self.right) // 2, (self.top + self.bottom) // 2

    def contains(self, other: "Rect") -> bool:
        return (
            self.left <= other.left
            and self.top <= other.top
            and self.right >= other.right
            and self.bottom >= other.bottom
        )


@dataclass
class ViewNode:
    """One element of the UI hierarchy, children in document order."""

    widget_class: str = ""
    resource_id: str = ""
    text: str = ""
    content_desc: str = ""
    bounds: Rect = field(default_factory=lambda: Rect(0, 0, 0, 0))
    clickable: bool = False
    long_clickable: bool = False
    scrollable: bool = False
    editable: bool = False
    enabled: bool = False
    draw_index: int = 0
    children: list["ViewNode"] = field(default_factory=list)

    @property
    def simple_class(self) -> str:
        return self.widget_class.rsplit(".", 1)[-1]

    def is_interactive(self) -> bool:
        return self.enabled and (
            self.clickable or self.long_clickable or self.scrollable or self.editable
        )


@dataclass
class ViewTree:
    """A parsed dump: root node plus the screen geometry it was captured on."""

    root: ViewNode
    screen_width: int
    screen_height: int
    source_digest: str = ""

    def __post_init__(self) -> None:
        if self.screen_width <= 0 or self.screen_height <= 0:
            raise ValueError("screen dimensions must be positive")

    def iter_nodes(self) -> Iterator[ViewNode]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def node_count(self) -> int:
        return sum(1 for _ in self.iter_nodes())

    def find_by_resource_id(self, resource_id: str) -> ViewNode | None:
        """Exact resource-id match first, then unique match on the part after '/'."""
        for node in self.iter_nodes():
            if node.resource_id == resource_id:
                return node
        for node in self.iter_nodes():
            if node.resource_id.rsplit("/", 1)[-1] == resource_id and node.resource_id:
                return node
        return None


def _parse_bounds(value: str) -> Rect:
    m = _BOUNDS_RE.fullmatch(value)
    if m is None:
        raise MalformedBounds(f"bounds attribute {value!r} does not match [l,t][r,b]")
    # Real dumps carry negative coords for views scrolled off-screen; the Rect
    # type cannot hold them, so they floor at 0.
    l, t, r, b = (max(0, int(g)) for g in m.groups())
    if l > r or t > b:
        raise MalformedBounds(f"bounds attribute {value!r} is inverted")
    return Rect(l, t, r, b)


def _truthy(value: str) -> bool:
    return value == "true"


def _parse_node(elem: ElementTree.Element, counter: list[int]) -> ViewNode:
    attrs = elem.attrib
    widget_class = attrs.get("class", "")
    bounds_attr = attrs.get("bounds", "")
    bounds = _parse_bounds(bounds_attr) if bounds_attr else Rect(0, 0, 0, 0)
    node = ViewNode(
        widget_class=widget_class,
        resource_id=attrs.get("resource-id", ""),
        text=attrs.get("text", ""),
        content_desc=attrs.get("content-desc", ""),
        bounds=bounds,
        clickable=_truthy(attrs.get("clickable", "")),
        long_clickable=_truthy(attrs.get("long-clickable", "")),
        scrollable=_truthy(attrs.get("scrollable", "")),
        editable=widget_class.endswith("EditText"),
        enabled=_truthy(attrs.get("enabled", "")),
        draw_index=counter[0],
    )
    counter[0] += 1
    node.children = [_parse_node(c, counter) for c in elem if c.tag == "node"]
    return node


def parse_hierarchy(xml_text: str, screen_w: int, screen_h: int) -> ViewTree:
    """Parse a UIAutomator dump into a ViewTree.

    Nodes get consecutive pre-order draw_index values starting at 0; a node is
    editable iff its class name ends with EditText. Unknown attributes are
    ignored, absent ones default to the zero value.
    """
    try:
        doc = ElementTree.fromstring(xml_text)
    except ElementTree.ParseError as exc:
        raise MalformedXml(str(exc)) from exc
    if doc.tag == "node":
        root_elem = doc
    else:
        node_elems = [c for c in doc if c.tag == "node"]
        if not node_elems:
            raise EmptyHierarchy("no node elements in dump")
        if len(node_elems) > 1:
            raise MalformedXml("multiple root nodes in dump")
        root_elem = node_elems[0]
    root = _parse_node(root_elem, [0])
    digest = hashlib.md5(xml_text.encode("utf-8")).hexdigest()
    return ViewTree(root=root, screen_width=screen_w, screen_height=screen_h, source_digest=digest)


def _node_to_element(node: ViewNode) -> ElementTree.Element:
    b = node.bounds
    elem = ElementTree.Element(
        "node",
        {
            "class": node.widget_class,
            "resource-id": node.resource_id,
            "text": node.text,
            "content-desc": node.content_desc,
            "bounds": f"[{b.left},{b.top}][{b.right},{b.bottom}]",
            "clickable": "true" if node.clickable else "false",
            "long-clickable": "true" if node.long_clickable else "false",
            "scrollable": "true" if node.scrollable else "false",
            "enabled": "true" if node.enabled else "false",
        },
    )
    elem.extend(_node_to_element(c) for c in node.children)
    return elem


def serialize_hierarchy(tree: ViewTree) -> str:
    """Emit the dump dialect parse_hierarchy accepts; round-trips structurally."""
    wrapper = ElementTree.Element("hierarchy", {"rotation": "0"})
    wrapper.append(_node_to_element(tree.root))
    return ElementTree.tostring(wrapper, encoding="unicode")


def interactive_elements(tree: ViewTree) -> list[ViewNode]:
    """All enabled nodes that afford tap, long-tap, scroll or input, in draw order."""
    return [n for n in tree.iter_nodes() if n.is_interactive()]


NO_INTERACTIVE_PLACEHOLDER = "(no interactive elements)"


def _one_line(value: str) -> str:
    return " ".join(value.split())


def _prompt_line(index: int, node: ViewNode) -> str:
    return (
        f"{index}. {node.simple_class} id={node.resource_id} "
        f'text="{_one_line(node.text)}" desc="{_one_line(node.content_desc)}"'
    )


def serialize_for_prompt(tree: ViewTree, max_chars: int) -> str:
    """Compact listing of interactive elements for use as LLM context.

    One numbered line per element; whole lines are dropped from the end until
    the result fits max_chars, and a trailing "(+N omitted)" marker reports
    how many were cut.
    """
    if max_chars < 256:
        raise ValueError("max_chars must be >= 256")
    elements = interactive_elements(tree)
    if not elements:
        return NO_INTERACTIVE_PLACEHOLDER
    lines = [_prompt_line(i + 1, n) for i, n in enumerate(elements)]
    full = "\n".join(lines)
    if len(full) <= max_chars:
        return full
    for kept in range(len(lines) - 1, -1, -1):
        candidate = "\n".join(lines[:kept] + [f"(+{len(lines) - kept} omitted)"])
        if len(candidate) <= max_chars:
            return candidate
    return f"(+{len(lines)} omitted)"


def trees_equal(a: ViewTree, b: ViewTree) -> bool:
    """Structural equality over every field except source_digest."""
    if (a.screen_width, a.screen_height) != (b.screen_width, b.screen_height):
        return False

    def node_eq(x: ViewNode, y: ViewNode) -> bool:
        if (
            x.widget_class != y.widget_class
            or x.resource_id != y.resource_id
            or x.text != y.text
            or x.content_desc != y.content_desc
            or x.bounds != y.bounds
            or x.clickable != y.clickable
            or x.long_clickable != y.long_clickable
            or x.scrollable != y.scrollable
            or x.editable != y.editable
            or x.enabled != y.enabled
            or x.draw_index != y.draw_index
            or len(x.children) != len(y.children)
        ):
            return False
        return all(node_eq(cx, cy) for cx, cy in zip(x.children, y.children))

    return node_eq(a.root, b.root)
