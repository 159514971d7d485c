"""Shared tree builders and hypothesis strategies."""

from __future__ import annotations

from hypothesis import strategies as st

from ui_miner.device import Action
from ui_miner.hierarchy import Rect, ViewNode, ViewTree


def make_node(
    cls: str = "android.widget.Button",
    rid: str = "",
    text: str = "",
    desc: str = "",
    bounds: tuple[int, int, int, int] = (0, 0, 100, 100),
    clickable: bool = False,
    long_clickable: bool = False,
    scrollable: bool = False,
    enabled: bool = True,
    children: tuple = (),
) -> ViewNode:
    return ViewNode(
        widget_class=cls,
        resource_id=rid,
        text=text,
        content_desc=desc,
        bounds=Rect(*bounds),
        clickable=clickable,
        long_clickable=long_clickable,
        scrollable=scrollable,
        editable=cls.endswith("EditText"),
        enabled=enabled,
        children=list(children),
    )


def renumber(root: ViewNode) -> ViewNode:
    counter = [0]

    def walk(node: ViewNode) -> None:
        node.draw_index = counter[0]
        counter[0] += 1
        for child in node.children:
            walk(child)

    walk(root)
    return root


def make_tree(root: ViewNode, w: int = 1080, h: int = 1920) -> ViewTree:
    return ViewTree(root=renumber(root), screen_width=w, screen_height=h)


# ---------------------------------------------------------------------------
# Strategies

WIDGET_CLASSES = [
    "android.widget.Button",
    "android.widget.TextView",
    "android.widget.EditText",
    "android.widget.ImageView",
    "android.widget.CheckBox",
    "android.widget.FrameLayout",
    "android.widget.LinearLayout",
    "android.widget.ListView",
    "android.widget.RatingBar",
    "android.view.View",
    "com.example.custom.FancyWidget",
]

# XML 1.0 valid chars only: tab/newline/CR plus 0x20.. minus surrogates and
# the two noncharacters ET refuses to emit.
_xml_chars = st.characters(
    min_codepoint=0x20,
    max_codepoint=0x10FFFF,
    blacklist_categories=("Cs",),
    blacklist_characters="￾￿",
)
xml_texts = st.text(alphabet=st.one_of(_xml_chars, st.sampled_from("\t\n\r")), max_size=16)

resource_ids = st.one_of(
    st.just(""),
    st.text("abcdefghijklmnopqrstuvwxyz0123456789_", min_size=1, max_size=12),
    st.text("abcdefghijklmnopqrstuvwxyz_", min_size=1, max_size=8).map(
        lambda s: f"com.example:id/{s}"
    ),
)


@st.composite
def rects(draw) -> Rect:
    left = draw(st.integers(min_value=0, max_value=1200))
    top = draw(st.integers(min_value=0, max_value=2000))
    width = draw(st.integers(min_value=0, max_value=800))
    height = draw(st.integers(min_value=0, max_value=800))
    return Rect(left, top, left + width, top + height)


@st.composite
def view_nodes(draw, max_depth: int = 3) -> ViewNode:
    cls = draw(st.sampled_from(WIDGET_CLASSES))
    children = []
    if max_depth > 0:
        children = draw(
            st.lists(view_nodes(max_depth=max_depth - 1), min_size=0, max_size=3)
        )
    return ViewNode(
        widget_class=cls,
        resource_id=draw(resource_ids),
        text=draw(xml_texts),
        content_desc=draw(xml_texts),
        bounds=draw(rects()),
        clickable=draw(st.booleans()),
        long_clickable=draw(st.booleans()),
        scrollable=draw(st.booleans()),
        editable=cls.endswith("EditText"),
        enabled=draw(st.booleans()),
        children=children,
    )


@st.composite
def view_trees(draw) -> ViewTree:
    root = renumber(draw(view_nodes()))
    return ViewTree(
        root=root,
        screen_width=draw(st.integers(min_value=1, max_value=2000)),
        screen_height=draw(st.integers(min_value=1, max_value=3000)),
    )


_grammar_ids = st.text("abcdefghijklmnopqrstuvwxyz0123456789_", min_size=1, max_size=10)
_value_words = st.text(
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789@._!-",
    min_size=1,
    max_size=8,
)
_values = st.lists(_value_words, min_size=1, max_size=3).map(" ".join)

actions = st.one_of(
    _grammar_ids.map(Action.tap),
    _grammar_ids.map(Action.long_tap),
    st.sampled_from(["up", "down", "left", "right"]).map(Action.scroll),
    st.builds(Action.input, _grammar_ids, _values),
)

action_plans = st.lists(actions, min_size=0, max_size=6)
