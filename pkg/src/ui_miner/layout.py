"""Coarse layout rasterization of view trees and the distance used for retrieval."""

from __future__ import annotations

import io
from dataclasses import dataclass

from ui_miner.hierarchy import ViewNode, ViewTree

BACKGROUND = 0
TEXT = 1
NONTEXT = 2

# 9:16 portrait grid; half the height of the classic 100x112 layout input.
DEFAULT_GRID_W = 56
DEFAULT_GRID_H = 100

_CELL_COLORS = {
    BACKGROUND: (255, 255, 255),
    TEXT: (66, 133, 244),
    NONTEXT: (52, 168, 83),
}


@dataclass(frozen=True)
class LayoutImage:
    """Downscaled grid of cells, each background / text / nontext."""

    width: int
    height: int
    cells: bytes  # row-major, len == width * height

    def cell(self, x: int, y: int) -> int:
        return self.cells[y * self.width + x]


def _is_textual(node: ViewNode) -> bool:
    return "Text" in node.widget_class or node.text != ""


def _covered_cells(lo: int, hi: int, screen: int, grid: int) -> list[int]:
    """Grid cells covered by pixel span [lo, hi) after clamping to the screen.

    A cell is covered iff at least one integer pixel in the span maps into it
    (pixel x lands in cell x*grid//screen), which keeps this exactly equal to
    a 1-px rasterize-then-downsample.
    """
    lo = max(lo, 0)
    hi = min(hi, screen)
    if lo >= hi:
        return []
    if screen >= grid:
        return list(range(lo * grid // screen, (hi - 1) * grid // screen + 1))
    # Upscaled grids leave gaps between consecutive pixels; enumerate exactly.
    return sorted({x * grid // screen for x in range(lo, hi)})


def render_layout(
    tree: ViewTree,
    grid_w: int = DEFAULT_GRID_W,
    grid_h: int = DEFAULT_GRID_H,
) -> LayoutImage:
    """Rasterize leaf bounding boxes into a text/nontext/background grid.

    Leaves paint in draw order so the latest draw_index wins each cell; a
    leaf paints TEXT when its widget name mentions Text or it carries text.
    """
    if grid_w <= 0 or grid_h <= 0:
        raise ValueError("grid dimensions must be positive")
    cells = bytearray(grid_w * grid_h)
    leaves = [n for n in tree.iter_nodes() if not n.children]
    leaves.sort(key=lambda n: n.draw_index)
    for leaf in leaves:
        value = TEXT if _is_textual(leaf) else NONTEXT
        xs = _covered_cells(leaf.bounds.left, leaf.bounds.right, tree.screen_width, grid_w)
        ys = _covered_cells(leaf.bounds.top, leaf.bounds.bottom, tree.screen_height, grid_h)
        for y in ys:
            row = y * grid_w
            for x in xs:
                cells[row + x] = value
    return LayoutImage(width=grid_w, height=grid_h, cells=bytes(cells))


def layout_distance(a: LayoutImage, b: LayoutImage) -> float:
    """Normalized Hamming distance over cells; a metric on equal-sized grids."""
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError("layout grids differ in size")
    differing = sum(1 for x, y in zip(a.cells, b.cells) if x != y)
    return differing / len(a.cells)


def layout_to_png(layout: LayoutImage, out_w: int | None = None, out_h: int | None = None) -> bytes:
    """Encode the grid as a PNG, optionally upscaled to given pixel dims."""
    from PIL import Image

    img = Image.new("RGB", (layout.width, layout.height))
    img.putdata([_CELL_COLORS[v] for v in layout.cells])
    if out_w and out_h:
        img = img.resize((out_w, out_h), Image.NEAREST)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()
