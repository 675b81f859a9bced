"""
Field snapshots: the text file format shared by every run, and raster/movie
output of fields through Pillow and imageio.

Text format:
    gridflow-field n=<n> L=<L> t=<t>
followed by n lines; line j holds u[0, j], u[1, j], ..., u[n-1, j]
(comma separated, %.17g so a round trip is exact).
"""
import logging
import os
import re

import imageio
import numpy as np
from PIL import Image, ImageOps

from . import grid as fd
from .errors import FieldFormatError, InvalidGrid

logger = logging.getLogger(__name__)

HEADER_TAG = "gridflow-field"
_HEADER_RE = re.compile(rf"^{HEADER_TAG} n=(\S+) L=(\S+) t=(\S+)$")


# -------------------------
# Text snapshots
# -------------------------
def format_field(u, grid: fd.GridSpec, t: float = 0.0) -> str:
    grid.check(u)
    lines = [f"{HEADER_TAG} n={grid.n} L={grid.L!r} t={float(t)!r}"]
    for j in range(grid.n):
        lines.append(",".join("%.17g" % v for v in u[:, j]))
    return "\n".join(lines) + "\n"


def parse_field(text: str):
    """Inverse of format_field. Returns (u, grid, t)."""
    rows = text.splitlines()
    if not rows:
        raise FieldFormatError("empty field file")
    m = _HEADER_RE.match(rows[0].strip())
    if m is None:
        raise FieldFormatError(f"bad header line: {rows[0]!r}")
    try:
        n = int(m.group(1))
        L = float(m.group(2))
        t = float(m.group(3))
    except ValueError as exc:
        raise FieldFormatError(f"bad header values in {rows[0]!r}") from exc
    try:
        grid = fd.GridSpec(n, L)
    except InvalidGrid as exc:
        raise FieldFormatError(str(exc)) from exc
    body = [r for r in rows[1:] if r.strip()]
    if len(body) != n:
        raise FieldFormatError(f"expected {n} data lines, found {len(body)}")
    u = np.empty(grid.shape)
    for j, line in enumerate(body):
        parts = line.split(",")
        if len(parts) != n:
            raise FieldFormatError(f"line {j + 2}: expected {n} values, found {len(parts)}")
        try:
            u[:, j] = [float(v) for v in parts]
        except ValueError as exc:
            raise FieldFormatError(f"line {j + 2}: {exc}") from exc
    return fd.CellField(u), grid, t


def write_field(path, u, grid: fd.GridSpec, t: float = 0.0):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(format_field(u, grid, t))
    logger.debug("wrote field snapshot %s (t=%g)", path, t)


def read_field(path):
    with open(path, "r", encoding="utf-8") as f:
        return parse_field(f.read())


def snapshot_name(prefix: str, t: float, ext: str = "txt") -> str:
    """u_t12.5.txt style names."""
    return f"{prefix}_t{float(t):g}.{ext}"


# -------------------------
# Rasters
# -------------------------
def hex_to_rgb(hex_color):
    """'#rrggbb' -> (r, g, b)."""
    hex_color = hex_color.lstrip("#")
    if len(hex_color) != 6:
        raise ValueError(f"expected #rrggbb, got {hex_color!r}")
    return tuple(int(hex_color[i:i + 2], 16) for i in (0, 2, 4))


class FieldRenderer:
    """
    Maps fields to Pillow images: x to the right, y upward, one cell_size x
    cell_size block per cell. Values are scaled linearly between vmin and
    vmax (per field when unset) and colored from low_color to high_color.
    """

    def __init__(self, cell_size=4, low_color="#000000", high_color="#ffffff", vmin=None, vmax=None):
        if cell_size < 1:
            raise ValueError(f"cell_size must be >= 1, got {cell_size}")
        self.cell_size = int(cell_size)
        self.low_color = hex_to_rgb(low_color)
        self.high_color = hex_to_rgb(high_color)
        self.vmin = vmin
        self.vmax = vmax

    def to_gray(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        lo = np.min(u) if self.vmin is None else self.vmin
        hi = np.max(u) if self.vmax is None else self.vmax
        if hi > lo:
            scaled = np.clip((u - lo) / (hi - lo), 0.0, 1.0)
        else:
            scaled = np.full(u.shape, 0.5)
        # rows of an image run top to bottom, so y is flipped
        return np.round(255 * scaled.T[::-1]).astype(np.uint8)

    def render(self, u) -> Image.Image:
        gray = Image.fromarray(self.to_gray(u))
        n_x, n_y = np.shape(u)
        gray = gray.resize((n_x * self.cell_size, n_y * self.cell_size), Image.Resampling.NEAREST)
        return ImageOps.colorize(gray, black=self.low_color, white=self.high_color)


def render_field(u, cell_size=4, **kwargs) -> Image.Image:
    return FieldRenderer(cell_size=cell_size, **kwargs).render(u)


def save_field_png(path, u, cell_size=4, **kwargs):
    render_field(u, cell_size, **kwargs).save(path)
    logger.debug("wrote %s", path)


def export_movie(path, fields, fps=5, cell_size=4, **kwargs):
    """Animated GIF of a field sequence; the color range is shared by all frames unless given."""
    fields = [np.asarray(u) for u in fields]
    if not fields:
        raise ValueError("no frames to export")
    kwargs.setdefault("vmin", float(min(np.min(u) for u in fields)))
    kwargs.setdefault("vmax", float(max(np.max(u) for u in fields)))
    renderer = FieldRenderer(cell_size=cell_size, **kwargs)
    images = [np.asarray(renderer.render(u)) for u in fields]
    imageio.mimsave(path, images, duration=1000.0 / fps, loop=0)
    logger.info("wrote %d frames to %s", len(images), os.fspath(path))
    return path
