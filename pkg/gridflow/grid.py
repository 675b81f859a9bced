"""
Staggered periodic grid calculus on the square (0, L)^2.

This module provides:
- GridSpec, the geometry of an n x n periodic cell grid,
- the difference/average operators between cell-, edge- and vertex-centered
  functions, the vertex gradient, the 5-point and skew Laplacians and the
  discrete p-Laplacian,
- the grid inner products, norms and the mean / mean-zero projection.

Storage conventions:
- a field is a numpy array of shape (..., n, n); axis -2 is the x index i and
  axis -1 the y index j, so a stack of fields goes through every operator at once;
- storage index a in 0..n-1 holds logical index a+1 (cell centers sit at
  x = (a + 1/2) h);
- an object living at a half-integer logical index i+1/2 (edges, vertices) is
  stored at storage index i-1, i.e. at the same slot as the cell to its "left".
  With that rule every forward operator (D_x, A_x, ...) reads slots a and a+1
  and every backward operator (d_x, a_x, ...) reads slots a-1 and a, whatever
  the staggering of its argument.
All index arithmetic wraps modulo n. No operator modifies its input.
"""
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, NewType

import numpy as np

from .errors import GridMismatch, InvalidGrid

logger = logging.getLogger(__name__)

CellField = NewType("CellField", np.ndarray)
VertexField = NewType("VertexField", np.ndarray)
EdgeFieldEW = NewType("EdgeFieldEW", np.ndarray)
EdgeFieldNS = NewType("EdgeFieldNS", np.ndarray)

_AXES = (-2, -1)


@dataclass(frozen=True)
class GridSpec:
    """n cells per axis on a periodic square of edge length L."""

    n: int
    L: float

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)):
            raise InvalidGrid(f"n must be an integer, got {self.n!r}")
        if self.n < 4:
            raise InvalidGrid(f"n must be >= 4, got {self.n}")
        if not (math.isfinite(self.L) and self.L > 0):
            raise InvalidGrid(f"L must be a positive real, got {self.L!r}")

    @property
    def h(self) -> float:
        return self.L / self.n

    @property
    def shape(self):
        return (self.n, self.n)

    def cell_centers(self) -> np.ndarray:
        """x_i = (i - 1/2) h for logical i = 1..n."""
        return (np.arange(self.n) + 0.5) * self.h

    def vertex_coords(self) -> np.ndarray:
        """x_{i+1/2} for the vertex stored at slot i-1, i.e. (a + 1) h."""
        return (np.arange(self.n) + 1.0) * self.h

    def mesh(self):
        """Cell-center coordinates (X, Y), indexed [i, j]."""
        x = self.cell_centers()
        return np.meshgrid(x, x, indexing="ij")

    def sample(self, func) -> CellField:
        """Evaluate func(X, Y) at the cell centers."""
        X, Y = self.mesh()
        return CellField(np.asarray(func(X, Y), dtype=float) * np.ones(self.shape))

    def zeros(self) -> CellField:
        return CellField(np.zeros(self.shape))

    def refine(self) -> "GridSpec":
        return GridSpec(2 * self.n, self.L)

    def check(self, *fields):
        """Raise GridMismatch unless every field has this grid's trailing shape."""
        for f in fields:
            if np.shape(f)[-2:] != self.shape:
                raise GridMismatch(f"field of shape {np.shape(f)} does not live on an {self.n}x{self.n} grid")


class VertexVectorField(NamedTuple):
    """Discrete vertex gradient (Dx nu, Dy nu), both components vertex-centered."""

    x_comp: VertexField
    y_comp: VertexField


def shift(nu, di=0, dj=0):
    """Return the field whose slot (a, b) holds nu[a + di, b + dj], periodically."""
    return np.roll(nu, (-di, -dj), axis=_AXES)


# -------------------------
# Forward operators (slot a, a+1)
# -------------------------
def A_x(nu, grid):
    return 0.5 * (shift(nu, 1, 0) + nu)


def A_y(nu, grid):
    return 0.5 * (shift(nu, 0, 1) + nu)


def D_x(nu, grid):
    return (shift(nu, 1, 0) - nu) / grid.h


def D_y(nu, grid):
    return (shift(nu, 0, 1) - nu) / grid.h


# -------------------------
# Backward operators (slot a-1, a)
# -------------------------
def a_x(nu, grid):
    return 0.5 * (nu + shift(nu, -1, 0))


def a_y(nu, grid):
    return 0.5 * (nu + shift(nu, 0, -1))


def d_x(nu, grid):
    return (nu - shift(nu, -1, 0)) / grid.h


def d_y(nu, grid):
    return (nu - shift(nu, 0, -1)) / grid.h


def diff_x_cell_to_ew(nu: CellField, grid: GridSpec) -> EdgeFieldEW:
    """D_x nu at the east-west edges: (nu_{i+1,j} - nu_{i,j}) / h."""
    return EdgeFieldEW(D_x(nu, grid))


def diff_y_cell_to_ns(nu: CellField, grid: GridSpec) -> EdgeFieldNS:
    """D_y nu at the north-south edges: (nu_{i,j+1} - nu_{i,j}) / h."""
    return EdgeFieldNS(D_y(nu, grid))


# -------------------------
# Collocated vertex derivatives and their adjoints
# -------------------------
def vertex_dx(nu: CellField, grid: GridSpec) -> VertexField:
    return VertexField(A_y(D_x(nu, grid), grid))


def vertex_dy(nu: CellField, grid: GridSpec) -> VertexField:
    return VertexField(A_x(D_y(nu, grid), grid))


def cell_dx(v: VertexField, grid: GridSpec) -> CellField:
    return CellField(a_y(d_x(v, grid), grid))


def cell_dy(v: VertexField, grid: GridSpec) -> CellField:
    return CellField(a_x(d_y(v, grid), grid))


def grad_v(nu: CellField, grid: GridSpec) -> VertexVectorField:
    return VertexVectorField(vertex_dx(nu, grid), vertex_dy(nu, grid))


def div_v(vec: VertexVectorField, grid: GridSpec) -> CellField:
    return CellField(cell_dx(vec.x_comp, grid) + cell_dy(vec.y_comp, grid))


def grad_v_sq(nu: CellField, grid: GridSpec) -> VertexField:
    """|grad_v nu|^2 at every vertex."""
    g = grad_v(nu, grid)
    return VertexField(g.x_comp ** 2 + g.y_comp ** 2)


def vertex_to_cell_average(v: VertexField, grid: GridSpec) -> CellField:
    """Mean of the four vertices surrounding each cell."""
    return CellField(a_x(a_y(v, grid), grid))


# -------------------------
# Laplacians
# -------------------------
def laplacian(nu: CellField, grid: GridSpec) -> CellField:
    """Standard 5-point Laplacian d_x D_x + d_y D_y."""
    return CellField(
        (shift(nu, 1, 0) + shift(nu, -1, 0) + shift(nu, 0, 1) + shift(nu, 0, -1) - 4.0 * nu) / grid.h ** 2
    )


def biharmonic(nu: CellField, grid: GridSpec) -> CellField:
    return laplacian(laplacian(nu, grid), grid)


def skew_laplacian(nu: CellField, grid: GridSpec) -> CellField:
    """Diagonal-stencil Laplacian of the vertex gradient."""
    return CellField(
        (shift(nu, 1, 1) + shift(nu, -1, 1) + shift(nu, 1, -1) + shift(nu, -1, -1) - 4.0 * nu)
        / (2.0 * grid.h ** 2)
    )


def _power_weight(q, exponent):
    # q >= 0; integer exponents go through repeated multiplication
    if exponent == 0:
        return np.ones_like(q)
    if float(exponent).is_integer():
        return q ** int(exponent)
    return np.power(q, exponent)


def p_laplacian(nu: CellField, grid: GridSpec, p: float) -> CellField:
    """dx(r Dx nu) + dy(r Dy nu) with vertex weight r = |grad_v nu|^(p-2)."""
    if p < 2:
        raise ValueError(f"p-Laplacian needs p >= 2, got {p}")
    g = grad_v(nu, grid)
    r = _power_weight(g.x_comp ** 2 + g.y_comp ** 2, (p - 2) / 2.0)
    return CellField(cell_dx(r * g.x_comp, grid) + cell_dy(r * g.y_comp, grid))


# -------------------------
# Inner products and norms
# -------------------------
def _hsum(values, grid):
    return grid.h ** 2 * np.sum(values, axis=_AXES)


def ip_cell(nu, xi, grid):
    return _hsum(nu * xi, grid)


def ip_vertex(nu, xi, grid):
    # <A(nu xi), 1> equals the plain weighted vertex sum under periodicity
    return _hsum(nu * xi, grid)


def ip_edge_ew(nu, xi, grid):
    return _hsum(nu * xi, grid)


def ip_edge_ns(nu, xi, grid):
    return _hsum(nu * xi, grid)


def norm2(nu, grid):
    return np.sqrt(ip_cell(nu, nu, grid))


def normp(nu, grid, p):
    return _hsum(np.abs(nu) ** p, grid) ** (1.0 / p)


def norm_inf(nu):
    return np.max(np.abs(nu), axis=_AXES)


def grad_norm_p(nu, grid, p):
    """Vertex-based ||grad_v nu||_p."""
    return grad_norm_p_pow(nu, grid, p) ** (1.0 / p)


def grad_norm_p_pow(nu, grid, p):
    """||grad_v nu||_p^p, without the final root."""
    return _hsum(_power_weight(grad_v_sq(nu, grid), p / 2.0), grid)


def grad_norm_2_edge(nu, grid):
    """Edge-based ||grad_h nu||_2 from D_x and D_y."""
    ex = D_x(nu, grid)
    ey = D_y(nu, grid)
    return np.sqrt(ip_edge_ew(ex, ex, grid) + ip_edge_ns(ey, ey, grid))


def mean(nu, grid):
    return grid.h ** 2 / grid.L ** 2 * np.sum(nu, axis=_AXES)


def project_mean_zero(nu, grid):
    m = mean(nu, grid)
    return CellField(nu - np.expand_dims(m, _AXES) if np.ndim(m) else nu - m)
