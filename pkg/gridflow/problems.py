"""
The two discrete convex minimization problems solved by PSD.

Fourth order: find u with

    N_h[u] := u - s div_v(|grad_v u|^(p-2) grad_v u) + s eps^2 Delta_h^2 u = f,

the minimizer of E_h[nu] = 1/2 ||nu - f||^2 + s/p ||grad_v nu||_p^p + s eps^2/2 ||Delta_h nu||^2.

Sixth order (H^-1 / mass conserving): find u with mean(u) = mean(g) and

    N_h[u] := s lam u + s eps^2 Delta_h^2 u - s div_v(|grad_v u|^(p-2) grad_v u) - T_h[g - u] = f + const.

The solver keeps the physical unknown u; the energy is written for the
shifted mean-zero nu = u - mean(g). Residuals are f - N_h[u] (the negative
gradient), projected to mean zero for the sixth-order kind.
"""
import logging
import math
from dataclasses import dataclass
from typing import ClassVar, Optional

import numpy as np

from . import grid as fd
from . import spectral
from .errors import InvalidE0, InvalidParameter

logger = logging.getLogger(__name__)

DEFAULT_C9 = 6.0


def _check_common(s, eps, p):
    if not (math.isfinite(s) and s > 0):
        raise InvalidParameter(f"s must be > 0, got {s}")
    if not (0 < eps <= 1):
        raise InvalidParameter(f"eps must lie in (0, 1], got {eps}")
    if not (math.isfinite(p) and p >= 2):
        raise InvalidParameter(f"p must be >= 2, got {p}")


def _check_field(name, field, grid):
    grid.check(field)
    if not np.all(np.isfinite(field)):
        raise InvalidParameter(f"{name} has non-finite entries")


@dataclass(frozen=True, eq=False)
class FourthOrderProblem:
    s: float
    eps: float
    p: float
    f: np.ndarray
    grid: fd.GridSpec

    kind: ClassVar[str] = "4th"

    def __post_init__(self):
        _check_common(self.s, self.eps, self.p)
        _check_field("f", self.f, self.grid)

    def energy(self, u, ws=None):
        return energy_4th(u, self)

    def residual(self, u, ws=None):
        return residual_4th(u, self)

    def operator(self, u, ws=None):
        return nonlinear_4th(u, self)

    def precondition(self, r, ws):
        return spectral.solve_precond_4th(r, self.s, self.eps, ws)

    def precond_norm_sq(self, v, ws=None):
        return precond_norm_sq_4th(v, self)

    def rhs_norm(self):
        return fd.norm2(self.f, self.grid)

    def has_data(self):
        return bool(np.any(self.f != 0))


@dataclass(frozen=True, eq=False)
class SixthOrderProblem:
    s: float
    eps: float
    p: float
    lam: float
    f: np.ndarray
    g: np.ndarray
    grid: fd.GridSpec

    kind: ClassVar[str] = "6th"

    def __post_init__(self):
        _check_common(self.s, self.eps, self.p)
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise InvalidParameter(f"lambda must be >= 0, got {self.lam}")
        _check_field("f", self.f, self.grid)
        _check_field("g", self.g, self.grid)

    @property
    def g_bar(self) -> float:
        return float(fd.mean(self.g, self.grid))

    def scale(self, u):
        """Magnitude used for the mean-zero roundoff checks on u - g."""
        return max(float(fd.norm_inf(u)), float(fd.norm_inf(self.g)))

    def energy(self, u, ws):
        return energy_6th(u - self.g_bar, self, ws, scale=self.scale(u))

    def residual(self, u, ws):
        return residual_6th(u, self, ws)

    def operator(self, u, ws):
        return nonlinear_6th(u, self, ws)

    def precondition(self, r, ws):
        return spectral.solve_precond_6th(r, self.s, self.eps, self.lam, ws)

    def precond_norm_sq(self, v, ws):
        return precond_norm_sq_6th(v, self, ws)

    def rhs_norm(self):
        return fd.norm2(self.f, self.grid)

    def has_data(self):
        return bool(np.any(self.f != 0) or np.any(self.g != 0))


# -------------------------
# Fourth order
# -------------------------
def nonlinear_4th(nu, prob: FourthOrderProblem):
    grid = prob.grid
    return (
        nu
        - prob.s * fd.p_laplacian(nu, grid, prob.p)
        + prob.s * prob.eps ** 2 * fd.biharmonic(nu, grid)
    )


def energy_4th(nu, prob: FourthOrderProblem) -> float:
    grid = prob.grid
    e_fit = 0.5 * fd.ip_cell(nu - prob.f, nu - prob.f, grid)
    e_grad = prob.s / prob.p * fd.grad_norm_p_pow(nu, grid, prob.p)
    lap = fd.laplacian(nu, grid)
    e_lap = 0.5 * prob.s * prob.eps ** 2 * fd.ip_cell(lap, lap, grid)
    return float(e_fit + e_grad + e_lap)


def residual_4th(nu, prob: FourthOrderProblem):
    return fd.CellField(prob.f - nonlinear_4th(nu, prob))


def precond_norm_sq_4th(nu, prob: FourthOrderProblem) -> float:
    grid = prob.grid
    lap = fd.laplacian(nu, grid)
    return float(
        fd.ip_cell(nu, nu, grid)
        + prob.s * fd.grad_norm_2_edge(nu, grid) ** 2
        + prob.s * prob.eps ** 2 * fd.ip_cell(lap, lap, grid)
    )


# -------------------------
# Sixth order
# -------------------------
def nonlinear_6th(u, prob: SixthOrderProblem, ws, scale=None):
    """N_h[u] for mean(u) = mean(g); the T_h term is determined up to a constant."""
    grid = prob.grid
    if scale is None:
        scale = prob.scale(u)
    return (
        prob.s * prob.lam * u
        + prob.s * prob.eps ** 2 * fd.biharmonic(u, grid)
        - prob.s * fd.p_laplacian(u, grid, prob.p)
        - spectral.solve_T(prob.g - u, ws, scale=scale)
    )


def energy_6th(nu, prob: SixthOrderProblem, ws, scale=None) -> float:
    """Energy of the shifted mean-zero unknown nu = u - mean(g)."""
    grid = prob.grid
    if scale is None:
        scale = max(float(fd.norm_inf(nu)), float(fd.norm_inf(prob.g)))
    ws.check_mean_zero(nu, scale, "sixth-order unknown (shifted)")
    g_bar = prob.g_bar
    zeta = nu - prob.g + g_bar
    e_m1 = 0.5 * spectral.norm_minus1_sq(zeta, ws, scale=scale)
    shifted = nu + g_bar
    e_lam = 0.5 * prob.lam * prob.s * fd.ip_cell(shifted, shifted, grid)
    e_f = -fd.ip_cell(nu, prob.f, grid)
    e_grad = prob.s / prob.p * fd.grad_norm_p_pow(nu, grid, prob.p)
    lap = fd.laplacian(nu, grid)
    e_lap = 0.5 * prob.s * prob.eps ** 2 * fd.ip_cell(lap, lap, grid)
    return float(e_m1 + e_lam + e_f + e_grad + e_lap)


def residual_6th(u, prob: SixthOrderProblem, ws):
    """Mean-zero f - N_h[u]; u must carry the mean of g."""
    scale = prob.scale(u)
    ws.check_mean_zero(u - prob.g, scale, "u - g")
    r = prob.f - nonlinear_6th(u, prob, ws, scale=scale)
    return fd.project_mean_zero(r, prob.grid)


def precond_norm_sq_6th(nu, prob: SixthOrderProblem, ws) -> float:
    grid = prob.grid
    lap = fd.laplacian(nu, grid)
    return float(
        prob.s * prob.lam * fd.ip_cell(nu, nu, grid)
        + prob.s * fd.grad_norm_2_edge(nu, grid) ** 2
        + prob.s * prob.eps ** 2 * fd.ip_cell(lap, lap, grid)
        + spectral.norm_minus1_sq(nu, ws)
    )


# -------------------------
# Theoretical constants
# -------------------------
@dataclass(frozen=True)
class ConvergenceConstants:
    c5: float
    c6: float
    c7: float
    c9: float
    c10: float

    @property
    def c8(self) -> float:
        return self.c5


def convergence_constants(prob, E0: float, c9: Optional[float] = None) -> ConvergenceConstants:
    """
    Closed-form C5, C6 and the contraction factor C7 = 1 - C5 / (2 C6).

    Diagnostic only: C9 is not known in closed form, the default is the
    sampled envelope of the discrete Sobolev ratio.
    """
    c9 = DEFAULT_C9 if c9 is None else c9
    if E0 < 0 or (E0 == 0 and prob.has_data()):
        raise InvalidE0(f"E0 must be positive, got {E0}")
    s, eps, p = prob.s, prob.eps, prob.p
    c10 = (p * E0) ** (1.0 / p)
    if prob.kind == "4th":
        c5 = min(0.5, eps * s ** -0.5)
        c6 = 1.0 + (1.0 / p) * (p - 1.0) ** ((2.0 * p - 1.0) / p) * eps ** (-2.0 * (p - 1.0) / p) \
            * s ** (1.0 / p) * c9 ** 2 * c10 ** (p - 2.0)
    else:
        c5 = min(1.0 / 3.0, eps ** (4.0 / 3.0) * s ** (-1.0 / 3.0))
        c6 = 1.0 + (p - 1.0) * (1.5 * p) ** (-2.0 / (3.0 * p)) \
            * (3.0 * p / (3.0 * p - 2.0)) ** ((2.0 - 3.0 * p) / (3.0 * p)) \
            * eps ** ((4.0 - 6.0 * p) / (3.0 * p)) * s ** (2.0 / (3.0 * p)) * c9 ** 2 * c10 ** (p - 2.0)
    c7 = 1.0 - c5 / (2.0 * c6)
    return ConvergenceConstants(c5=c5, c6=c6, c7=c7, c9=c9, c10=c10)
