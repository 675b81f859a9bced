"""
Convex-splitting time steppers for the two gradient-flow applications, their
initial data and their physical diagnostics.

Thin-film epitaxy with slope selection (p = 4, 6, ...):
    u^{n+1} - s div_v(|grad_v u^{n+1}|^(p-2) grad_v u^{n+1}) + s eps^2 Delta_h^2 u^{n+1}
        = u^n - s Delta^v_h u^n
Square phase field crystal (SPFC, p = 4), with w the (s-scaled) chemical potential:
    u^{n+1} - Delta_h w^{n+1} = u^n
    s gamma0 u^{n+1} - s div_v(|grad_v u^{n+1}|^2 grad_v u^{n+1}) + s eps^2 Delta_h^2 u^{n+1} - w^{n+1}
        = -s gamma1 Delta_h u^n
"""
import logging
import math
import time
from dataclasses import dataclass
from typing import ClassVar, Optional, Sequence, Tuple

import numpy as np

from . import grid as fd
from . import spectral
from .errors import InvalidParameter
from .problems import FourthOrderProblem, SixthOrderProblem
from .psd import PsdConfig, PsdReport, psd_solve

logger = logging.getLogger(__name__)

NUCLEATION_AMPLITUDE = 0.3
NUCLEATION_SIGMA = 2.0


@dataclass(frozen=True)
class ThinFilmParams:
    p: float
    eps: float
    s: float
    grid: fd.GridSpec

    def __post_init__(self):
        if not (float(self.p).is_integer() and int(self.p) % 2 == 0 and self.p >= 4):
            raise InvalidParameter(f"thin film p must be an even integer >= 4, got {self.p}")
        if not (0 < self.eps <= 1):
            raise InvalidParameter(f"eps must lie in (0, 1], got {self.eps}")
        if not (math.isfinite(self.s) and self.s > 0):
            raise InvalidParameter(f"s must be > 0, got {self.s}")


@dataclass(frozen=True)
class SpfcParams:
    """SPFC parameters. eps > 1 passes here but is rejected when the step problem is built."""

    eps: float
    gamma0: float
    gamma1: float
    s: float
    grid: fd.GridSpec

    p: ClassVar[float] = 4.0

    def __post_init__(self):
        if not (self.eps > 0):
            raise InvalidParameter(f"eps must be > 0, got {self.eps}")
        if not (self.gamma0 >= 0 and self.gamma1 >= 0):
            raise InvalidParameter(f"gamma0 and gamma1 must be >= 0, got {self.gamma0}, {self.gamma1}")
        if not (math.isfinite(self.s) and self.s > 0):
            raise InvalidParameter(f"s must be > 0, got {self.s}")


@dataclass(frozen=True)
class EvolutionRecord:
    step: int
    time: float
    energy: float
    roughness: float
    solver_iters: int
    wall_ms: float


# -------------------------
# Time steps
# -------------------------
def thin_film_step(u_n, params: ThinFilmParams, ws, cfg: Optional[PsdConfig] = None) -> Tuple[fd.CellField, PsdReport]:
    grid = params.grid
    f = u_n - params.s * fd.skew_laplacian(u_n, grid)
    prob = FourthOrderProblem(s=params.s, eps=params.eps, p=params.p, f=f, grid=grid)
    return psd_solve(u_n, prob, ws, cfg)


def spfc_step(u_n, params: SpfcParams, ws, cfg: Optional[PsdConfig] = None):
    """One SPFC step. Returns (u_next, w_next, report); mean(u_next) = mean(u_n)."""
    grid = params.grid
    f = -params.s * params.gamma1 * fd.laplacian(u_n, grid)
    prob = SixthOrderProblem(
        s=params.s, eps=params.eps, p=params.p, lam=params.gamma0, f=f, g=u_n, grid=grid
    )
    u_next, report = psd_solve(u_n, prob, ws, cfg)
    w_next = spectral.solve_T(prob.g - u_next, ws, scale=prob.scale(u_next))
    # mean of u_next equals mean(g) by conservation
    w_next = w_next + (params.s * params.gamma0 * fd.mean(u_next, grid) - fd.mean(f, grid))
    return u_next, fd.CellField(w_next), report


# -------------------------
# Initial data
# -------------------------
def initial_sinusoidal(grid: fd.GridSpec) -> fd.CellField:
    L = grid.L

    def profile(x, y):
        return (
            0.1 * np.sin(2 * np.pi * x / L) ** 2 * np.sin(4 * np.pi * (y - 1.4) / L)
            - 0.1 * np.cos(2 * np.pi * (x - 2.0) / L) * np.sin(2 * np.pi * y / L)
        )

    return grid.sample(profile)


def initial_random(grid: fd.GridSpec, seed: int, amplitude: float = 0.05) -> fd.CellField:
    """amplitude * (2 r - 1), r uniform on [0, 1) from PCG64(seed)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    r = rng.random(grid.shape)
    return fd.CellField(amplitude * (2.0 * r - 1.0))


def initial_nucleated(grid: fd.GridSpec, seed: int, centers: Sequence[Sequence[float]],
                      amplitude: float = 0.05, bump_amplitude: float = NUCLEATION_AMPLITUDE,
                      sigma: float = NUCLEATION_SIGMA) -> fd.CellField:
    """Random background plus Gaussian bumps at the given (x, y) centers, periodically wrapped."""
    if not sigma > 0:
        raise InvalidParameter(f"nucleation sigma must be > 0, got {sigma}")
    u = initial_random(grid, seed, amplitude)
    X, Y = grid.mesh()
    L = grid.L
    for xc, yc in centers:
        dx = (X - xc + 0.5 * L) % L - 0.5 * L
        dy = (Y - yc + 0.5 * L) % L - 0.5 * L
        u = u + bump_amplitude * np.exp(-(dx ** 2 + dy ** 2) / (2.0 * sigma ** 2))
    return fd.CellField(u)


# -------------------------
# Diagnostics
# -------------------------
def roughness(u) -> float:
    """W = ||u - mean(u)||_2 / L, i.e. the RMS deviation (h^2 / L^2 = 1 / n^2)."""
    dev = u - np.mean(u, axis=(-2, -1), keepdims=True)
    return float(np.sqrt(np.mean(dev ** 2)))


def physical_energy_thin_film(u, params: ThinFilmParams) -> float:
    grid = params.grid
    lap = fd.laplacian(u, grid)
    return float(
        fd.grad_norm_p_pow(u, grid, params.p) / params.p
        - 0.5 * fd.grad_norm_p_pow(u, grid, 2)
        + 0.5 * params.eps ** 2 * fd.ip_cell(lap, lap, grid)
    )


def physical_energy_spfc(u, params: SpfcParams) -> float:
    grid = params.grid
    lap = fd.laplacian(u, grid)
    return float(
        0.5 * params.gamma0 * fd.ip_cell(u, u, grid)
        - 0.5 * params.gamma1 * fd.grad_norm_2_edge(u, grid) ** 2
        + 0.5 * params.eps ** 2 * fd.ip_cell(lap, lap, grid)
        + 0.25 * fd.grad_norm_p_pow(u, grid, 4)
    )


def physical_energy(u, params) -> float:
    if isinstance(params, SpfcParams):
        return physical_energy_spfc(u, params)
    return physical_energy_thin_film(u, params)


def record(step_index: int, t: float, u, params, report: PsdReport, started: float) -> EvolutionRecord:
    """EvolutionRecord for the state after step_index; started is a time.perf_counter() stamp."""
    return EvolutionRecord(
        step=step_index,
        time=t,
        energy=physical_energy(u, params),
        roughness=roughness(u),
        solver_iters=report.iterations,
        wall_ms=1e3 * (time.perf_counter() - started),
    )
