"""
Cauchy convergence test for the thin-film scheme.

Each resolution is evolved to time T along the refinement path s = h^2 / 10
from the sinusoidal initial data; successive levels are compared on the fine
grid after bilinear interpolation of the coarse result.
"""
import csv
import logging
import math
import time
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .. import grid as fd
from ..errors import ConfigError, GridMismatch
from ..models import ThinFilmParams, initial_sinusoidal, thin_film_step
from ..psd import PsdConfig
from ..spectral import SpectralWorkspace

logger = logging.getLogger(__name__)

RATE_COLUMNS = ("h_c", "h_f", "cauchy_norm", "rate", "avg_iters", "cpu_s")
CAUCHY_KINDS = {"p4": 4.0, "p6": 6.0}


@dataclass(frozen=True)
class RateTableRow:
    h_c: float
    h_f: float
    cauchy_norm: float
    rate: Optional[float]
    avg_iters: float
    cpu_s: float


@dataclass(frozen=True)
class LevelResult:
    grid: fd.GridSpec
    u: np.ndarray
    steps: int
    avg_iters: float
    cpu_s: float


def interpolate_coarse_to_fine(u_c, grid_c: fd.GridSpec, grid_f: Optional[fd.GridSpec] = None) -> fd.CellField:
    """
    Bilinear prolongation to the grid with 2n cells. A fine center sits h_c/4
    from its parent center, so each axis mixes the parent and the nearer
    neighbour with weights 3/4 and 1/4.
    """
    grid_f = grid_f or grid_c.refine()
    if grid_f.n != 2 * grid_c.n or grid_f.L != grid_c.L:
        raise GridMismatch(f"cannot interpolate from {grid_c} to {grid_f}")
    grid_c.check(u_c)

    def along(v, axis):
        lower = 0.75 * v + 0.25 * np.roll(v, 1, axis=axis)
        upper = 0.75 * v + 0.25 * np.roll(v, -1, axis=axis)
        if axis == -2:
            out = np.stack([lower, upper], axis=-2)
            return out.reshape(v.shape[:-2] + (2 * v.shape[-2], v.shape[-1]))
        out = np.stack([lower, upper], axis=-1)
        return out.reshape(v.shape[:-1] + (2 * v.shape[-1],))

    return fd.CellField(along(along(np.asarray(u_c, dtype=float), -2), -1))


def refinement_steps(grid: fd.GridSpec, T: float):
    """(s, nsteps) with s as close to h^2/10 as lands exactly on T."""
    nsteps = max(1, int(round(T / (0.1 * grid.h ** 2))))
    return T / nsteps, nsteps


def evolve_level(n: int, p: float, L: float, eps: float, T: float, cfg: Optional[PsdConfig] = None) -> LevelResult:
    grid = fd.GridSpec(n, L)
    s, nsteps = refinement_steps(grid, T)
    params = ThinFilmParams(p=p, eps=eps, s=s, grid=grid)
    ws = SpectralWorkspace(grid)
    u = initial_sinusoidal(grid)
    iters = 0
    started = time.perf_counter()
    for _ in range(nsteps):
        u, report = thin_film_step(u, params, ws, cfg)
        iters += report.iterations
    elapsed = time.perf_counter() - started
    logger.info("level n=%d: %d steps of s=%.3e, %.2f PSD iterations/step, %.1fs",
                n, nsteps, s, iters / nsteps, elapsed)
    return LevelResult(grid=grid, u=u, steps=nsteps, avg_iters=iters / nsteps, cpu_s=elapsed / nsteps)


def cauchy_convergence(kind, levels: Sequence[int], L: float = 3.2, eps: float = 0.1, T: float = 0.32,
                       cfg: Optional[PsdConfig] = None) -> List[RateTableRow]:
    """Rate table over consecutive level pairs; kind is "p4", "p6" or a numeric p."""
    p = CAUCHY_KINDS.get(kind, kind)
    try:
        p = float(p)
    except (TypeError, ValueError):
        raise ConfigError(f"unknown convergence kind {kind!r}") from None
    levels = list(levels)
    for lo, hi in zip(levels, levels[1:]):
        if hi != 2 * lo:
            raise ConfigError(f"levels must double strictly, got {levels}")
    results = [evolve_level(n, p, L, eps, T, cfg) for n in levels]

    rows = []
    prev = None
    for coarse, fine in zip(results, results[1:]):
        delta = fine.u - interpolate_coarse_to_fine(coarse.u, coarse.grid, fine.grid)
        norm = float(fd.norm2(delta, fine.grid))
        rate = math.log2(prev / norm) if prev is not None else None
        rows.append(RateTableRow(h_c=coarse.grid.h, h_f=fine.grid.h, cauchy_norm=norm, rate=rate,
                                 avg_iters=fine.avg_iters, cpu_s=fine.cpu_s))
        logger.info("h_c=%.4g h_f=%.4g |delta|=%.4e rate=%s", coarse.grid.h, fine.grid.h, norm,
                    "-" if rate is None else f"{rate:.3f}")
        prev = norm
    return rows


def write_rate_table(path, rows: Sequence[RateTableRow]):
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(RATE_COLUMNS)
        for row in rows:
            w.writerow([repr(row.h_c), repr(row.h_f), repr(row.cauchy_norm),
                        "" if row.rate is None else repr(row.rate), repr(row.avg_iters), repr(row.cpu_s)])
    logger.info("wrote %s", path)
