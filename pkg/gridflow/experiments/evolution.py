"""
Long-time evolutions (thin-film coarsening, SPFC pattern formation).

A run directory holds:
    config.json       the resolved ExperimentConfig
    timeseries.csv    step,t,energy,roughness,iters,wall_ms (one row per step, step 0 included)
    u_t<t>.txt        field snapshots at snapshot_times, lap_t<t>.txt the matching Delta_h u
    u_t<t>.png        rasters of the snapshots when render_png is set, plus movie.gif
    slopes.json       least-squares log-log slopes of roughness and energy over the fit window
"""
import csv
import json
import logging
import os
import time
from typing import Optional, Sequence

import numpy as np

from .. import grid as fd
from ..errors import ConfigError, SolverError
from ..fieldio import export_movie, save_field_png, snapshot_name, write_field
from ..models import (
    EvolutionRecord, SpfcParams, ThinFilmParams, initial_nucleated, initial_random, physical_energy,
    record, roughness, spfc_step, thin_film_step,
)
from ..spectral import SpectralWorkspace
from .config import ExperimentConfig, save_config

logger = logging.getLogger(__name__)

TIMESERIES_COLUMNS = ("step", "t", "energy", "roughness", "iters", "wall_ms")


def fit_loglog_slope(t, y, window) -> Optional[float]:
    """Slope of log y against log t over t in [t0, t1] (positive y only); None with fewer than two points."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    t0, t1 = window
    mask = (t >= t0) & (t <= t1) & (t > 0) & (y > 0)
    if np.count_nonzero(mask) < 2:
        return None
    slope, _ = np.polyfit(np.log(t[mask]), np.log(y[mask]), 1)
    return float(slope)


def default_slope_window(tmax: float):
    return (max(1.0, tmax / 100.0), tmax)


def energy_shift(cfg: ExperimentConfig) -> float:
    """Lower bound (1/p - 1/2) L^2 of the slope-selection energy; zero for SPFC."""
    if cfg.kind == "evolve-thin-film":
        return (1.0 / cfg.p - 0.5) * cfg.L ** 2
    return 0.0


def build_run(cfg: ExperimentConfig):
    """(params, step function, initial field) for an evolve-* config."""
    grid = fd.GridSpec(cfg.n, cfg.L)
    if cfg.kind == "evolve-thin-film":
        params = ThinFilmParams(p=cfg.p, eps=cfg.eps, s=cfg.s, grid=grid)
        return params, thin_film_step, initial_random(grid, cfg.seed, cfg.amplitude)
    if cfg.kind == "evolve-spfc":
        params = SpfcParams(eps=cfg.eps, gamma0=cfg.gamma0, gamma1=cfg.gamma1, s=cfg.s, grid=grid)
        if cfg.nucleation_centers:
            u0 = initial_nucleated(grid, cfg.seed, cfg.nucleation_centers, cfg.amplitude,
                                   cfg.nucleation_amplitude, cfg.nucleation_sigma)
        else:
            u0 = initial_random(grid, cfg.seed, cfg.amplitude)
        return params, spfc_step, u0
    raise ConfigError(f"evolve needs an evolve-* kind, got {cfg.kind!r}")


def snapshot_steps(times: Sequence[float], s: float, nsteps: int) -> dict:
    """Step index -> requested time, for the times that fall inside the run."""
    steps = {}
    for t in sorted(times):
        k = int(round(t / s))
        if k <= nsteps:
            steps[k] = t
        else:
            logger.warning("snapshot time %g lies beyond tmax; skipped", t)
    return steps


def _write_row(writer, rec: EvolutionRecord):
    writer.writerow((rec.step, repr(rec.time), repr(rec.energy), repr(rec.roughness),
                     rec.solver_iters, f"{rec.wall_ms:.3f}"))


def evolve(cfg: ExperimentConfig, out_dir=None) -> str:
    """Run the time loop described by cfg and return the run directory."""
    out_dir = out_dir or cfg.out
    os.makedirs(out_dir, exist_ok=True)
    save_config(os.path.join(out_dir, "config.json"), cfg)
    params, step, u = build_run(cfg)
    grid = params.grid
    ws = SpectralWorkspace(grid)
    psd_cfg = cfg.psd_config()
    nsteps = int(round(cfg.tmax / cfg.s))
    shots = snapshot_steps(cfg.snapshot_times, cfg.s, nsteps)
    frames = []

    def snapshot(k, u):
        t = shots[k]
        write_field(os.path.join(out_dir, snapshot_name("u", t)), u, grid, t)
        write_field(os.path.join(out_dir, snapshot_name("lap", t)), fd.laplacian(u, grid), grid, t)
        if cfg.render_png:
            save_field_png(os.path.join(out_dir, snapshot_name("u", t, "png")), u)
            frames.append(u)

    times, energies, roughs = [], [], []
    logger.info("%s: n=%d L=%g s=%g, %d steps to t=%g -> %s", cfg.kind, cfg.n, cfg.L, cfg.s, nsteps, cfg.tmax, out_dir)
    with open(os.path.join(out_dir, "timeseries.csv"), "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TIMESERIES_COLUMNS)
        rec = EvolutionRecord(0, 0.0, physical_energy(u, params), roughness(u), 0, 0.0)
        _write_row(writer, rec)
        if 0 in shots:
            snapshot(0, u)
        for k in range(1, nsteps + 1):
            started = time.perf_counter()
            try:
                out = step(u, params, ws, psd_cfg)
            except SolverError:
                f.flush()
                logger.exception("solver failed at step %d (t=%g); partial time series kept", k, k * cfg.s)
                raise
            u, report = out[0], out[-1]
            rec = record(k, k * cfg.s, u, params, report, started)
            _write_row(writer, rec)
            times.append(rec.time)
            energies.append(rec.energy)
            roughs.append(rec.roughness)
            if k % cfg.log_every == 0:
                f.flush()
                logger.info("step %d t=%g E=%.8e W=%.6e iters=%d", k, rec.time, rec.energy, rec.roughness,
                            rec.solver_iters)
            if k in shots:
                snapshot(k, u)

    window = cfg.slope_window or default_slope_window(cfg.tmax)
    shift = energy_shift(cfg)
    slopes = {
        "window": list(window),
        "roughness_slope": fit_loglog_slope(times, roughs, window),
        "energy_slope": fit_loglog_slope(times, np.asarray(energies) - shift, window),
        "energy_shift": shift,
    }
    with open(os.path.join(out_dir, "slopes.json"), "w", encoding="utf-8", newline="\n") as f:
        json.dump(slopes, f, indent=2)
        f.write("\n")
    logger.info("slopes over t in [%g, %g]: roughness %s, energy %s", window[0], window[1],
                slopes["roughness_slope"], slopes["energy_slope"])
    if frames:
        export_movie(os.path.join(out_dir, "movie.gif"), frames)
    return out_dir
