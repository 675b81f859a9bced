"""
Solver-complexity study: PSD iteration traces against a manufactured solution.

For every (h, eps, s, p) combination the right-hand side is f := N_h[u~] with
u~ = sin(2 pi x) cos(2 pi y) cos(s) / (2 pi), so u~ is the exact discrete
solution, and PSD runs from a perturbed start until
gamma_k = ||u^k - u~||_inf <= tau.
"""
import csv
import itertools
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from .. import grid as fd
from ..errors import ConfigError
from ..problems import FourthOrderProblem, nonlinear_4th
from ..psd import PsdConfig, PsdReport, psd_solve
from ..spectral import SpectralWorkspace

logger = logging.getLogger(__name__)

TAU = 1e-8
SUMMARY_COLUMNS = ("p", "eps", "s", "n", "iterations", "reached")


def manufactured_solution(grid: fd.GridSpec, s: float) -> fd.CellField:
    L = grid.L
    return grid.sample(
        lambda x, y: np.sin(2 * np.pi * x / L) * np.cos(2 * np.pi * y / L) * np.cos(s) / (2 * np.pi)
    )


def manufactured_start(grid: fd.GridSpec, s: float) -> fd.CellField:
    """u~(., 0) plus the s^2 sin(4 pi x) sin(6 pi y) perturbation."""
    L = grid.L
    bump = grid.sample(lambda x, y: np.sin(4 * np.pi * x / L) * np.sin(6 * np.pi * y / L))
    return fd.CellField(manufactured_solution(grid, 0.0) + s ** 2 * bump)


@dataclass(frozen=True)
class ComplexityCase:
    p: float
    eps: float
    s: float
    n: int

    @property
    def label(self) -> str:
        return f"p{self.p:g}_eps{self.eps:g}_s{self.s:g}_n{self.n}"


@dataclass
class ComplexityTrace:
    case: ComplexityCase
    gammas: List[float] = field(default_factory=list)
    reached: bool = False
    report: Optional[PsdReport] = None

    @property
    def iterations(self) -> int:
        return len(self.gammas) - 1


def run_case(case: ComplexityCase, L: float = 1.0, tau: float = TAU, max_iter: int = 1000) -> ComplexityTrace:
    grid = fd.GridSpec(case.n, L)
    ws = SpectralWorkspace(grid)
    exact = manufactured_solution(grid, case.s)
    prob = FourthOrderProblem(s=case.s, eps=case.eps, p=case.p, f=grid.zeros(), grid=grid)
    prob = replace(prob, f=nonlinear_4th(exact, prob))
    trace = ComplexityTrace(case)

    def reached_tau(k, u):
        gamma = float(fd.norm_inf(u - exact))
        trace.gammas.append(gamma)
        return gamma <= tau

    # tol_rel is unused once stop_when replaces the residual test
    cfg = PsdConfig(max_iter=max_iter)
    _, trace.report = psd_solve(manufactured_start(grid, case.s), prob, ws, cfg, stop_when=reached_tau)
    trace.reached = trace.report.converged
    if trace.reached:
        logger.info("%s: gamma <= %.0e after %d iterations", case.label, tau, trace.iterations)
    else:
        logger.warning("%s: gamma=%.3e after max_iter=%d", case.label, trace.gammas[-1], max_iter)
    return trace


def cases_from_lists(h_list: Sequence[float], eps_list: Sequence[float], s_list: Sequence[float],
                     p_list: Sequence[float], L: float = 1.0) -> List[ComplexityCase]:
    cases = []
    for h, eps, s, p in itertools.product(h_list, eps_list, s_list, p_list):
        n = int(round(L / h))
        if n < 4 or abs(n * h - L) > 1e-9 * L:
            raise ConfigError(f"h={h} does not divide L={L}")
        cases.append(ComplexityCase(p=float(p), eps=float(eps), s=float(s), n=n))
    return cases


def complexity_study(h_list, eps_list, s_list, p_list, L: float = 1.0, tau: float = TAU,
                     max_iter: int = 1000, workers: int = 1) -> List[ComplexityTrace]:
    """One trace per combination, in itertools.product order; workers > 1 uses a thread pool."""
    cases = cases_from_lists(h_list, eps_list, s_list, p_list, L)
    logger.info("complexity study: %d combinations on %d worker(s)", len(cases), workers)
    if workers == 1:
        return [run_case(c, L, tau, max_iter) for c in cases]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: run_case(c, L, tau, max_iter), cases))


def write_traces(out_dir, traces: Sequence[ComplexityTrace]):
    os.makedirs(out_dir, exist_ok=True)
    for trace in traces:
        path = os.path.join(out_dir, f"trace_{trace.case.label}.csv")
        with open(path, "w", encoding="utf-8", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(("k", "gamma"))
            for k, gamma in enumerate(trace.gammas):
                w.writerow((k, repr(gamma)))
    path = os.path.join(out_dir, "summary.csv")
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for trace in traces:
            c = trace.case
            w.writerow((f"{c.p:g}", f"{c.eps:g}", f"{c.s:g}", c.n, trace.iterations, int(trace.reached)))
    logger.info("wrote %d traces and %s", len(traces), path)
