"""
Preconditioned steepest descent (PSD) for the convex problems in problems.py.

One iteration:
    r = f - N_h[u]              (negative gradient)
    L_h d = r                   (FFT preconditioner solve)
    q(alpha) = <N_h[u + alpha d] - f, d> = 0   (exact line search)
    u <- u + alpha d

q is strictly increasing (strict convexity of the energy along the line) and
q(0) = -||d||_L^2 < 0. For even integer p it is a polynomial of degree p - 1
whose coefficients are assembled once per line search; any other p falls back
to evaluating q directly inside the same safeguarded root finder.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from numpy.polynomial import polynomial as P

from . import grid as fd
from . import spectral
from .errors import InvalidE0, InvalidParameter, MaxIterExceeded, NoBracket, NotDescent
from .problems import ConvergenceConstants, convergence_constants

logger = logging.getLogger(__name__)

MAX_BRACKET = 2.0 ** 60


@dataclass(frozen=True)
class PsdConfig:
    tol_rel: float = 1e-9
    tol_abs: float = 1e-14
    max_iter: int = 200
    ls_tol: float = 1e-12
    ls_max_iter: int = 100
    # raise MaxIterExceeded instead of returning an unconverged report
    strict: bool = False
    report_constants: bool = False
    c9: Optional[float] = None

    def __post_init__(self):
        for name in ("tol_rel", "tol_abs", "ls_tol"):
            value = getattr(self, name)
            if not (value > 0):
                raise InvalidParameter(f"{name} must be > 0, got {value}")
        for name in ("max_iter", "ls_max_iter"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise InvalidParameter(f"{name} must be a positive integer, got {value}")


@dataclass
class PsdReport:
    iterations: int = 0
    converged: bool = False
    residual_history: List[float] = field(default_factory=list)
    alpha_history: List[float] = field(default_factory=list)
    energy_history: List[float] = field(default_factory=list)
    constants: Optional[ConvergenceConstants] = None

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1] if self.residual_history else math.nan

    def energy_gap_bound(self, k: int, e_ref: float) -> float:
        """C7^k (E[u^0] - e_ref); needs report_constants."""
        if self.constants is None:
            raise ValueError("report has no convergence constants (set PsdConfig.report_constants)")
        return self.constants.c7 ** k * (self.energy_history[0] - e_ref)


def is_even_integer(p) -> bool:
    return float(p).is_integer() and int(p) % 2 == 0


def search_direction(u, prob, ws, r=None):
    """d solving L_h d = r with r the residual at u (computed unless given)."""
    if r is None:
        r = prob.residual(u, ws)
    return prob.precondition(r, ws)


# -------------------------
# Line search
# -------------------------
def directional_derivative(u, d, alpha, prob, ws) -> float:
    """q(alpha) = <N_h[u + alpha d] - f, d>_2 by direct evaluation."""
    return float(-fd.ip_cell(prob.residual(u + alpha * d, ws), d, prob.grid))


def line_search_polynomial(u, d, prob, ws) -> np.ndarray:
    """
    Ascending coefficients of q for even integer p.

    At every vertex, with A = |grad u|^2, B = grad u . grad d, C = |grad d|^2,
    the p-Laplacian contributes (A + 2 B a + C a^2)^((p-2)/2) (B + C a).
    """
    if not is_even_integer(prob.p):
        raise ValueError(f"polynomial line search needs an even integer p, got {prob.p}")
    grid = prob.grid
    gu = fd.grad_v(u, grid)
    gd = fd.grad_v(d, grid)
    A = gu.x_comp ** 2 + gu.y_comp ** 2
    B = gu.x_comp * gd.x_comp + gu.y_comp * gd.y_comp
    C = gd.x_comp ** 2 + gd.y_comp ** 2

    # per-vertex polynomial, coefficient arrays stacked on axis 0
    poly = np.stack([B, C])
    base = np.stack([A, 2.0 * B, C])
    for _ in range((int(prob.p) - 2) // 2):
        out = np.zeros((poly.shape[0] + 2,) + poly.shape[1:])
        for i in range(poly.shape[0]):
            for j in range(3):
                out[i + j] += poly[i] * base[j]
        poly = out
    coeffs = prob.s * grid.h ** 2 * poly.sum(axis=(-2, -1))

    lap_u = fd.laplacian(u, grid)
    lap_d = fd.laplacian(d, grid)
    bend = prob.s * prob.eps ** 2
    a0 = bend * fd.ip_cell(lap_u, lap_d, grid)
    a1 = bend * fd.ip_cell(lap_d, lap_d, grid)
    if prob.kind == "4th":
        a0 += fd.ip_cell(u - prob.f, d, grid)
        a1 += fd.ip_cell(d, d, grid)
    else:
        # one T_h solve per line search
        t_d = spectral.solve_T(d, ws)
        a0 += prob.s * prob.lam * fd.ip_cell(u, d, grid) - fd.ip_cell(prob.f, d, grid)
        a0 += fd.ip_cell(u - prob.g, t_d, grid)
        a1 += prob.s * prob.lam * fd.ip_cell(d, d, grid) + fd.ip_cell(d, t_d, grid)
    coeffs[0] += a0
    coeffs[1] += a1
    return coeffs


def _safeguarded_root(q, dq, a, b, qa, qb, tol_q, tol_x, max_iter):
    """Root of an increasing q on [a, b] with q(a) < 0 < q(b): Newton (or false position) with bisection fallback."""
    x = a - qa * (b - a) / (qb - qa)
    width = b - a
    for _ in range(max_iter):
        qx = q(x)
        if abs(qx) <= tol_q:
            return x
        if qx < 0:
            a, qa = x, qx
        else:
            b, qb = x, qx
        if b - a <= tol_x * (1.0 + abs(x)):
            return x
        if dq is not None:
            slope = dq(x)
            cand = x - qx / slope if slope > 0 else math.nan
        else:
            cand = a - qa * (b - a) / (qb - qa)
        if not (a < cand < b) or (b - a) > 0.5 * width:
            cand = 0.5 * (a + b)
        elif dq is not None and abs(cand - x) <= 0.5 * tol_x * (1.0 + abs(x)):
            return cand
        width = b - a
        x = cand
    logger.warning("line search hit ls_max_iter; returning alpha=%.6e with bracket width %.2e", x, b - a)
    return x


def line_search(u, d, prob, cfg: PsdConfig, ws, d_norm_sq=None) -> float:
    """Step alpha* > 0 with q(alpha*) ~ 0."""
    if d_norm_sq is None:
        d_norm_sq = prob.precond_norm_sq(d, ws)
    if is_even_integer(prob.p):
        coeffs = line_search_polynomial(u, d, prob, ws)
        dcoeffs = P.polyder(coeffs)

        def q(alpha):
            return float(P.polyval(alpha, coeffs))

        def dq(alpha):
            return float(P.polyval(alpha, dcoeffs))
    else:
        def q(alpha):
            return directional_derivative(u, d, alpha, prob, ws)

        dq = None

    tol_q = cfg.ls_tol * d_norm_sq
    q0 = q(0.0)
    if q0 >= 0:
        if q0 > tol_q:
            raise NotDescent(f"q(0) = {q0:.3e} >= 0: search direction is not a descent direction")
        return 0.0

    a, qa, b = 0.0, q0, 1.0
    qb = q(b)
    while not qb > 0:
        if not math.isfinite(qb):
            raise NoBracket(f"q({b:g}) is not finite")
        a, qa = b, qb
        b *= 2.0
        if b > MAX_BRACKET:
            raise NoBracket("line search bracket exceeded 2^60")
        qb = q(b)
    return _safeguarded_root(q, dq, a, b, qa, qb, tol_q, cfg.ls_tol, cfg.ls_max_iter)


# -------------------------
# Driver
# -------------------------
def psd_solve(u0, prob, ws, cfg: Optional[PsdConfig] = None,
              stop_when: Optional[Callable[[int, np.ndarray], bool]] = None):
    """
    Run PSD from u0. Returns (u, PsdReport).

    The default stop is ||r^k||_2 <= tol_abs + tol_rel ||f||_2; stop_when(k, u),
    when given, replaces it (used by the complexity study, which measures the
    error to a known solution).
    """
    cfg = cfg or PsdConfig()
    grid = prob.grid
    u = np.array(u0, dtype=float, copy=True)
    threshold = cfg.tol_abs + cfg.tol_rel * prob.rhs_norm()
    report = PsdReport()
    energy = prob.energy(u, ws)
    report.energy_history.append(energy)
    if cfg.report_constants:
        try:
            report.constants = convergence_constants(prob, energy, cfg.c9)
        except InvalidE0 as exc:
            logger.info("no convergence constants for this solve: %s", exc)

    for k in range(cfg.max_iter + 1):
        r = prob.residual(u, ws)
        r_norm = float(fd.norm2(r, grid))
        report.residual_history.append(r_norm)
        done = stop_when(k, u) if stop_when is not None else r_norm <= threshold
        if done:
            report.converged = True
            break
        if k == cfg.max_iter:
            break
        d = search_direction(u, prob, ws, r=r)
        d_norm_sq = float(fd.ip_cell(d, r, grid))
        if not d_norm_sq > 0:
            logger.warning("search direction vanished at k=%d with ||r||=%.3e", k, r_norm)
            break
        alpha = line_search(u, d, prob, cfg, ws, d_norm_sq)
        if alpha == 0.0:
            logger.warning("psd stagnated at k=%d: line search returned alpha=0 with ||r||=%.3e", k, r_norm)
            break
        u = u + alpha * d
        energy = prob.energy(u, ws)
        report.alpha_history.append(alpha)
        report.energy_history.append(energy)
        report.iterations = k + 1
        logger.debug("psd k=%d |r|=%.6e alpha=%.6e E=%.12e", k, r_norm, alpha, energy)

    if report.converged:
        logger.debug("psd converged in %d iterations, |r|=%.3e", report.iterations, report.final_residual)
    else:
        msg = f"psd stopped after {report.iterations} iterations with |r|={report.final_residual:.3e} (target {threshold:.3e})"
        if cfg.strict:
            raise MaxIterExceeded(msg, report)
        logger.warning(msg)
    return fd.CellField(u), report
