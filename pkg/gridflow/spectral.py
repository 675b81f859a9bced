"""
Fourier diagonalization of the constant-coefficient periodic operators.

Every linear operator built from the 5-point Laplacian is diagonal in the
discrete Fourier basis: mode (k, l) of -Delta_h has eigenvalue

    lam[k, l] = (4 / h^2) (sin^2(pi k / n) + sin^2(pi l / n)).

SpectralWorkspace caches lam (on the real-to-complex half spectrum) and the
per-parameter preconditioner symbols; the solves below are then one forward
transform, one division and one inverse transform.
"""
import logging
import threading

import numpy as np
import scipy.fft

from . import grid as fd
from .errors import NonZeroMean

logger = logging.getLogger(__name__)

MEAN_RTOL = 1e-12


class SpectralWorkspace:
    """Per-grid cache of Fourier symbols. Rebuild it when the grid changes."""

    def __init__(self, grid: fd.GridSpec, mean_rtol: float = MEAN_RTOL):
        self.grid = grid
        self.mean_rtol = mean_rtol
        n = grid.n
        sx = np.sin(np.pi * np.arange(n) / n) ** 2
        sy = np.sin(np.pi * np.arange(n // 2 + 1) / n) ** 2
        self.lam = (4.0 / grid.h ** 2) * (sx[:, None] + sy[None, :])
        self._inv_lam = np.zeros_like(self.lam)
        self._inv_lam[self.lam > 0] = 1.0 / self.lam[self.lam > 0]
        self._symbols = {}
        self._lock = threading.Lock()

    def full_lam(self) -> np.ndarray:
        """lam on the full n x n index set (k, l)."""
        n = self.grid.n
        sx = np.sin(np.pi * np.arange(n) / n) ** 2
        return (4.0 / self.grid.h ** 2) * (sx[:, None] + sx[None, :])

    # -------------------------
    # Transforms
    # -------------------------
    def forward(self, nu):
        return scipy.fft.rfft2(nu, axes=(-2, -1))

    def inverse(self, nu_hat):
        return scipy.fft.irfft2(nu_hat, s=self.grid.shape, axes=(-2, -1))

    def apply_symbol(self, nu, symbol):
        """Multiply every Fourier mode of nu by symbol (half-spectrum layout)."""
        return self.inverse(self.forward(nu) * symbol)

    # -------------------------
    # Cached inverse symbols
    # -------------------------
    def _cached(self, key, build):
        with self._lock:
            sym = self._symbols.get(key)
            if sym is None:
                sym = build()
                self._symbols[key] = sym
            return sym

    def inverse_symbol_4th(self, s, eps):
        lam = self.lam
        return self._cached(("4th", s, eps), lambda: 1.0 / (1.0 + s * lam + s * eps ** 2 * lam ** 2))

    def inverse_symbol_6th(self, s, eps, lam_coef):
        def build():
            lam = self.lam
            sym = np.zeros_like(lam)
            nz = lam > 0
            sym[nz] = 1.0 / (s * lam_coef + s * lam[nz] + s * eps ** 2 * lam[nz] ** 2 + 1.0 / lam[nz])
            return sym

        return self._cached(("6th", s, eps, lam_coef), build)

    # -------------------------
    # Mean-zero guard
    # -------------------------
    def check_mean_zero(self, zeta, scale=None, what="field"):
        m = fd.mean(zeta, self.grid)
        if scale is None:
            scale = fd.norm_inf(zeta)
        tol = self.mean_rtol * np.maximum(scale, np.finfo(float).tiny)
        if np.any(np.abs(m) > tol):
            worst = np.max(np.abs(m))
            raise NonZeroMean(worst, np.min(tol), what)


def solve_T(zeta, ws: SpectralWorkspace, scale=None):
    """Mean-zero solution of -Delta_h x = zeta for mean-zero zeta."""
    ws.check_mean_zero(zeta, scale, "T_h argument")
    return fd.CellField(ws.apply_symbol(zeta, ws._inv_lam))


def solve_precond_4th(r, s, eps, ws: SpectralWorkspace):
    """d with d - s Delta_h d + s eps^2 Delta_h^2 d = r."""
    return fd.CellField(ws.apply_symbol(r, ws.inverse_symbol_4th(s, eps)))


def solve_precond_6th(r, s, eps, lam_coef, ws: SpectralWorkspace, scale=None):
    """Mean-zero d with s lam d - s Delta_h d + s eps^2 Delta_h^2 d + T_h[d] = r."""
    ws.check_mean_zero(r, scale, "sixth-order preconditioner right-hand side")
    return fd.CellField(ws.apply_symbol(r, ws.inverse_symbol_6th(s, eps, lam_coef)))


def norm_minus1_sq(zeta, ws: SpectralWorkspace, scale=None):
    """||zeta||_{-1}^2 = <zeta, T_h zeta>_2 for mean-zero zeta."""
    return fd.ip_cell(zeta, solve_T(zeta, ws, scale), ws.grid)


def sobolev_ratio(xi, ws: SpectralWorkspace, p=4.0, variant="l2"):
    """
    Ratio of ||grad_v xi||_p to the right-hand side of the discrete
    Gagliardo-Nirenberg bounds:

    - "l2":  ||xi||_2^(1/p) ||Delta_h xi||_2^((p-1)/p)
    - "h-1": ||xi||_{-1}^(2/(3p)) ||Delta_h xi||_2^(1-2/(3p)), xi mean-zero
    """
    grid = ws.grid
    lap = fd.norm2(fd.laplacian(xi, grid), grid)
    if variant == "l2":
        rhs = fd.norm2(xi, grid) ** (1.0 / p) * lap ** ((p - 1.0) / p)
    elif variant == "h-1":
        m1 = np.sqrt(norm_minus1_sq(xi, ws))
        rhs = m1 ** (2.0 / (3.0 * p)) * lap ** (1.0 - 2.0 / (3.0 * p))
    else:
        raise ValueError(f"unknown Sobolev variant {variant!r}")
    return fd.grad_norm_p(xi, grid, p) / rhs
