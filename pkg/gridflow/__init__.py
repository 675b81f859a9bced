"""
gridflow: preconditioned steepest descent for regularized p-Laplacian problems
on periodic staggered grids, with the thin-film and SPFC gradient flows built
on it.
"""
from .errors import GridflowError
from .grid import GridSpec
from .problems import FourthOrderProblem, SixthOrderProblem
from .psd import PsdConfig, PsdReport, psd_solve
from .spectral import SpectralWorkspace

__version__ = "0.1.0"

__all__ = [
    "GridflowError",
    "GridSpec",
    "FourthOrderProblem",
    "SixthOrderProblem",
    "PsdConfig",
    "PsdReport",
    "psd_solve",
    "SpectralWorkspace",
    "__version__",
]
