import numpy as np
import pytest

from gridflow import grid as fd
from gridflow.grid import GridSpec
from gridflow.spectral import SpectralWorkspace


class Rng:
    """numpy Generator pulled out into a fixture with a repr so the seed is
    displayed on failing tests"""

    def __init__(self, seed=20240917):
        self.seed = seed
        self.gen = np.random.default_rng(seed)

    def __repr__(self):
        return f"Rng({self.seed})"

    def field(self, grid, scale=1.0):
        return scale * self.gen.standard_normal(grid.shape)

    def mean_zero(self, grid, scale=1.0):
        return fd.project_mean_zero(self.field(grid, scale), grid)

    def smooth(self, grid, modes=3, scale=0.1):
        """Random trigonometric field with a few low modes."""
        X, Y = grid.mesh()
        k = 2 * np.pi / grid.L
        u = np.zeros(grid.shape)
        for a in range(1, modes + 1):
            for b in range(0, modes + 1):
                c, d = scale * self.gen.standard_normal(2) / (a + b)
                u += c * np.sin(k * (a * X + b * Y)) + d * np.cos(k * (b * X - a * Y))
        return u


@pytest.fixture
def rng():
    yield Rng()


@pytest.fixture
def grid16():
    return GridSpec(16, 16.0)


@pytest.fixture
def grid8():
    return GridSpec(8, 8.0)


@pytest.fixture
def ws16(grid16):
    return SpectralWorkspace(grid16)


# -------------------------
# Dense oracles
# -------------------------
def dense_matrix(op, grid):
    """Matrix of a linear cell-to-cell operator, built by applying it to the whole identity at once."""
    N = grid.n * grid.n
    basis = np.eye(N).reshape(N, grid.n, grid.n)
    return op(basis).reshape(N, N).T


def dense_laplacian(grid):
    return dense_matrix(lambda v: fd.laplacian(v, grid), grid)


def dense_T(grid):
    """Pseudo-inverse of -Delta_h: the mean-zero inverse on mean-zero fields."""
    return np.linalg.pinv(-dense_laplacian(grid))


def p_laplacian_jacobian_apply(u, v, grid, p):
    """Derivative of p_laplacian at u in direction v (v may be a batch)."""
    gu = fd.grad_v(u, grid)
    gv = fd.grad_v(v, grid)
    q = gu.x_comp ** 2 + gu.y_comp ** 2
    r = q ** ((p - 2) / 2.0)
    r1 = (p - 2) * q ** ((p - 4) / 2.0) if p != 2 else np.zeros_like(q)
    dot = gu.x_comp * gv.x_comp + gu.y_comp * gv.y_comp
    vx = r * gv.x_comp + r1 * dot * gu.x_comp
    vy = r * gv.y_comp + r1 * dot * gu.y_comp
    return fd.div_v(fd.VertexVectorField(vx, vy), grid)


def newton_oracle_4th(prob, u0, tol=1e-13, max_iter=50):
    """Damped Newton on N_h[u] = f with dense linear algebra."""
    grid = prob.grid
    n = grid.n
    eye = np.eye(n * n)
    bih = dense_matrix(lambda v: fd.biharmonic(v, grid), grid)
    u = np.array(u0, dtype=float)

    def F(w):
        return prob.operator(w) - prob.f

    for _ in range(max_iter):
        res = F(u)
        if np.max(np.abs(res)) <= tol:
            break
        jp = dense_matrix(lambda v: p_laplacian_jacobian_apply(u, v, grid, prob.p), grid)
        J = eye + prob.s * prob.eps ** 2 * bih - prob.s * jp
        step = np.linalg.solve(J, res.ravel()).reshape(grid.shape)
        t = 1.0
        while t > 1e-4 and np.max(np.abs(F(u - t * step))) > np.max(np.abs(res)):
            t *= 0.5
        u = u - t * step
    return u


def newton_oracle_6th(prob, u0, tol=1e-13, max_iter=50):
    """Damped Newton for the mass-conserving problem, solved on u - mean(g)."""
    grid = prob.grid
    N = grid.n * grid.n
    bih = dense_matrix(lambda v: fd.biharmonic(v, grid), grid)
    T = dense_T(grid)
    ones = np.full((N, N), 1.0 / N)
    P = np.eye(N) - ones
    u = np.array(u0, dtype=float)

    def F(w):
        lin = prob.s * prob.lam * w + prob.s * prob.eps ** 2 * fd.biharmonic(w, grid) \
            - prob.s * fd.p_laplacian(w, grid, prob.p)
        res = lin + (T @ (w - prob.g).ravel()).reshape(grid.shape) - prob.f
        return fd.project_mean_zero(res, grid)

    for _ in range(max_iter):
        res = F(u)
        if np.max(np.abs(res)) <= tol:
            break
        jp = dense_matrix(lambda v: p_laplacian_jacobian_apply(u, v, grid, prob.p), grid)
        J = prob.s * prob.lam * np.eye(N) + prob.s * prob.eps ** 2 * bih - prob.s * jp + T
        step = np.linalg.solve(P @ J @ P + ones, res.ravel()).reshape(grid.shape)
        t = 1.0
        while t > 1e-4 and np.max(np.abs(F(u - t * step))) > np.max(np.abs(res)):
            t *= 0.5
        u = u - t * step
    return u
