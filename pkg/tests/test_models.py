import numpy as np
import pytest

from conftest import newton_oracle_4th, newton_oracle_6th
from gridflow import grid as fd
from gridflow import models
from gridflow.errors import InvalidParameter
from gridflow.grid import GridSpec
from gridflow.models import EvolutionRecord, SpfcParams, ThinFilmParams
from gridflow.problems import FourthOrderProblem, SixthOrderProblem
from gridflow.psd import PsdConfig, PsdReport
from gridflow.spectral import SpectralWorkspace

TIGHT = PsdConfig(tol_rel=1e-12, max_iter=1000)


def vertex_grads(u, h):
    """Per-vertex gradients by explicit loops."""
    n = u.shape[0]
    gx = np.empty_like(u)
    gy = np.empty_like(u)
    for i in range(n):
        for j in range(n):
            ip, jp = (i + 1) % n, (j + 1) % n
            gx[i, j] = 0.5 * ((u[ip, j] - u[i, j]) + (u[ip, jp] - u[i, jp])) / h
            gy[i, j] = 0.5 * ((u[i, jp] - u[i, j]) + (u[ip, jp] - u[ip, j])) / h
    return gx, gy


def brute_laplacian(u, h):
    n = u.shape[0]
    out = np.empty_like(u)
    for i in range(n):
        for j in range(n):
            out[i, j] = (u[(i + 1) % n, j] + u[i - 1, j] + u[i, (j + 1) % n] + u[i, j - 1] - 4 * u[i, j]) / h ** 2
    return out


# -------------------------
# Parameters
# -------------------------
@pytest.mark.parametrize("kw", [{"p": 2.0}, {"p": 5.0}, {"eps": 0.0}, {"eps": 1.2}, {"s": -1.0}])
def test_thin_film_params_validation(grid16, kw):
    base = {"p": 4.0, "eps": 0.1, "s": 0.01, "grid": grid16}
    base.update(kw)
    with pytest.raises(InvalidParameter):
        ThinFilmParams(**base)


def test_spfc_params_validation(grid16):
    with pytest.raises(InvalidParameter):
        SpfcParams(eps=1.0, gamma0=-0.1, gamma1=2.0, s=0.1, grid=grid16)
    with pytest.raises(InvalidParameter):
        SpfcParams(eps=0.0, gamma0=0.1, gamma1=2.0, s=0.1, grid=grid16)
    assert SpfcParams(eps=1.0, gamma0=0.1, gamma1=2.0, s=0.1, grid=grid16).p == 4.0


# -------------------------
# Thin film step
# -------------------------
def test_thin_film_constant_is_fixed_point(grid16, ws16):
    params = ThinFilmParams(p=4.0, eps=0.1, s=0.01, grid=grid16)
    u, report = models.thin_film_step(np.full(grid16.shape, 0.3), params, ws16)
    np.testing.assert_allclose(u, 0.3, atol=1e-15)
    assert report.iterations == 0


def test_thin_film_step_matches_newton():
    grid = GridSpec(32, 3.2)
    ws = SpectralWorkspace(grid)
    params = ThinFilmParams(p=4.0, eps=0.1, s=0.1 * grid.h ** 2, grid=grid)
    u_n = models.initial_sinusoidal(grid)
    u, report = models.thin_film_step(u_n, params, ws, TIGHT)
    assert report.converged
    f = u_n - params.s * fd.skew_laplacian(u_n, grid)
    prob = FourthOrderProblem(s=params.s, eps=params.eps, p=params.p, f=f, grid=grid)
    expected = newton_oracle_4th(prob, u_n)
    assert fd.norm_inf(u - expected) <= 1e-9


def test_thin_film_conserves_mass(grid16, ws16):
    params = ThinFilmParams(p=4.0, eps=0.2, s=0.05, grid=grid16)
    u = models.initial_random(grid16, seed=7, amplitude=0.5)
    m0 = fd.mean(u, grid16)
    for _ in range(100):
        u, _ = models.thin_film_step(u, params, ws16, TIGHT)
        assert abs(fd.mean(u, grid16) - m0) <= 1e-13


# -------------------------
# SPFC step
# -------------------------
def test_spfc_constant_is_fixed_point(grid16, ws16):
    params = SpfcParams(eps=0.5, gamma0=0.4, gamma1=2.0, s=0.1, grid=grid16)
    c = 0.2
    u, w, report = models.spfc_step(np.full(grid16.shape, c), params, ws16)
    np.testing.assert_allclose(u, c, atol=1e-15)
    np.testing.assert_allclose(w, params.s * params.gamma0 * c, atol=1e-14)
    assert report.iterations == 0


def test_spfc_step_matches_newton(grid16, ws16):
    params = SpfcParams(eps=0.5, gamma0=0.4, gamma1=2.0, s=0.1, grid=grid16)
    u_n = models.initial_random(grid16, seed=3, amplitude=0.5) + 0.1
    u, w, report = models.spfc_step(u_n, params, ws16, TIGHT)
    assert report.converged
    assert abs(fd.mean(u, grid16) - fd.mean(u_n, grid16)) <= 1e-13
    prob = SixthOrderProblem(
        s=params.s, eps=params.eps, p=4.0, lam=params.gamma0,
        f=-params.s * params.gamma1 * fd.laplacian(u_n, grid16), g=u_n, grid=grid16,
    )
    expected = newton_oracle_6th(prob, u_n)
    assert fd.norm_inf(u - expected) <= 1e-8


def test_spfc_chemical_potential_closes_both_equations(grid16, ws16):
    params = SpfcParams(eps=0.5, gamma0=0.4, gamma1=2.0, s=0.1, grid=grid16)
    u_n = models.initial_random(grid16, seed=11, amplitude=0.5)
    u, w, _ = models.spfc_step(u_n, params, ws16, TIGHT)
    np.testing.assert_allclose(u - fd.laplacian(w, grid16), u_n, atol=1e-9)
    s = params.s
    lhs = s * params.gamma0 * u - s * fd.p_laplacian(u, grid16, 4.0) \
        + s * params.eps ** 2 * fd.biharmonic(u, grid16) - w
    np.testing.assert_allclose(lhs, -s * params.gamma1 * fd.laplacian(u_n, grid16), atol=1e-9)


def test_spfc_rejects_eps_above_one(grid16, ws16):
    params = SpfcParams(eps=1.5, gamma0=0.4, gamma1=2.0, s=0.1, grid=grid16)
    with pytest.raises(InvalidParameter):
        models.spfc_step(grid16.zeros(), params, ws16)


# -------------------------
# Initial data
# -------------------------
def test_initial_sinusoidal():
    grid = GridSpec(32, 3.2)
    u = models.initial_sinusoidal(grid)
    X, Y = grid.mesh()
    L = grid.L

    def profile(x, y):
        return (0.1 * np.sin(2 * np.pi * x / L) ** 2 * np.sin(4 * np.pi * (y - 1.4) / L)
                - 0.1 * np.cos(2 * np.pi * (x - 2.0) / L) * np.sin(2 * np.pi * y / L))

    np.testing.assert_allclose(u, profile(X, Y), atol=1e-15)
    np.testing.assert_allclose(profile(X + L, Y + L), u, atol=1e-14)
    assert np.all(np.abs(u) <= 0.2)


def test_initial_random_is_seeded(grid16):
    a = models.initial_random(grid16, seed=1, amplitude=0.05)
    b = models.initial_random(grid16, seed=1, amplitude=0.05)
    c = models.initial_random(grid16, seed=2, amplitude=0.05)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.all(np.abs(a) <= 0.05)


def test_initial_random_mean_shrinks():
    grid = GridSpec(256, 25.6)
    amplitude = 0.05
    bound = 3 * amplitude / (np.sqrt(3) * grid.n)
    for seed in range(20):
        assert abs(fd.mean(models.initial_random(grid, seed, amplitude), grid)) <= bound


def test_initial_nucleated_wraps_bumps():
    grid = GridSpec(64, 64.0)
    plain = models.initial_random(grid, seed=5)
    u = models.initial_nucleated(grid, seed=5, centers=[(0.0, 0.0)])
    bump = u - plain
    # cells at (0.5, 0.5) and (63.5, 63.5) are the same distance from the corner
    assert bump[0, 0] == pytest.approx(bump[-1, -1], rel=1e-12)
    assert bump[0, 0] == pytest.approx(models.NUCLEATION_AMPLITUDE * np.exp(-0.5 / (2 * models.NUCLEATION_SIGMA ** 2)))
    assert bump[32, 32] < 1e-20
    with pytest.raises(InvalidParameter):
        models.initial_nucleated(grid, seed=5, centers=[], sigma=0.0)


# -------------------------
# Diagnostics
# -------------------------
def test_roughness(rng, grid16):
    assert models.roughness(np.full(grid16.shape, 3.0)) == pytest.approx(0.0, abs=1e-15)
    u = rng.mean_zero(grid16)
    assert models.roughness(-2.5 * u) == pytest.approx(2.5 * models.roughness(u), rel=1e-13)


def test_roughness_of_sine():
    grid = GridSpec(64, 6.4)
    a = -0.3
    u = grid.sample(lambda x, y: a * np.sin(2 * np.pi * x / grid.L))
    assert models.roughness(u) == pytest.approx(abs(a) / np.sqrt(2), abs=1e-12)


def test_thin_film_energy(rng, grid8):
    params = ThinFilmParams(p=6.0, eps=0.3, s=0.1, grid=grid8)
    assert models.physical_energy_thin_film(np.full(grid8.shape, 1.5), params) == pytest.approx(0.0, abs=1e-15)
    u = rng.field(grid8)
    h = grid8.h
    gx, gy = vertex_grads(u, h)
    q = gx ** 2 + gy ** 2
    lap = brute_laplacian(u, h)
    expected = h ** 2 * np.sum(q ** 3 / 6 - q / 2 + 0.5 * params.eps ** 2 * lap ** 2)
    assert models.physical_energy_thin_film(u, params) == pytest.approx(expected, rel=1e-12)


def test_thin_film_energy_can_be_negative():
    grid = GridSpec(32, 3.2)
    params = ThinFilmParams(p=4.0, eps=1e-6, s=0.1, grid=grid)
    u = grid.sample(lambda x, y: 0.01 * np.sin(2 * np.pi * x / grid.L))
    assert models.physical_energy_thin_film(u, params) < 0


def test_spfc_energy(rng, grid8):
    params = SpfcParams(eps=0.5, gamma0=0.4, gamma1=2.0, s=0.1, grid=grid8)
    c = 0.7
    assert models.physical_energy_spfc(np.full(grid8.shape, c), params) == \
        pytest.approx(0.5 * params.gamma0 * c ** 2 * grid8.L ** 2, rel=1e-14)
    assert models.physical_energy_spfc(grid8.zeros(), params) == 0.0
    u = rng.field(grid8)
    h = grid8.h
    gx, gy = vertex_grads(u, h)
    ex = (np.roll(u, -1, axis=0) - u) / h
    ey = (np.roll(u, -1, axis=1) - u) / h
    lap = brute_laplacian(u, h)
    expected = h ** 2 * np.sum(
        0.5 * params.gamma0 * u ** 2
        - 0.5 * params.gamma1 * (ex ** 2 + ey ** 2)
        + 0.5 * params.eps ** 2 * lap ** 2
        + 0.25 * (gx ** 2 + gy ** 2) ** 2
    )
    assert models.physical_energy_spfc(u, params) == pytest.approx(expected, rel=1e-12)
    assert models.physical_energy(u, params) == models.physical_energy_spfc(u, params)


def test_record_fields(rng, grid16):
    params = ThinFilmParams(p=4.0, eps=0.1, s=0.01, grid=grid16)
    u = rng.field(grid16)
    report = PsdReport(iterations=4)
    rec = models.record(3, 0.03, u, params, report, started=0.0)
    assert isinstance(rec, EvolutionRecord)
    assert (rec.step, rec.time, rec.solver_iters) == (3, 0.03, 4)
    assert rec.energy == models.physical_energy_thin_film(u, params)
    assert rec.roughness == models.roughness(u)
    assert rec.wall_ms > 0


# -------------------------
# Long runs
# -------------------------
# long runs on 128^2 grids can stall at roundoff above 1e-12 relative; stop at an absolute floor
LONG_RUN = PsdConfig(tol_rel=1e-12, tol_abs=1e-10, max_iter=1000)


@pytest.mark.slow
@pytest.mark.parametrize("s", [0.01, 0.1, 1.0])
def test_thin_film_energy_stable(s):
    grid = GridSpec(128, 25.6)
    ws = SpectralWorkspace(grid)
    params = ThinFilmParams(p=4.0, eps=0.1, s=s, grid=grid)
    u = models.initial_random(grid, seed=0)
    m0 = fd.mean(u, grid)
    energy = models.physical_energy(u, params)
    for _ in range(500):
        u, _ = models.thin_film_step(u, params, ws, LONG_RUN)
        nxt = models.physical_energy(u, params)
        assert nxt <= energy + 1e-10 * (1 + abs(energy))
        energy = nxt
    assert abs(fd.mean(u, grid) - m0) <= 1e-11


@pytest.mark.slow
@pytest.mark.parametrize("s", [0.01, 0.1, 1.0])
def test_spfc_energy_stable(s):
    grid = GridSpec(128, 64.0)
    ws = SpectralWorkspace(grid)
    params = SpfcParams(eps=1.0, gamma0=0.5, gamma1=2.0, s=s, grid=grid)
    u = models.initial_random(grid, seed=0, amplitude=0.3)
    m0 = fd.mean(u, grid)
    energy = models.physical_energy(u, params)
    for _ in range(500):
        u, _, _ = models.spfc_step(u, params, ws, LONG_RUN)
        nxt = models.physical_energy(u, params)
        assert nxt <= energy + 1e-10 * (1 + abs(energy))
        energy = nxt
    assert abs(fd.mean(u, grid) - m0) <= 1e-11


@pytest.mark.slow
def test_thin_film_mass_over_long_run():
    grid = GridSpec(128, 25.6)
    ws = SpectralWorkspace(grid)
    params = ThinFilmParams(p=4.0, eps=0.1, s=0.1, grid=grid)
    u = models.initial_random(grid, seed=4) + 0.05
    m0 = fd.mean(u, grid)
    for _ in range(1000):
        u, _ = models.thin_film_step(u, params, ws, LONG_RUN)
    assert abs(fd.mean(u, grid) - m0) <= 1e-11


@pytest.mark.slow
def test_spfc_mass_over_long_run():
    grid = GridSpec(128, 64.0)
    ws = SpectralWorkspace(grid)
    params = SpfcParams(eps=1.0, gamma0=0.5, gamma1=2.0, s=0.1, grid=grid)
    u = models.initial_random(grid, seed=4, amplitude=0.3) + 0.05
    m0 = fd.mean(u, grid)
    for _ in range(1000):
        u, _, _ = models.spfc_step(u, params, ws, LONG_RUN)
    assert abs(fd.mean(u, grid) - m0) <= 1e-11
