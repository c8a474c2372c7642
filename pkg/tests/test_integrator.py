import numpy as np
import pytest
import scipy.sparse as sp

from kirchplate.integrator import (IntegrationError, IntegratorConfig, LinearSystem, TimeGrid,
                                   initial_state, integrate, step_implicit, step_rk4)
from kirchplate.mesh import GridSpec, flatten
from kirchplate.operators import PlateParams, assemble


def test_scalar_trapezoid_step():
    system = LinearSystem(sp.csr_matrix([[-1.0]]))
    y1 = step_implicit(system, np.array([1.0]), 0.0, 0.1)
    assert y1[0] == pytest.approx((1 - 0.05) / (1 + 0.05), rel=1e-14)


def test_trapezoid_with_source():
    # y' = b constant: the rule is exact
    system = LinearSystem(sp.csr_matrix((1, 1)), lambda t: np.array([2.0]))
    assert step_implicit(system, np.array([1.0]), 0.0, 0.25)[0] == pytest.approx(1.5)


def test_rk4_step_matches_taylor():
    system = LinearSystem(sp.csr_matrix([[-1.0]]))
    h = 0.1
    expect = 1 - h + h**2 / 2 - h**3 / 6 + h**4 / 24
    assert step_rk4(system, np.array([1.0]), 0.0, h)[0] == pytest.approx(expect, rel=1e-14)


def test_time_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(1.0, 1.0, 5)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, 1)
    np.testing.assert_allclose(TimeGrid(0, 1, 5).times(), [0, 0.25, 0.5, 0.75, 1])


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=0)


@pytest.mark.parametrize("method", ["trapezoidal", "rk4"])
def test_exponential_decay(method):
    system = LinearSystem(sp.csr_matrix([[-2.0]]))
    traj = integrate(system, np.array([1.0]), TimeGrid(0, 1, 11),
                     IntegratorConfig(method=method, rel_tol=1e-8, abs_tol=1e-12))
    np.testing.assert_allclose(traj.states[:, 0], np.exp(-2 * traj.times), rtol=1e-6)


def test_oscillator_dense_output():
    A = sp.csr_matrix([[0.0, 1.0], [-25.0, 0.0]])
    traj = integrate(LinearSystem(A), np.array([1.0, 0.0]), TimeGrid(0, 2, 37),
                     IntegratorConfig(rel_tol=1e-8, abs_tol=1e-10))
    np.testing.assert_allclose(traj.states[:, 0], np.cos(5 * traj.times), atol=1e-5)


def test_zero_state_stays_zero():
    g = GridSpec(1, 1, 6, 6)
    system = assemble(PlateParams(), g)
    traj = integrate(system, np.zeros(system.size), TimeGrid(0, 1, 11))
    assert np.all(traj.states == 0)
    assert traj.states.shape == (11, system.size)


def _plate(k0=0.0, n=6):
    g = GridSpec(1, 1, n, n)
    system = assemble(PlateParams(k0=k0), g)
    y0 = initial_state(g, vinit=lambda x, y: x)
    return g, system, y0


def test_initial_state_samples_unknown_nodes():
    g = GridSpec(1, 1, 6, 5)
    y0 = initial_state(g, vinit=lambda x, y: x)
    n = g.n_unknowns
    assert np.all(y0[:n] == 0)
    for j in range(g.Ny):
        assert y0[n + flatten(g, 3, j)] == pytest.approx(3 * g.dx)


def test_initial_state_rejects_non_finite():
    with pytest.raises(ValueError):
        initial_state(GridSpec(1, 1, 5, 5), winit=lambda x, y: np.full(x.shape, np.nan))


@pytest.mark.parametrize("tf, rel_tol", [(0.05, 1e-6), (0.01, 1e-6), (0.01, 1e-7), (0.01, 1e-8)])
def test_implicit_and_explicit_agree(tf, rel_tol):
    # error control is per step, so the gap is measured over a short window
    _, system, y0 = _plate()
    grid = TimeGrid(0, tf, 6)
    tol = dict(rel_tol=rel_tol, abs_tol=1e-3 * rel_tol)
    a = integrate(system, y0, grid, IntegratorConfig(method="trapezoidal", **tol))
    b = integrate(system, y0, grid, IntegratorConfig(method="rk4", **tol))
    scale = np.abs(a.states).max()
    assert np.abs(a.states - b.states).max() <= 10 * rel_tol * scale


def test_tolerance_halving_is_consistent():
    _, system, y0 = _plate()
    grid = TimeGrid(0, 0.5, 11)
    loose = integrate(system, y0, grid, IntegratorConfig(rel_tol=1e-5, abs_tol=1e-8))
    tight = integrate(system, y0, grid, IntegratorConfig(rel_tol=5e-6, abs_tol=5e-9))
    diff = np.abs(loose.states[-1] - tight.states[-1]).max()
    assert diff < 10 * 1e-5 * np.abs(tight.states[-1]).max()


def test_flow_map_is_linear():
    _, system, y0 = _plate(k0=0.3)
    grid = TimeGrid(0, 0.3, 7)
    cfg = IntegratorConfig(rel_tol=1e-8, abs_tol=1e-12, initial_step=1e-3)
    base = integrate(system, y0, grid, cfg)
    scaled = integrate(system, 3.0 * y0, grid, cfg)
    np.testing.assert_allclose(scaled.states, 3.0 * base.states, atol=1e-6 * np.abs(base.states).max())


def test_factorisations_are_reused():
    _, system, y0 = _plate()
    traj = integrate(system, y0, TimeGrid(0, 0.5, 11))
    assert traj.stats["factorizations"] <= 12
    assert traj.stats["linear_solves"] > 10 * traj.stats["factorizations"]


def test_step_limit_reports_partial_output():
    _, system, y0 = _plate()
    with pytest.raises(IntegrationError) as info:
        integrate(system, y0, TimeGrid(0, 1, 11), IntegratorConfig(max_steps=40))
    exc = info.value
    assert exc.partial is not None
    assert 1 <= len(exc.partial.times) < 11
    assert exc.t < 1.0


def test_rejects_bad_initial_state():
    _, system, y0 = _plate()
    with pytest.raises(ValueError):
        integrate(system, y0[:-1], TimeGrid(0, 1, 3))
    y0[0] = np.inf
    with pytest.raises(ValueError):
        integrate(system, y0, TimeGrid(0, 1, 3))
