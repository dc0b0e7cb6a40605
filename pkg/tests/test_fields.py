import numpy as np
import pytest
from scipy.integrate import quad

from skdv.errors import ConfigError, NumericError
from skdv.fields import (SimState, body_projection, h1_norm, l2_norm, read_snapshot, sup_abs,
                         write_snapshot)
from skdv.grid import Grid


def random_bumps(rng, grid, count, spread=0.25, max_width=3.0):
    centers = rng.uniform(-spread * grid.length, spread * grid.length, count)
    widths = rng.uniform(0.7, max_width, count)
    heights = rng.normal(size=count)
    return sum(h * np.exp(-((grid.x - c) / w) ** 2) for h, c, w in zip(heights, centers, widths))


def test_body_projection_examples(grid, rng):
    assert np.all(body_projection(np.zeros((2, grid.n))) == 0)
    s = 1 / np.cosh(grid.x)
    assert np.array_equal(body_projection(s[None, :]), s * s)
    xi = np.vstack([random_bumps(rng, grid, 3) for _ in range(3)])
    loop = np.zeros(grid.n)
    for j in range(grid.n):
        acc = 0.0
        for i in range(3):
            acc += xi[i, j] * xi[i, j]
        loop[j] = acc
    assert np.allclose(body_projection(xi), loop, rtol=1e-15, atol=0)


def test_body_projection_nonnegative(rng, grid):
    for _ in range(20):
        xi = rng.normal(size=(int(rng.integers(1, 5)), grid.n))
        assert np.all(body_projection(xi) >= 0)


def test_h1_norm_of_soliton_matches_quadrature(grid, soliton):
    phi = lambda x: 3 / np.cosh(x / 2) ** 2
    dphi = lambda x: -3 * np.tanh(x / 2) / np.cosh(x / 2) ** 2
    l2, _ = quad(lambda x: phi(x) ** 2, -60, 60, epsabs=1e-13, limit=200)
    d2, _ = quad(lambda x: dphi(x) ** 2, -60, 60, epsabs=1e-13, limit=200)
    assert l2 == pytest.approx(24.0, abs=1e-10)
    assert d2 == pytest.approx(4.8, abs=1e-10)
    assert abs(h1_norm(grid, soliton.u, soliton.xi) - np.sqrt(l2 + d2)) <= 1e-9
    assert h1_norm(grid, np.zeros(grid.n), np.zeros((2, grid.n))) == 0.0


def test_h1_minus_l2_is_derivative_energy(grid):
    f = np.exp(-grid.x ** 2 / 4) * np.cos(grid.x)
    zero = np.zeros(grid.n)
    lhs = h1_norm(grid, zero, f) ** 2 - l2_norm(grid, zero, f) ** 2
    assert lhs == pytest.approx(grid.integrate(grid.derivative(f, 1) ** 2), rel=1e-12)


def test_sup_abs_examples(grid, soliton, rng):
    assert sup_abs(np.zeros(grid.n)) == 0.0
    assert abs(sup_abs(soliton.u) - 3.0) <= grid.dx ** 2
    f = random_bumps(rng, grid, 4)
    naive = 0.0
    for v in f:
        naive = max(naive, abs(v))
    assert sup_abs(f) == naive


def test_sobolev_embedding_on_random_fields(rng):
    g = Grid(256, 60.0)
    worst = 0.0
    for _ in range(1000):
        f = random_bumps(rng, g, int(rng.integers(1, 5)), spread=0.2, max_width=2.5)
        assert max(abs(f[0]), abs(f[-1])) < 1e-10
        ratio = sup_abs(f) / (h1_norm(g, f) / np.sqrt(2.0))
        worst = max(worst, ratio)
    assert worst <= 1 + 1e-6


def test_h1_norm_is_sum_of_squares(rng, grid):
    zero = np.zeros(grid.n)
    for _ in range(20):
        u = random_bumps(rng, grid, 3)
        xi = np.vstack([random_bumps(rng, grid, 2) for _ in range(2)])
        total = h1_norm(grid, u, xi) ** 2
        parts = h1_norm(grid, u) ** 2 + h1_norm(grid, zero, xi) ** 2
        assert total == pytest.approx(parts, rel=1e-12)


def test_state_validation(grid):
    with pytest.raises(ConfigError):
        SimState(grid, 0.0, np.zeros(grid.n - 1), np.zeros((1, grid.n)))
    with pytest.raises(ConfigError):
        SimState(grid, 0.0, np.zeros(grid.n), np.zeros((2, grid.n + 1)))
    bad = np.zeros(grid.n)
    bad[0] = np.inf
    with pytest.raises(NumericError):
        SimState(grid, 0.0, bad, np.zeros((1, grid.n)))
    s = SimState(grid, 0.0, np.zeros(grid.n), np.zeros(grid.n))
    assert s.k == 1
    with pytest.raises(ValueError):
        s.u[0] = 1.0


def test_snapshot_round_trip(tmp_path, rng):
    g = Grid(64, 20.0)
    s = SimState(g, 0.5, rng.normal(size=g.n), rng.normal(size=(3, g.n)))
    path = tmp_path / "snap.csv"
    write_snapshot(path, s)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,u,phi_1,phi_2,phi_3"
    assert len(lines) == g.n + 1
    back = read_snapshot(path, g, t=0.5)
    assert np.array_equal(back.u, s.u)
    assert np.array_equal(back.xi, s.xi)
