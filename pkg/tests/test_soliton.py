import warnings

import numpy as np
import pytest

from skdv.dynamics import IntegratorConfig, simulate
from skdv.errors import ConfigError, MeasurementError
from skdv.fields import SimState
from skdv.grid import Grid, default_length
from skdv.soliton import (DomainTooSmallWarning, SolitonParams, measure_speed, soliton_charges,
                          soliton_profile, superpose, traveling_wave_residual)
from skdv.charges import charge_h1, charge_m, charge_v


def test_profile_peak(grid):
    phi = soliton_profile(SolitonParams(1.0), 0.0, grid)
    assert phi[grid.n // 2] == 3.0
    assert grid.x[np.argmax(phi)] == 0.0


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0, 4.0])
def test_profile_scaling(c):
    g = Grid(4096, 80.0)
    phi = soliton_profile(SolitonParams(c), 0.0, g)
    assert np.max(phi) == pytest.approx(3 * c, rel=1e-12)
    # half-maximum where sech^2(z) = 1/2, i.e. z = arccosh(sqrt 2)
    above = g.x[phi >= 1.5 * c]
    width = above[-1] - above[0]
    expected = 4 * np.arccosh(np.sqrt(2)) / np.sqrt(c)
    assert abs(width - expected) <= 2 * g.dx


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_sampled_charges_match_closed_forms(c):
    g = Grid(2048, default_length(c))
    s = SimState(g, 0.0, soliton_profile(SolitonParams(c), 0.0, g), np.zeros(g.n))
    exact = soliton_charges(c)
    assert abs(charge_v(s) - exact["V"]) <= 1e-8
    assert abs(charge_m(s) - exact["M"]) <= 1e-8
    assert abs(charge_h1(g, s.u) - exact["H_1"]) <= 1e-8


def test_profile_translation_and_speed_conventions(grid):
    derived = SolitonParams(1.0, speed_convention="derived")
    paper = SolitonParams(1.0, speed_convention="paper")
    assert derived.speed == 1.0 and paper.speed == 2.0
    moved = soliton_profile(derived, 2.0, grid)
    assert np.max(np.abs(moved - grid.translate(soliton_profile(derived, 0.0, grid), 2.0))) <= 1e-12
    shifted = soliton_profile(SolitonParams(1.0, a=1.5), 0.0, grid)
    assert grid.x[np.argmax(shifted)] == pytest.approx(-1.5, abs=grid.dx)


def test_params_validation():
    for bad in (0.0, -1.0, np.nan):
        with pytest.raises(ConfigError):
            SolitonParams(bad)
    with pytest.raises(ConfigError):
        SolitonParams(1.0, speed_convention="other")


def test_small_domain_warns():
    with pytest.warns(DomainTooSmallWarning):
        soliton_profile(SolitonParams(1.0), 0.0, Grid(256, 20.0))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        soliton_profile(SolitonParams(1.0), 0.0, Grid(1024, 80.0))


def test_residual_examples(grid):
    phi = soliton_profile(SolitonParams(1.0), 0.0, grid)
    assert traveling_wave_residual(grid, np.zeros(grid.n), 1.0) == 0.0
    assert traveling_wave_residual(grid, phi, 1.0) <= 1e-9
    assert traveling_wave_residual(grid, 2 * phi, 1.0) > 0.1


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_residual_small_for_each_c(c):
    g = Grid(2048, default_length(c))
    assert traveling_wave_residual(g, soliton_profile(SolitonParams(c), 0.0, g), c) <= 1e-9


def _synthetic(grid, profile, speed, times):
    return [SimState(grid, t, grid.translate(profile, speed * t), np.zeros(grid.n)) for t in times]


def test_measure_speed_synthetic(grid):
    profile = np.exp(-grid.x ** 2 / 2) + 0.3 * np.exp(-(grid.x - 1) ** 2)
    times = np.linspace(0, 4, 9)
    assert measure_speed(_synthetic(grid, profile, 1.5, times)) == pytest.approx(1.5, abs=1e-6)
    assert measure_speed(_synthetic(grid, profile, -0.7, times)) == pytest.approx(-0.7, abs=1e-6)
    assert abs(measure_speed(_synthetic(grid, profile, 0.0, times))) <= 1e-12


def test_measure_speed_errors(grid):
    profile = np.exp(-grid.x ** 2)
    with pytest.raises(MeasurementError):
        measure_speed(_synthetic(grid, profile, 1.0, [0.0, 1.0]))
    # a jump of more than a quarter box between samples reads as a wrap
    with pytest.raises(MeasurementError):
        measure_speed(_synthetic(grid, profile, 25.0, [0.0, 1.0, 2.0]))
    back_and_forth = [SimState(grid, t, grid.translate(profile, s), np.zeros(grid.n))
                      for t, s in [(0, 0.0), (1, 1.0), (2, 0.5), (3, 2.0)]]
    with pytest.raises(MeasurementError):
        measure_speed(back_and_forth)


def test_simulated_soliton_moves_at_speed_c(grid):
    start = SimState(grid, 0.0, soliton_profile(SolitonParams(1.0), 0.0, grid), np.zeros(grid.n))
    traj = simulate(start, 2.0, IntegratorConfig(1e-3), sample_every=250)
    v = measure_speed(traj)
    assert abs(v - 1.0) <= 5e-3
    assert abs(v - 2.0) > 5e-3 * 2.0


def test_superpose():
    grid = Grid(2048, 160.0)
    ps = [SolitonParams(1.0, a=20.0), SolitonParams(0.5, a=-20.0)]
    u = superpose(grid, ps)
    assert u[np.argmin(np.abs(grid.x + 20))] == pytest.approx(3.0, abs=1e-6)
    assert u[np.argmin(np.abs(grid.x - 20))] == pytest.approx(1.5, abs=1e-6)
    with pytest.raises(ConfigError):
        superpose(grid, [SolitonParams(1.0, a=5.0), SolitonParams(1.0, a=-5.0)])
