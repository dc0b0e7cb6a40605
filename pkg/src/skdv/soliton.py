"""One-soliton profiles, the traveling-wave identity and speed measurement."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, MeasurementError
from .grid import Grid

CONVENTIONS = ("derived", "paper")


@dataclass(frozen=True)
class SolitonParams:
    """``u = 3c sech^2(sqrt(c)/2 (x - v t + a))``.

    ``speed_convention`` selects ``v = c`` ("derived", the speed obtained by
    substituting the profile into the u-equation) or ``v = 1 + c`` ("paper").
    """

    c: float = 1.0
    a: float = 0.0
    speed_convention: str = "derived"

    def __post_init__(self):
        if not (np.isfinite(self.c) and self.c > 0):
            raise ConfigError(f"soliton c must be > 0, got {self.c}")
        if self.speed_convention not in CONVENTIONS:
            raise ConfigError(f"speed_convention must be one of {CONVENTIONS}")

    @property
    def speed(self) -> float:
        return self.c if self.speed_convention == "derived" else 1.0 + self.c


class DomainTooSmallWarning(UserWarning):
    pass


def soliton_profile(p: SolitonParams, t: float, grid: Grid) -> np.ndarray:
    z = 0.5 * np.sqrt(p.c) * (grid.x - p.speed * t + p.a)
    # fold into the periodic box: distance to the nearest image
    z_period = 0.5 * np.sqrt(p.c) * grid.length
    z = (z + 0.5 * z_period) % z_period - 0.5 * z_period
    phi = 3.0 * p.c / np.cosh(z) ** 2
    edge = max(phi[0], phi[-1])
    if edge > 1e-10 * 3.0 * p.c and edge > 1e-10:
        warnings.warn(f"soliton tail {edge:.2e} at the box edge; increase L",
                      DomainTooSmallWarning, stacklevel=2)
    return phi


def soliton_charges(c: float) -> dict[str, float]:
    """Closed-form charges of the one-soliton on the whole line."""
    return {
        "H_1": 12.0 * np.sqrt(c),
        "V": 24.0 * c ** 1.5,
        "M": -14.4 * c ** 2.5,
        "h1_norm_sq": 24.0 * c ** 1.5 + 4.8 * c ** 2.5,
    }


def traveling_wave_residual(grid: Grid, phi, c: float) -> float:
    """L2 norm of ``phi'' + phi^2/2 - c phi``."""
    phi = np.asarray(phi, dtype=float)
    r = grid.derivative(phi, 2) + 0.5 * phi * phi - c * phi
    return float(np.sqrt(grid.integrate(r * r)))


def superpose(grid: Grid, params: list[SolitonParams], min_separation: float = 10.0) -> np.ndarray:
    """Sum of well separated single solitons at t = 0.

    Centers must be at least ``min_separation`` widths apart, where the width of
    a soliton is ``2/sqrt(c)``.
    """
    centers = [-p.a for p in params]
    for i, p in enumerate(params):
        for q, cq in zip(params[i + 1:], centers[i + 1:]):
            width = max(2.0 / np.sqrt(p.c), 2.0 / np.sqrt(q.c))
            if abs(centers[i] - cq) < min_separation * width:
                raise ConfigError("solitons are not well separated")
    return np.sum([soliton_profile(p, 0.0, grid) for p in params], axis=0)


def measure_speed(trajectory, reference=None) -> float:
    """Slope of a least-squares fit of the optimal shift against time.

    ``reference`` defaults to the first sampled ``u``.
    """
    from .stability import optimal_shift

    if len(trajectory) < 3:
        raise MeasurementError("need at least 3 samples to measure a speed")
    grid = trajectory[0].grid
    ref = trajectory[0].u if reference is None else reference
    ts = np.array([s.t for s in trajectory])
    shifts = []
    for s in trajectory:
        res = optimal_shift(grid, s.u, ref)
        if res.degenerate:
            shifts.append(0.0)
        else:
            shifts.append(res.shift)
    shifts = np.array(shifts)
    jumps = np.diff(shifts)
    if np.any(np.abs(jumps) > 0.25 * grid.length):
        raise MeasurementError("pulse shift wrapped around the periodic box")
    if jumps.size > 1 and not (np.all(jumps >= -1e-9) or np.all(jumps <= 1e-9)):
        raise MeasurementError("pulse shift is not monotone in time")
    slope = np.polyfit(ts, shifts, 1)[0]
    return float(slope)
