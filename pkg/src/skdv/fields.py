"""State containers and the field algebra built on the body projection.

A Clifford field is stored as a ``(K, n)`` array holding the real component
functions of the generator expansion.  Only the body of ``xi xi-bar``, the
sum of squares of the components, ever enters the equations, so the
conjugation itself is never formed.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericError
from .grid import Grid


@dataclass(frozen=True)
class SimState:
    """A point ``(t, u, xi)`` on a trajectory."""

    grid: Grid
    t: float
    u: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        xi = np.array(self.xi, dtype=float)
        if xi.ndim == 1:
            xi = xi[None, :]
        if u.shape != (self.grid.n,):
            raise ConfigError(f"u has shape {u.shape}, expected ({self.grid.n},)")
        if xi.ndim != 2 or xi.shape[1] != self.grid.n or xi.shape[0] < 1:
            raise ConfigError(f"xi has shape {xi.shape}, expected (K, {self.grid.n})")
        if not np.isfinite(self.t):
            raise ConfigError("t must be finite")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(xi))):
            raise NumericError("non-finite values in state", t=self.t)
        u.setflags(write=False)
        xi.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "t", float(self.t))

    @property
    def k(self) -> int:
        return self.xi.shape[0]

    @classmethod
    def zeros(cls, grid: Grid, k: int = 2, t: float = 0.0) -> "SimState":
        return cls(grid, t, np.zeros(grid.n), np.zeros((k, grid.n)))

    def replace(self, **changes) -> "SimState":
        kw = dict(grid=self.grid, t=self.t, u=self.u, xi=self.xi)
        kw.update(changes)
        return SimState(**kw)


def body_projection(xi) -> np.ndarray:
    """Pointwise sum of squared components, ``P(xi xi-bar) = sum_i phi_i**2``."""
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 1:
        return xi * xi
    return np.sum(xi * xi, axis=0)


def h1_norm_sq(grid: Grid, u, xi=None) -> float:
    u = np.asarray(u, dtype=float)
    total = grid.integrate(u * u) + grid.integrate(grid.derivative(u, 1) ** 2)
    if xi is not None:
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        total += np.sum(grid.integrate(xi * xi))
        total += np.sum(grid.integrate(grid.derivative(xi, 1) ** 2))
    return float(total)


def h1_norm(grid: Grid, u, xi=None) -> float:
    """Sobolev norm of the pair ``(u, xi)``; spectral derivatives, trapezoid quadrature."""
    return float(np.sqrt(h1_norm_sq(grid, u, xi)))


def l2_norm(grid: Grid, u, xi=None) -> float:
    u = np.asarray(u, dtype=float)
    total = grid.integrate(u * u)
    if xi is not None:
        total += np.sum(grid.integrate(body_projection(xi)))
    return float(np.sqrt(total))


def state_h1_norm(state: SimState) -> float:
    return h1_norm(state.grid, state.u, state.xi)


def sup_abs(u) -> float:
    return float(np.max(np.abs(u)))


def write_snapshot(path, state: SimState) -> None:
    """Write ``x,u,phi_1..phi_K`` with 17 significant digits, one row per grid point."""
    path = Path(path)
    cols = np.vstack([state.grid.x, state.u, state.xi])
    header = ["x", "u"] + [f"phi_{i + 1}" for i in range(state.k)]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in cols.T:
            w.writerow([format_float(v) for v in row])


def read_snapshot(path, grid: Grid, t: float = 0.0) -> SimState:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    if header[:2] != ["x", "u"] or len(header) < 3:
        raise ConfigError(f"unexpected snapshot header {header}")
    if body.shape[0] != grid.n or not np.allclose(body[:, 0], grid.x, rtol=0, atol=1e-12):
        raise ConfigError("snapshot does not match grid")
    return SimState(grid, t, body[:, 1], body[:, 2:].T)


def format_float(v: float) -> str:
    return f"{float(v):.17g}"
