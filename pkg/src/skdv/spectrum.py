"""Linearization operator ``H = -d^2/dx^2 - phi/2`` around the soliton.

The operator is discretized with the same periodic Fourier calculus as the
dynamics and diagonalized densely.  Its two bound states are known in closed
form (``-c`` with ``sech^2 z`` and ``-c/4`` with ``sinh z / cosh^2 z``,
``z = sqrt(c) x / 2``); the rest of the discrete spectrum are box modes that
approximate the continuum ``[0, inf)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NumericError
from .grid import Grid
from .soliton import SolitonParams, soliton_profile


@dataclass(frozen=True)
class LinearizedOperator:
    c: float
    grid: Grid
    matrix: np.ndarray
    potential: np.ndarray  # phi/2 sampled at the soliton rest frame

    def apply(self, f) -> np.ndarray:
        return np.asarray(f) @ self.matrix.T


def _second_derivative_kernel(grid: Grid) -> np.ndarray:
    col = grid.ifft(grid.multiplier(2).real)
    # enforce the exact even symmetry col[m] == col[-m]
    return 0.5 * (col + np.roll(col[::-1], 1))


def build_operator(c: float, grid: Grid) -> LinearizedOperator:
    """Dense symmetric matrix of ``-d^2/dx^2 - phi_c/2`` on the grid."""
    d2 = scipy.linalg.circulant(_second_derivative_kernel(grid))
    phi = soliton_profile(SolitonParams(c), 0.0, grid)
    A = -d2 - np.diag(0.5 * phi)
    A = 0.5 * (A + A.T)
    return LinearizedOperator(float(c), grid, A, 0.5 * phi)


@dataclass(frozen=True)
class SpectrumResult:
    """Lowest eigenpairs; eigenfunctions are rows, unit norm in ``L2(dx)``."""

    c: float
    grid: Grid
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray

    @property
    def ground(self) -> np.ndarray:
        return self.eigenfunctions[0]


def eigen_pairs(op: LinearizedOperator, k: int = 3) -> SpectrumResult:
    if k < 2:
        raise ValueError("need at least two eigenpairs")
    g = op.grid
    try:
        w, v = scipy.linalg.eigh(op.matrix, subset_by_index=[0, k - 1])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"eigensolver failed: {exc}") from exc
    funcs = v.T / np.sqrt(g.dx)
    center = g.n // 2
    for j, f in enumerate(funcs):
        if j == 0:
            ref = f[center]
        else:
            right = f[center:]
            ref = right[np.argmax(np.abs(right))]
        if ref < 0:
            funcs[j] = -f
    return SpectrumResult(op.c, g, w, funcs)


def analytic_bound_states(c: float, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Normalized ``sech^2 z`` and ``sinh z / cosh^2 z`` with ``z = sqrt(c) x / 2``."""
    z = 0.5 * np.sqrt(c) * grid.x
    psi1 = 1.0 / np.cosh(z) ** 2
    psi2 = np.sinh(z) / np.cosh(z) ** 2
    psi1 /= np.sqrt(grid.integrate(psi1 ** 2))
    psi2 /= np.sqrt(grid.integrate(psi2 ** 2))
    return psi1, psi2


def analytic_errors(spec: SpectrumResult) -> dict[str, float]:
    g, c = spec.grid, spec.c
    a1, a2 = analytic_bound_states(c, g)

    def dist(f, a):
        return float(min(np.sqrt(g.integrate((f - a) ** 2)), np.sqrt(g.integrate((f + a) ** 2))))

    return {
        "lambda1": float(abs(spec.eigenvalues[0] + c)),
        "lambda2": float(abs(spec.eigenvalues[1] + 0.25 * c)),
        "psi1_L2": dist(spec.eigenfunctions[0], a1),
        "psi2_L2": dist(spec.eigenfunctions[1], a2),
    }


def rayleigh(f, op: LinearizedOperator) -> float:
    """``<f, H f> / <f, f>`` with the real L2 product."""
    f = np.asarray(f, dtype=float)
    ff = float(f @ f)
    if ff == 0.0:
        raise ValueError("Rayleigh quotient of the zero field is undefined")
    return float(f @ op.apply(f)) / ff


def project_out_ground(xi, spec: SpectrumResult) -> tuple[np.ndarray, np.ndarray]:
    """Remove the ground-state component of each Clifford component.

    Returns ``(xi_tilde, f1)`` with ``f1[i] = <phi_i, psi_1>``.
    """
    g = spec.grid
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    psi1 = spec.ground
    f1 = g.integrate(xi * psi1)
    return xi - f1[:, None] * psi1, f1
