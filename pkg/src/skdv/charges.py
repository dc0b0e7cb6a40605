"""Conserved charges of the broken system and the a priori H1 bound they imply."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .fields import SimState, body_projection, h1_norm

log = logging.getLogger(__name__)


def charge_h_half(grid, xi) -> np.ndarray:
    """Integral of each Clifford component (one value per component)."""
    return np.atleast_1d(grid.integrate(np.atleast_2d(xi)))


def charge_h1(grid, u) -> float:
    return float(grid.integrate(u))


def charge_v(state: SimState) -> float:
    g = state.grid
    return float(g.integrate(state.u ** 2 + body_projection(state.xi)))


def charge_m(state: SimState) -> float:
    g = state.grid
    u, xi = state.u, state.xi
    P = body_projection(xi)
    du = g.derivative(u, 1)
    dxi = g.derivative(xi, 1)
    density = -u ** 3 / 3.0 - 0.5 * u * P + du ** 2 + np.sum(dxi ** 2, axis=0)
    return float(g.integrate(density))


@dataclass(frozen=True)
class BoundResult:
    """Value of the a priori bound; ``violated`` flags a negative discriminant."""

    value: float
    d: float
    e: float
    discriminant: float

    @property
    def violated(self) -> bool:
        return bool(self.discriminant < 0)

    def __float__(self):
        return self.value


def apriori_bound(v: float, m: float) -> BoundResult:
    """``(d + sqrt(d^2 + 4e)) / 2`` with ``d = V/(2 sqrt 2)`` and ``e = V + M``.

    A negative discriminant is not raised: it is logged and reported through
    ``BoundResult.violated`` with ``value`` set to NaN.
    """
    if v < 0:
        raise ValueError(f"V must be nonnegative, got {v}")
    d = v / (2.0 * np.sqrt(2.0))
    e = v + m
    disc = d * d + 4.0 * e
    if disc < 0:
        log.warning("a priori bound discriminant is negative: d^2 + 4e = %.3e (V=%r, M=%r)",
                    disc, v, m)
        return BoundResult(float("nan"), d, e, disc)
    return BoundResult(0.5 * (d + np.sqrt(disc)), d, e, disc)


def apriori_chain_rhs(state: SimState) -> float:
    """``V + M + (1/2) int |u| (u^2 + P) dx``, an upper bound on the squared H1 norm."""
    g = state.grid
    P = body_projection(state.xi)
    return charge_v(state) + charge_m(state) + 0.5 * float(
        g.integrate(np.abs(state.u) * (state.u ** 2 + P)))


@dataclass(frozen=True)
class ChargeReport:
    t: float
    h_half: np.ndarray
    h_1: float
    v: float
    m: float
    h1_norm: float
    apriori_bound: float
    bound_violated: bool = field(default=False)

    def row(self) -> list[float]:
        return [self.t, *self.h_half, self.h_1, self.v, self.m, self.h1_norm, self.apriori_bound]

    @staticmethod
    def header(k: int) -> list[str]:
        return (["t"] + [f"H_half_{i + 1}" for i in range(k)]
                + ["H_1", "V", "M", "h1_norm", "apriori_bound"])


def charge_report(state: SimState) -> ChargeReport:
    v = charge_v(state)
    m = charge_m(state)
    b = apriori_bound(v, m)
    return ChargeReport(
        t=state.t,
        h_half=charge_h_half(state.grid, state.xi),
        h_1=charge_h1(state.grid, state.u),
        v=v,
        m=m,
        h1_norm=h1_norm(state.grid, state.u, state.xi),
        apriori_bound=b.value,
        bound_violated=b.violated,
    )
