"""Right-hand side of the broken super-KdV system and its time integration.

    u_t     = -u''' - u u' - (1/4) (sum_i phi_i**2)'
    phi_i_t = -phi_i''' - (1/2) (phi_i u)'

The state is advanced in Fourier space as one ``(K + 1, n//2 + 1)`` array:
row 0 is ``u``, rows 1..K are the components of ``xi``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericError
from .fields import SimState, body_projection, sup_abs
from .grid import Grid

log = logging.getLogger(__name__)

SCHEMES = ("if-rk4", "rk4")


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-3
    scheme: str = "if-rk4"
    dealias: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt != 0.0):
            raise ConfigError(f"dt must be nonzero and finite, got {self.dt}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")

    def check_step_bound(self, grid: Grid, u) -> None:
        """Advective bound ``|dt| <= 0.5 dx / max(1, sup|u|)``."""
        limit = 0.5 * grid.dx / max(1.0, sup_abs(u))
        if abs(self.dt) > limit:
            raise ConfigError(
                f"dt = {self.dt:g} exceeds the advective bound {limit:.4g} "
                f"(0.5 dx / max(1, sup|u|))")


def _pack(state: SimState) -> np.ndarray:
    g = state.grid
    return g.fft(np.vstack([state.u[None, :], state.xi]))


def _unpack(grid: Grid, t: float, y_hat: np.ndarray) -> SimState:
    y = grid.ifft(y_hat)
    return SimState(grid, t, y[0], y[1:])


class _System:
    """Linear symbol and nonlinear Fourier-space term for a given grid."""

    def __init__(self, grid: Grid, dealias: bool = True):
        self.grid = grid
        # -d^3/dx^3  ->  -(ik)^3 = i k^3 ; Nyquist dropped as for any odd derivative
        self.linear = -grid.multiplier(3)
        self.ik = grid.multiplier(1)
        self.mask = grid.dealias_mask if dealias else None

    def nonlinear(self, y_hat: np.ndarray) -> np.ndarray:
        g = self.grid
        y = g.ifft(y_hat)
        u, xi = y[0], y[1:]
        products = np.empty_like(y)
        # u u' + (1/4)(P)' = ( u^2/2 + P/4 )'
        products[0] = 0.5 * u * u + 0.25 * body_projection(xi)
        products[1:] = 0.5 * xi * u
        p_hat = g.fft(products)
        if self.mask is not None:
            p_hat *= self.mask
        return -self.ik * p_hat

    def full(self, y_hat: np.ndarray) -> np.ndarray:
        return self.linear * y_hat + self.nonlinear(y_hat)


def rhs(state: SimState, dealias: bool = True):
    """Return ``(du_dt, dxi_dt)`` in physical space."""
    sys = _System(state.grid, dealias)
    out = state.grid.ifft(sys.full(_pack(state)))
    if not np.all(np.isfinite(out)):
        raise NumericError("non-finite right-hand side", t=state.t)
    return out[0], out[1:]


class Stepper:
    """Reusable stepper; caches the integrating factors for one (grid, dt)."""

    def __init__(self, grid: Grid, cfg: IntegratorConfig):
        self.grid = grid
        self.cfg = cfg
        self.sys = _System(grid, cfg.dealias)
        half = np.exp(0.5 * cfg.dt * self.sys.linear)
        self.e_half = half
        self.e_full = half * half

    def advance(self, y_hat: np.ndarray) -> np.ndarray:
        dt = self.cfg.dt
        if self.cfg.scheme == "if-rk4":
            N, E, E2 = self.sys.nonlinear, self.e_half, self.e_full
            a = dt * N(y_hat)
            b = dt * N(E * (y_hat + 0.5 * a))
            c = dt * N(E * y_hat + 0.5 * b)
            d = dt * N(E2 * y_hat + E * c)
            return E2 * y_hat + (E2 * a + 2.0 * E * (b + c) + d) / 6.0
        F = self.sys.full
        k1 = F(y_hat)
        k2 = F(y_hat + 0.5 * dt * k1)
        k3 = F(y_hat + 0.5 * dt * k2)
        k4 = F(y_hat + dt * k3)
        return y_hat + dt * (k1 + 2.0 * (k2 + k3) + k4) / 6.0

    def run(self, y_hat: np.ndarray, t: float, steps: int) -> tuple[np.ndarray, float]:
        # overflow is detected below and reported with its time, not warned about
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(steps):
                y_hat = self.advance(y_hat)
                t += self.cfg.dt
                if not np.all(np.isfinite(y_hat)):
                    raise NumericError("numerical blow-up", t=t)
        return y_hat, t


def step(state: SimState, cfg: IntegratorConfig) -> SimState:
    stepper = Stepper(state.grid, cfg)
    y_hat, t = stepper.run(_pack(state), state.t, 1)
    return _unpack(state.grid, t, y_hat)


def simulate(initial: SimState, t_end: float, cfg: IntegratorConfig,
             sample_every: int = 1, callback=None) -> list[SimState]:
    """Integrate to ``t_end`` and return the states sampled every ``sample_every`` steps.

    The first and final states are always included.  ``callback(state)`` is
    invoked on every sampled state as it is produced.
    """
    if not t_end > initial.t:
        raise ConfigError(f"t_end ({t_end}) must exceed the initial time ({initial.t})")
    if cfg.dt <= 0:
        raise ConfigError("simulate needs dt > 0")
    if sample_every < 1:
        raise ConfigError("sample_every must be >= 1")
    cfg.check_step_bound(initial.grid, initial.u)
    n_steps = int(round((t_end - initial.t) / cfg.dt))
    if n_steps < 1 or abs(initial.t + n_steps * cfg.dt - t_end) > 1e-9 * max(1.0, abs(t_end)):
        raise ConfigError("t_end - t0 must be a positive integer multiple of dt")

    grid = initial.grid
    stepper = Stepper(grid, cfg)
    y_hat = _pack(initial)
    out = [initial]
    if callback is not None:
        callback(initial)
    done = 0
    while done < n_steps:
        chunk = min(sample_every, n_steps - done)
        y_hat, _ = stepper.run(y_hat, initial.t + done * cfg.dt, chunk)
        done += chunk
        # recompute t from the step count to avoid accumulated rounding
        state = _unpack(grid, initial.t + done * cfg.dt, y_hat)
        out.append(state)
        if callback is not None:
            callback(state)
    log.debug("simulated %d steps to t = %g", n_steps, out[-1].t)
    return out
