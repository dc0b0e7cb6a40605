"""Uniform periodic grid with Fourier differentiation, translation and quadrature.

Fields are plain 1-D float64 arrays of length ``grid.n`` (a "grid field").
Stacks of fields (the Clifford components) are 2-D arrays of shape ``(K, n)``;
every operation here acts on the last axis, so stacks work unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError, NumericError


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Periodic box ``[-L/2, L/2)`` sampled at ``n`` points."""

    n: int
    length: float
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n:
            raise ConfigError(f"n must be an integer, got {self.n!r}")
        if self.n < 16 or not _is_power_of_two(int(self.n)):
            raise ConfigError(f"n must be a power of two >= 16, got {self.n}")
        if not np.isfinite(self.length) or self.length <= 0:
            raise ConfigError(f"L must be positive, got {self.length}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "length", float(self.length))

    @property
    def dx(self) -> float:
        return self.length / self.n

    @cached_property
    def x(self) -> np.ndarray:
        x = -0.5 * self.length + self.dx * np.arange(self.n)
        x.setflags(write=False)
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Angular wavenumbers of the half-spectrum, ``2*pi*m/L`` for m = 0..n/2."""
        k = 2.0 * np.pi * np.arange(self.n // 2 + 1) / self.length
        k.setflags(write=False)
        return k

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        # keep |m| <= (2/3)(n/2); n is a power of two so the cutoff is never an integer
        m = np.arange(self.n // 2 + 1)
        mask = m <= (2.0 / 3.0) * (self.n // 2)
        mask.setflags(write=False)
        return mask

    def multiplier(self, order: int) -> np.ndarray:
        """Fourier symbol ``(i k)**order``; the Nyquist entry is zeroed for odd orders."""
        key = ("mult", order)
        if key not in self._cache:
            sym = (1j * self.k) ** order
            if order % 2:
                sym[-1] = 0.0
            sym.setflags(write=False)
            self._cache[key] = sym
        return self._cache[key]

    # -- transforms -------------------------------------------------------

    def fft(self, f):
        return np.fft.rfft(f, axis=-1)

    def ifft(self, f_hat):
        return np.fft.irfft(f_hat, n=self.n, axis=-1)

    # -- operations -------------------------------------------------------

    def derivative(self, f, order: int = 1) -> np.ndarray:
        if order not in (1, 2, 3):
            raise ValueError(f"derivative order must be 1, 2 or 3, got {order}")
        f = _checked(f)
        return self.ifft(self.multiplier(order) * self.fft(f))

    def integrate(self, f) -> float | np.ndarray:
        """Periodic trapezoid rule, ``dx * sum(f)`` along the last axis."""
        f = _checked(f)
        return self.dx * np.sum(f, axis=-1)

    def inner(self, f, g) -> float | np.ndarray:
        return self.integrate(np.asarray(f) * np.asarray(g))

    def translate(self, f, s: float) -> np.ndarray:
        """Return ``f(x - s)`` by a spectral phase shift (periodic wrap-around)."""
        f = np.asarray(f, dtype=float)
        if s == 0.0:
            return f.copy()
        return self.ifft(self.fft(f) * np.exp(-1j * self.k * s))

    def dealias(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        return self.ifft(self.fft(f) * self.dealias_mask)


def make_grid(n: int, L: float) -> Grid:
    return Grid(n, L)


def default_length(c: float) -> float:
    """Box length large enough for the soliton tails of amplitude parameter ``c``."""
    if not (np.isfinite(c) and c > 0):
        raise ConfigError(f"soliton c must be > 0, got {c}")
    return 80.0 / np.sqrt(min(1.0, c))


def _checked(f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        raise NumericError("non-finite values in field")
    return f
