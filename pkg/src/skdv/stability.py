"""Lyapunov distances, the Delta-M decomposition and stability experiments.

All distances use the Sobolev norm of the pair ``(u, xi)``.  The orbital
distance ``d_II`` minimizes over translations of the first ``u`` only; the
Clifford difference is left untranslated.
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
import scipy.optimize

from .charges import apriori_bound, charge_m, charge_v
from .dynamics import IntegratorConfig, simulate
from .errors import ConfigError
from .fields import SimState, body_projection, format_float, h1_norm
from .grid import Grid
from .soliton import SolitonParams, soliton_profile

log = logging.getLogger(__name__)

TARGETS = ("both", "u", "xi")


class ShiftResult(NamedTuple):
    shift: float
    degenerate: bool


def _correlation_shift(grid: Grid, u, reference, weight=None) -> ShiftResult:
    """Shift ``s`` maximizing ``<u, translate(reference, s)>`` in a weighted L2 product."""
    A = grid.fft(u) * np.conj(grid.fft(reference))
    if weight is not None:
        A = A * weight
    n, dx = grid.n, grid.dx
    lattice = np.fft.irfft(A, n=n)  # lattice[m] = sum_j u_j ref_{j-m} (weighted)
    scale = max(1.0, float(np.max(np.abs(lattice))))
    if np.ptp(lattice) <= 1e-14 * scale:
        return ShiftResult(0.0, True)

    k = grid.k
    w = np.full(k.shape, 2.0)
    w[0] = 1.0
    w[-1] = 1.0

    def corr(s):
        return float(np.sum(w * (A * np.exp(1j * k * s)).real))

    def dcorr(s):
        return float(np.sum(w * (1j * k * A * np.exp(1j * k * s)).real))

    m = int(np.argmax(lattice))
    s0 = m * dx
    # golden-section on the negative correlation, bracketed by the lattice neighbours
    res = scipy.optimize.minimize_scalar(
        lambda s: -corr(s), bracket=(s0 - dx, s0, s0 + dx), method="golden",
        options={"xtol": 1e-12})
    s = float(res.x)
    # value comparisons stall near sqrt(eps); finish on the stationarity condition
    lo, hi = s - 0.5 * dx, s + 0.5 * dx
    if dcorr(lo) > 0 > dcorr(hi):
        s = scipy.optimize.brentq(dcorr, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    L = grid.length
    s = (s + 0.5 * L) % L - 0.5 * L
    return ShiftResult(s, False)


def optimal_shift(grid: Grid, u, reference) -> ShiftResult:
    """Minimize ``int (u - translate(reference, s))^2 dx`` over ``s`` in one period."""
    return _correlation_shift(grid, u, reference)


def _h1_weight(grid: Grid) -> np.ndarray:
    return 1.0 + np.abs(grid.multiplier(1)) ** 2


def distance_dI(s1: SimState, s2: SimState) -> float:
    _check_pair(s1, s2)
    return h1_norm(s1.grid, s1.u - s2.u, s1.xi - s2.xi)


def distance_dII(s1: SimState, s2: SimState, return_shift: bool = False):
    """``inf_s ||(translate(u1, s) - u2, xi1 - xi2)||_H1``."""
    _check_pair(s1, s2)
    g = s1.grid
    res = _correlation_shift(g, s2.u, s1.u, weight=_h1_weight(g))
    d = h1_norm(g, g.translate(s1.u, res.shift) - s2.u, s1.xi - s2.xi)
    # the identity shift is always feasible
    d = min(d, distance_dI(s1, s2))
    return (d, res) if return_shift else d


def _check_pair(s1: SimState, s2: SimState):
    if s1.grid != s2.grid:
        raise ConfigError("states live on different grids")
    if s1.k != s2.k:
        raise ConfigError("states have different component counts")


def extract_h(grid: Grid, u, c: float) -> tuple[np.ndarray, ShiftResult]:
    """Return ``h = u(x + a) - phi(x)`` with ``a`` the L2-optimal soliton position."""
    phi = soliton_profile(SolitonParams(c), 0.0, grid)
    res = optimal_shift(grid, u, phi)
    h = grid.translate(u, -res.shift) - phi
    return h, res


def comoving_perturbation(state: SimState, c: float):
    """``(h, xi, shift)`` with ``u`` and ``xi`` both moved into the soliton's rest frame.

    The cubic coupling ``-u P / 2`` in ``M`` depends on where ``xi`` sits relative
    to the pulse, so ``xi`` must be shifted by the same amount as ``u`` for the
    ``Delta M`` decomposition to hold away from the origin.
    """
    h, res = extract_h(state.grid, state.u, c)
    xi = state.grid.translate(state.xi, -res.shift)
    return h, xi, res


def soliton_state(grid: Grid, c: float, k: int, t: float = 0.0,
                  convention: str = "derived") -> SimState:
    phi = soliton_profile(SolitonParams(c, speed_convention=convention), t, grid)
    return SimState(grid, t, phi, np.zeros((k, grid.n)))


def delta_m_direct(state: SimState, c: float) -> float:
    """``M(u, xi) - M(phi, 0)`` with ``M`` of the sampled soliton on the same grid."""
    ref = soliton_state(state.grid, c, state.k)
    return charge_m(state) - charge_m(ref)


class DeltaMForm(NamedTuple):
    total: float
    second_h: float
    second_xi: float
    third: float


def delta_m_form(grid: Grid, h, xi, c: float) -> DeltaMForm:
    """Quadratic and cubic parts of ``Delta M`` in terms of ``h`` and ``xi``.

    The cubic part is ``int (-h^3/3 - h P / 2) dx``; this sign of the ``h P``
    term is what expanding ``M(phi + h, xi) - M(phi, 0)`` produces.
    """
    phi = soliton_profile(SolitonParams(c), 0.0, grid)
    xi = np.atleast_2d(xi)
    P = body_projection(xi)
    dh = grid.derivative(h, 1)
    dxi = grid.derivative(xi, 1)
    second_h = float(grid.integrate(dh ** 2 + (c - phi) * h ** 2))
    second_xi = float(grid.integrate(np.sum(dxi ** 2, axis=0) + (c - 0.5 * phi) * P))
    third = float(grid.integrate(-h ** 3 / 3.0 - 0.5 * h * P))
    return DeltaMForm(second_h + second_xi + third, second_h, second_xi, third)


class Margins(NamedTuple):
    cubic: float         # 1/2 sup|h| ||(h,xi)||^2 - |delta^3 M|
    second_h: float      # lower bound on the h-quadratic part
    second_xi: float     # delta^2_xi M - (1/4) min(1,c) ||xi||^2
    total: float         # Delta M - (l/4) ||(h,xi)||^2 + b ||(h,xi)||^3


def bound_margins(grid: Grid, h, xi, c: float) -> Margins:
    """Signed slack of each lower/upper bound; negative means the bound fails."""
    xi = np.atleast_2d(xi)
    form = delta_m_form(grid, h, xi, c)
    norm = h1_norm(grid, h, xi)
    sup_h = float(np.max(np.abs(h)))
    l = min(1.0, c)
    b = 1.0 / (2.0 * np.sqrt(2.0)) + 0.4 * c ** 0.25
    dh = grid.derivative(h, 1)
    m21 = 0.5 * sup_h * norm ** 2 - abs(form.third)
    m28 = (form.second_h - 0.25 * float(grid.integrate(dh ** 2 + c * h ** 2))
           + 0.4 * c ** 0.25 * norm ** 3)
    m33 = form.second_xi - 0.25 * l * h1_norm(grid, np.zeros(grid.n), xi) ** 2
    m35 = form.total - 0.25 * l * norm ** 2 + b * norm ** 3
    return Margins(m21, m28, m33, m35)


# -- perturbations ----------------------------------------------------------

@dataclass(frozen=True)
class PerturbationSpec:
    seed: int = 0
    amplitude: float = 0.01
    n_bumps: int = 3
    target: str = "both"
    zero_mean_xi: bool = True

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ConfigError("perturbation amplitude must be > 0")
        if self.n_bumps < 1:
            raise ConfigError("n_bumps must be >= 1")
        if self.target not in TARGETS:
            raise ConfigError(f"target must be one of {TARGETS}")


def _bumps(rng, grid: Grid, count: int) -> np.ndarray:
    L = grid.length
    centers = rng.uniform(-0.25 * L, 0.25 * L, count)
    # widths capped so that every bump is negligible outside the central half
    widths = rng.uniform(0.5, min(3.0, L / 32.0), count)
    signs = rng.choice([-1.0, 1.0], count)
    heights = rng.uniform(0.5, 1.0, count)
    x = grid.x[None, :]
    return np.sum((signs * heights)[:, None]
                  * np.exp(-((x - centers[:, None]) / widths[:, None]) ** 2), axis=0)


def make_perturbation(spec: PerturbationSpec, grid: Grid, k: int = 2):
    """Seeded Gaussian-bump perturbation ``(du, dxi)`` with H1 norm ``spec.amplitude``.

    With ``zero_mean_xi`` each component's integral is removed by subtracting a
    multiple of one broad centred Gaussian, which keeps the support localized.
    """
    rng = np.random.default_rng(spec.seed)
    du = _bumps(rng, grid, spec.n_bumps) if spec.target in ("both", "u") else np.zeros(grid.n)
    if spec.target in ("both", "xi"):
        dxi = np.vstack([_bumps(rng, grid, spec.n_bumps) for _ in range(k)])
    else:
        dxi = np.zeros((k, grid.n))
    if spec.zero_mean_xi and spec.target != "u":
        wide = np.exp(-(grid.x / (grid.length / 16.0)) ** 2)
        dxi = dxi - np.outer(grid.integrate(dxi) / grid.integrate(wide), wide)
    scale = spec.amplitude / h1_norm(grid, du, dxi)
    du, dxi = du * scale, dxi * scale
    if spec.zero_mean_xi and spec.target != "u":
        # integrals are zero up to rounding after rescaling; pin them exactly
        dxi = dxi - (grid.integrate(dxi) / grid.length)[:, None]
    return du, dxi


def match_v(grid: Grid, phi, du, dxi) -> np.ndarray:
    """Return ``s phi + du`` with ``s`` chosen so ``V(s phi + du, dxi) = V(phi, 0)``."""
    a = float(grid.integrate(phi * phi))
    b = float(grid.integrate(phi * du))
    q = float(grid.integrate(du * du)) + float(np.sum(grid.integrate(body_projection(dxi))))
    disc = b * b - a * (q - a)
    if disc < 0:
        raise ConfigError("perturbation too large to match the soliton's V")
    s = (-b + np.sqrt(disc)) / a
    return s * phi + du


# -- experiments ------------------------------------------------------------

STABILITY_COLUMNS = ("t", "d_I", "d_II", "dM_direct", "dM_form", "margin21", "margin28",
                     "margin33", "margin35", "margin_1_6")


@dataclass
class StabilityReport:
    c: float
    seed: int
    amplitude: float
    d_I0: float
    delta_m_budget: float
    rows: list = field(default_factory=list)
    degenerate_samples: list = field(default_factory=list)
    h1_norms: list = field(default_factory=list)
    apriori_bound: float = float("nan")

    def column(self, name: str) -> np.ndarray:
        i = STABILITY_COLUMNS.index(name)
        return np.array([r[i] for r in self.rows])

    def delta_m_drift(self) -> float:
        dm = self.column("dM_direct")
        return float(np.max(np.abs(dm - dm[0])))

    def checks(self, factor: float = 10.0, dm_rtol: float = 1e-6) -> dict[str, bool]:
        """Pass/fail of the empirical stability statements for this run.

        Delta M drift is measured relative to ``|Delta M(0)|`` itself.
        """
        d_ii = self.column("d_II")
        return {
            "orbital": bool(np.all(d_ii <= factor * self.d_I0)),
            "delta_m_conserved": bool(self.delta_m_drift()
                                      <= dm_rtol * abs(self.column("dM_direct")[0])),
            "delta_m_lower_bound": bool(np.all(self.column("margin_1_6") >= 0)),
            "margin35": bool(np.all(self.column("margin35") >= 0)),
            "d_II_le_d_I": bool(np.all(d_ii <= self.column("d_I") * (1 + 1e-12) + 1e-15)),
        }

    def write_csv(self, path) -> None:
        path = Path(path)
        with path.open("w") as fh:
            fh.write(",".join(STABILITY_COLUMNS) + "\n")
            for r in self.rows:
                fh.write(",".join(format_float(v) for v in r) + "\n")


def run_soliton_stability(c: float, pert: PerturbationSpec | None, t_end: float,
                          cfg: IntegratorConfig, grid: Grid, k: int = 2,
                          sample_every: int = 500, enforce_equal_v: bool = True,
                          convention: str = "derived") -> StabilityReport:
    """Simulate a perturbed soliton and record distances, Delta M and bound slacks.

    With ``enforce_equal_v`` the soliton part of the initial ``u`` is rescaled
    so the perturbed state has the soliton's ``V``; the lower bounds on
    ``Delta M`` presuppose that normalization.  ``pert=None`` runs the bare
    soliton.
    """
    ref = soliton_state(grid, c, k)
    phi = ref.u
    if pert is None:
        du, dxi = np.zeros(grid.n), np.zeros((k, grid.n))
    else:
        du, dxi = make_perturbation(pert, grid, k)
    u0 = match_v(grid, phi, du, dxi) if enforce_equal_v else phi + du
    start = SimState(grid, 0.0, u0, dxi)
    m_ref = charge_m(ref)
    l = min(1.0, c)
    d_I0 = distance_dI(start, ref)
    h0, xi0, _ = comoving_perturbation(start, c)
    budget = (max(1.0, c) + d_I0 / (3.0 * np.sqrt(2.0))) * h1_norm(grid, h0, xi0) ** 2
    report = StabilityReport(c, pert.seed if pert else 0, pert.amplitude if pert else 0.0,
                             d_I0, budget)
    report.apriori_bound = apriori_bound(charge_v(start), charge_m(start)).value

    def record(s: SimState):
        comoving = soliton_state(grid, c, k, t=s.t, convention=convention)
        d_I = distance_dI(s, comoving)
        d_II = distance_dII(s, ref)
        h, xi_c, shift = comoving_perturbation(s, c)
        if shift.degenerate:
            report.degenerate_samples.append(s.t)
        dm_direct = charge_m(s) - m_ref
        form = delta_m_form(grid, h, xi_c, c)
        mg = bound_margins(grid, h, xi_c, c)
        report.rows.append((s.t, d_I, d_II, dm_direct, form.total, mg.cubic, mg.second_h,
                            mg.second_xi, mg.total, dm_direct - l * d_II ** 2 / 6.0))
        report.h1_norms.append(h1_norm(grid, s.u, s.xi))

    simulate(start, t_end, cfg, sample_every, callback=record)
    return report


@dataclass
class GroundStateReport:
    amplitude: float
    v0: float
    m0: float
    apriori_bound: float
    bound_violated: bool
    times: list = field(default_factory=list)
    h1_norms: list = field(default_factory=list)

    @property
    def budget_ok(self) -> bool:
        d = self.amplitude
        return bool(self.v0 < d * d and self.m0 < d ** 3 / (2.0 * np.sqrt(2.0)) + d * d)

    @property
    def bound_ok(self) -> bool:
        return bool(np.max(self.h1_norms) <= self.apriori_bound * (1.0 + 1e-6))

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(budget_ok=self.budget_ok, bound_ok=self.bound_ok,
                   max_h1_norm=float(np.max(self.h1_norms)))
        return out


def run_ground_state_stability(pert: PerturbationSpec, t_end: float, cfg: IntegratorConfig,
                               grid: Grid, k: int = 2, sample_every: int = 500
                               ) -> GroundStateReport:
    du, dxi = make_perturbation(pert, grid, k)
    start = SimState(grid, 0.0, du, dxi)
    v0, m0 = charge_v(start), charge_m(start)
    b = apriori_bound(v0, m0)
    rep = GroundStateReport(pert.amplitude, v0, m0, b.value, b.violated)

    def record(s: SimState):
        rep.times.append(s.t)
        rep.h1_norms.append(h1_norm(grid, s.u, s.xi))

    simulate(start, t_end, cfg, sample_every, callback=record)
    return rep


def _ensemble_member(args):
    return run_soliton_stability(*args[0], **args[1])


def run_ensemble(c: float, seeds, base: PerturbationSpec, t_end: float,
                 cfg: IntegratorConfig, grid: Grid, k: int = 2, sample_every: int = 500,
                 jobs: int = 1, **kwargs) -> dict[int, StabilityReport]:
    """Independent seeded runs; results keyed by seed, so merge order is irrelevant."""
    tasks = []
    for seed in seeds:
        spec = PerturbationSpec(seed, base.amplitude, base.n_bumps, base.target, base.zero_mean_xi)
        tasks.append(((c, spec, t_end, cfg, grid, k, sample_every), kwargs))
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            reports = list(ex.map(_ensemble_member, tasks))
    else:
        reports = [_ensemble_member(t) for t in tasks]
    return {r.seed: r for r in reports}


def ensemble_summary(reports: dict[int, StabilityReport], factor: float = 10.0,
                     dm_rtol: float = 1e-6) -> dict:
    per_seed = {}
    for seed in sorted(reports):
        r = reports[seed]
        checks = r.checks(factor, dm_rtol)
        per_seed[str(seed)] = {
            "pass": all(checks.values()),
            "checks": checks,
            "d_I0": r.d_I0,
            "max_d_II": float(np.max(r.column("d_II"))),
            "delta_m0": float(r.column("dM_direct")[0]),
            "delta_m_drift": r.delta_m_drift(),
            "min_margin_1_6": float(np.min(r.column("margin_1_6"))),
            "min_margin35": float(np.min(r.column("margin35"))),
            "degenerate_samples": r.degenerate_samples,
        }
    return {"all_pass": all(v["pass"] for v in per_seed.values()), "seeds": per_seed}


def dump_summary(summary: dict, path) -> None:
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
