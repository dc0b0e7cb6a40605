"""Run configuration: nested JSON sections with defaults and validation."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .dynamics import SCHEMES, IntegratorConfig
from .errors import ConfigError
from .grid import Grid, default_length
from .soliton import CONVENTIONS, SolitonParams
from .stability import TARGETS, PerturbationSpec


@dataclass(frozen=True)
class GridSection:
    n: int = 1024
    L: float | None = None  # None -> 80 / sqrt(min(1, c))


@dataclass(frozen=True)
class CliffordSection:
    k: int = 2


@dataclass(frozen=True)
class SolitonSection:
    c: float = 1.0
    a: float = 0.0
    speed_convention: str = "derived"


@dataclass(frozen=True)
class IntegratorSection:
    dt: float = 1e-3
    scheme: str = "if-rk4"
    dealias: bool = True
    t_end: float = 10.0
    sample_every: int = 500


@dataclass(frozen=True)
class PerturbationSection:
    seed: int = 0
    amplitude: float = 0.01  # 0 disables the perturbation
    n_bumps: int = 3
    target: str = "both"
    zero_mean_xi: bool = True


@dataclass(frozen=True)
class StabilitySection:
    factor: float = 10.0
    dm_rtol: float = 1e-6
    enforce_equal_v: bool = True


@dataclass(frozen=True)
class OutputSection:
    directory: str = "output"
    emit_snapshots: bool = False


@dataclass(frozen=True)
class RunConfig:
    grid: GridSection = field(default_factory=GridSection)
    clifford: CliffordSection = field(default_factory=CliffordSection)
    soliton: SolitonSection = field(default_factory=SolitonSection)
    integrator: IntegratorSection = field(default_factory=IntegratorSection)
    perturbation: PerturbationSection = field(default_factory=PerturbationSection)
    stability: StabilitySection = field(default_factory=StabilitySection)
    output: OutputSection = field(default_factory=OutputSection)

    # -- derived objects ---------------------------------------------------

    @property
    def length(self) -> float:
        return self.grid.L if self.grid.L is not None else default_length(self.soliton.c)

    def make_grid(self) -> Grid:
        return Grid(self.grid.n, self.length)

    def soliton_params(self) -> SolitonParams:
        s = self.soliton
        return SolitonParams(s.c, s.a, s.speed_convention)

    def integrator_config(self) -> IntegratorConfig:
        i = self.integrator
        return IntegratorConfig(i.dt, i.scheme, i.dealias)

    def perturbation_spec(self, seed: int | None = None) -> PerturbationSpec | None:
        p = self.perturbation
        if p.amplitude == 0:
            return None
        return PerturbationSpec(p.seed if seed is None else seed, p.amplitude, p.n_bumps,
                                p.target, p.zero_mean_xi)

    def output_dir(self) -> Path:
        return Path(os.environ.get("SKDV_OUTPUT_DIR") or self.output.directory)


_SECTION_TYPES = {
    "grid": GridSection, "clifford": CliffordSection, "soliton": SolitonSection,
    "integrator": IntegratorSection, "perturbation": PerturbationSection,
    "stability": StabilitySection, "output": OutputSection,
}


def _build_section(name: str, cls, values) -> object:
    if not isinstance(values, dict):
        raise ConfigError(f"section '{name}' must be an object")
    known = {f.name for f in fields(cls)}
    for key in values:
        if key not in known:
            raise ConfigError(f"unknown key '{name}.{key}'")
    return replace(cls(), **values)


def parse_config(text: str) -> RunConfig:
    """Parse a JSON document into a validated ``RunConfig``; missing keys take defaults."""
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    sections = {}
    for key, values in doc.items():
        if key not in _SECTION_TYPES:
            raise ConfigError(f"unknown key '{key}'")
        sections[key] = _build_section(key, _SECTION_TYPES[key], values)
    cfg = RunConfig(**sections)
    validate(cfg)
    return cfg


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


def _require(cond: bool, name: str, constraint: str) -> None:
    if not cond:
        raise ConfigError(f"{name} {constraint}")


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def validate(cfg: RunConfig) -> None:
    g, s, i, p = cfg.grid, cfg.soliton, cfg.integrator, cfg.perturbation
    _require(_is_int(g.n), "grid.n", "must be an integer")
    _require(g.n >= 16 and (g.n & (g.n - 1)) == 0, "n", "must be a power of two")
    _require(g.L is None or (_is_num(g.L) and g.L > 0), "grid.L", "must be > 0")
    _require(_is_int(cfg.clifford.k) and cfg.clifford.k >= 1, "clifford.k", "must be an integer >= 1")
    _require(_is_num(s.c) and s.c > 0, "soliton.c", "must be > 0")
    _require(_is_num(s.a), "soliton.a", "must be a number")
    _require(s.speed_convention in CONVENTIONS, "soliton.speed_convention",
             f"must be one of {CONVENTIONS}")
    _require(_is_num(i.dt) and i.dt > 0, "integrator.dt", "must be > 0")
    _require(i.scheme in SCHEMES, "integrator.scheme", f"must be one of {SCHEMES}")
    _require(_is_num(i.t_end) and i.t_end > 0, "integrator.t_end", "must be > 0")
    _require(_is_int(i.sample_every) and i.sample_every >= 1, "integrator.sample_every",
             "must be an integer >= 1")
    _require(isinstance(i.dealias, bool), "integrator.dealias", "must be a boolean")
    _require(_is_int(p.seed), "perturbation.seed", "must be an integer")
    _require(_is_num(p.amplitude) and p.amplitude >= 0, "perturbation.amplitude", "must be >= 0")
    _require(_is_int(p.n_bumps) and p.n_bumps >= 1, "perturbation.n_bumps", "must be >= 1")
    _require(p.target in TARGETS, "perturbation.target", f"must be one of {TARGETS}")
    _require(isinstance(p.zero_mean_xi, bool), "perturbation.zero_mean_xi", "must be a boolean")
    _require(_is_num(cfg.stability.factor) and cfg.stability.factor > 0, "stability.factor",
             "must be > 0")
    _require(isinstance(cfg.output.emit_snapshots, bool), "output.emit_snapshots",
             "must be a boolean")
    # advective step bound against the unperturbed soliton amplitude
    grid = cfg.make_grid()
    limit = 0.5 * grid.dx / max(1.0, 3.0 * s.c)
    _require(i.dt <= limit, "integrator.dt", f"must be <= 0.5 dx / max(1, 3c) = {limit:.4g}")
