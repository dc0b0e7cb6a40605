"""Numerical lab for a supersymmetry-broken KdV system with Clifford-valued partner fields."""
from .charges import apriori_bound, charge_h1, charge_h_half, charge_m, charge_report, charge_v
from .dynamics import IntegratorConfig, rhs, simulate, step
from .errors import ConfigError, MeasurementError, NumericError, SKdVError
from .fields import SimState, body_projection, h1_norm, sup_abs
from .grid import Grid, make_grid
from .soliton import SolitonParams, measure_speed, soliton_profile, traveling_wave_residual
from .spectrum import build_operator, eigen_pairs, project_out_ground, rayleigh

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "Grid", "IntegratorConfig", "MeasurementError", "NumericError", "SKdVError",
    "SimState", "SolitonParams", "apriori_bound", "body_projection", "build_operator",
    "charge_h1", "charge_h_half", "charge_m", "charge_report", "charge_v", "eigen_pairs",
    "h1_norm", "make_grid", "measure_speed", "project_out_ground", "rayleigh", "rhs", "simulate",
    "soliton_profile", "step", "sup_abs", "traveling_wave_residual",
]
