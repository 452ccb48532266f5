"""Numerical laboratory for planar viscous shocks on a channel R x T^d.

Modules:
    entropy_flux   fluxes, entropies and relative quantities
    shock_profile  traveling-wave profile, weight and z coordinate
    grid           channel discretisation, quadrature and shifts
    solver         moving-frame PDE solver coupled to the shift ODE
    functionals    dissipation functionals, shift velocity, truncation
    inequalities   numerical checks of the supporting inequalities
    experiments    configs, experiment registry, fits and reports
"""

from .entropy_flux import EntropySystem, make_entropy, make_flux, make_system
from .grid import ChannelField, ChannelGrid
from .shock_profile import ShockProfile, Weight, build_weight, rankine_hugoniot, solve_profile
from .solver import SolverConfig, simulate

__version__ = "0.1.0"

__all__ = [
    "ChannelField",
    "ChannelGrid",
    "EntropySystem",
    "ShockProfile",
    "SolverConfig",
    "Weight",
    "build_weight",
    "make_entropy",
    "make_flux",
    "make_system",
    "rankine_hugoniot",
    "simulate",
    "solve_profile",
]
