"""Equilibrium vesicle shapes from a surface-harmonic radius expansion."""

from __future__ import annotations

from .energy import EnergyParams, EnergyReport, energy_gradient, total_energy
from .geometry import GeometryError, eval_geometry_field, eval_radius_field, sphere_coeffs
from .optimize import NcgConfig, NcgResult, fd_gradient_check, ncg_minimize
from .quadrature import SphereGrid, build_grid, integrate
from .reconstruct import project_coefficients, rbc_target, reconstruction_errors
from .shbasis import index_to_nm, nm_to_index

__version__ = "0.1.0"

__all__ = [
    "EnergyParams",
    "EnergyReport",
    "GeometryError",
    "NcgConfig",
    "NcgResult",
    "SphereGrid",
    "build_grid",
    "energy_gradient",
    "eval_geometry_field",
    "eval_radius_field",
    "fd_gradient_check",
    "index_to_nm",
    "integrate",
    "ncg_minimize",
    "nm_to_index",
    "project_coefficients",
    "rbc_target",
    "reconstruction_errors",
    "sphere_coeffs",
    "total_energy",
]
