"""Differential geometry of a star-shaped surface r(theta, phi).

The surface point is ``x = r (sin t cos p, sin t sin p, cos t)`` and the
normal is taken along ``x_theta x x_phi`` (outward).  With the Legendre
phase convention used in :mod:`shvesicle.shbasis` and the second-form
coefficients below, a sphere of radius ``a`` has ``H = -1/a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import SphereGrid, integrate
from .shbasis import n_modes


class GeometryError(ValueError):
    """Surface cannot be represented on the grid (r <= 0 or singular metric)."""

    def __init__(self, message: str, nodes=None):
        super().__init__(message)
        self.nodes = [] if nodes is None else [tuple(int(v) for v in x) for x in nodes]


def truncation_degree(n_coeffs: int) -> int:
    N = math.isqrt(n_coeffs) - 1
    if n_modes(N) != n_coeffs:
        raise ValueError(f"coefficient count {n_coeffs} is not a perfect square")
    return N


def sphere_coeffs(N: int, radius: float = 1.0) -> np.ndarray:
    a = np.zeros(n_modes(N))
    a[0] = radius * math.sqrt(4.0 * math.pi)
    return a


@dataclass(frozen=True)
class RadiusField:
    r: np.ndarray
    r_theta: np.ndarray
    r_phi: np.ndarray
    r_thetatheta: np.ndarray
    r_phiphi: np.ndarray
    r_thetaphi: np.ndarray

    FIELDS = ("r", "r_theta", "r_phi", "r_thetatheta", "r_phiphi", "r_thetaphi")

    def as_tuple(self):
        return tuple(getattr(self, f) for f in self.FIELDS)


@dataclass(frozen=True)
class GeometryField:
    omega: np.ndarray
    Eff: np.ndarray
    F: np.ndarray
    G: np.ndarray
    L: np.ndarray
    M: np.ndarray
    Nn: np.ndarray
    R: np.ndarray
    H: np.ndarray
    K: np.ndarray
    # omega / sin(theta), evaluated without dividing by a small sine
    omega_sin: np.ndarray


def eval_radius_field(coeffs, grid: SphereGrid, check: bool = True) -> RadiusField:
    """Sum basis samples weighted by the coefficients, on every grid node."""
    coeffs = np.asarray(coeffs, dtype=float)
    N = truncation_degree(coeffs.size)
    stacked = grid.basis(N).stacked()
    fields = np.tensordot(coeffs, stacked, axes=([0], [1]))
    rf = RadiusField(*fields)
    if check:
        bad = np.argwhere(rf.r <= 0.0)
        if bad.size:
            raise GeometryError(f"radius is nonpositive at {len(bad)} node(s)", bad)
    return rf


def radius_field_from_arrays(r, r_theta, r_phi=None, r_thetatheta=None, r_phiphi=None, r_thetaphi=None):
    """Build a radius field from sampled arrays; missing derivatives are zero."""
    r = np.asarray(r, dtype=float)
    z = np.zeros_like(r)

    def arr(x):
        return z if x is None else np.broadcast_to(np.asarray(x, dtype=float), r.shape)

    return RadiusField(r, arr(r_theta), arr(r_phi), arr(r_thetatheta), arr(r_phiphi), arr(r_thetaphi))


def _warp(r, rt, rp, s):
    return rt * rt + r * r, rt * rp, rp * rp + r * r * s * s


def _cross_norm(r, rt, rp, s):
    root = np.sqrt(rp * rp + (rt * rt + r * r) * s * s)
    return r * root


def _shape_numerators(r, rt, rp, rtt, rpp, rtp, s, c):
    Lnum = -2 * r * rt * rt * s + r * r * rtt * s - r**3 * s
    # x_thetaphi . (x_theta x x_phi); the opposite sign breaks H off-axis
    Mnum = r * r * rtp * s - 2 * r * rp * rt * s - r * r * rp * c
    Nnum = -(r**3) * s**3 + r * r * rpp * s + r * r * rt * c * s * s - 2 * r * rp * rp * s
    return Lnum, Mnum, Nnum


def eval_geometry_field(rf: RadiusField, grid: SphereGrid, check: bool = True) -> GeometryField:
    r, rt, rp, rtt, rpp, rtp = rf.as_tuple()
    s = grid.sin_theta
    c = grid.cos_theta
    E, F, G = _warp(r, rt, rp, s)
    R = _cross_norm(r, rt, rp, s)
    Lnum, Mnum, Nnum = _shape_numerators(r, rt, rp, rtt, rpp, rtp, s, c)
    L, M, Nn = Lnum / R, Mnum / R, Nnum / R
    det = E * G - F * F
    if check:
        bad = np.argwhere(~(det > 0.0))
        if bad.size:
            raise GeometryError(f"degenerate metric at {len(bad)} node(s)", bad)
    H = (E * Nn + G * L - 2 * F * M) / (2 * det)
    K = (L * Nn - M * M) / det
    omega_sin = r * np.sqrt(rp * rp / (s * s) + rt * rt + r * r)
    return GeometryField(omega=R, Eff=E, F=F, G=G, L=L, M=M, Nn=Nn, R=R, H=H, K=K, omega_sin=omega_sin)


def mean_curvature_closed_form(rf: RadiusField, grid: SphereGrid) -> np.ndarray:
    """Mean curvature written directly in r and its partials (no form coefficients)."""
    r, rt, rp, rtt, rpp, rtp = rf.as_tuple()
    s = grid.sin_theta
    c = grid.cos_theta
    num = (
        3 * rt**2 * r**2 * s**3
        - rt**2 * r * rpp * s
        - rt**3 * r * c * s**2
        + 2 * r**4 * s**3
        - r**3 * rpp * s
        - r**3 * rt * c * s**2
        + 3 * r**2 * rp**2 * s
        - rp**2 * r * rtt * s
        - r**3 * rtt * s**3
        + 2 * rp * rt * r * rtp * s
        - 2 * rp**2 * rt * r * c
    )
    den = -(r**3) * s**2 - r * rt**2 * s**2 - r * rp**2
    R = _cross_norm(r, rt, rp, s)
    return 0.5 * num / (R * den)


def surface_area(gf: GeometryField, grid: SphereGrid) -> float:
    return float(integrate(grid, gf.omega_sin))


def enclosed_volume(rf: RadiusField, grid: SphereGrid) -> float:
    return float(integrate(grid, rf.r**3)) / 3.0


def reduced_volume(s_area: float, volume: float) -> float:
    return 6.0 * math.sqrt(math.pi) * volume / s_area**1.5


def total_gaussian_curvature(gf: GeometryField, grid: SphereGrid) -> float:
    return float(integrate(grid, gf.K * gf.omega_sin))


def cartesian_points(rf: RadiusField, grid: SphereGrid) -> np.ndarray:
    """Node positions, shape ``(n_t, n_p, 3)``, z along the polar axis."""
    th, ph = grid.mesh()
    r = rf.r
    return np.stack([r * np.sin(th) * np.cos(ph), r * np.sin(th) * np.sin(ph), r * np.cos(th)], axis=-1)
