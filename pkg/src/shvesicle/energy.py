"""Bending energy with area/volume penalties, and its exact coefficient gradient.

All integrals of the form ``int f dtheta dphi`` are evaluated as solid-angle
integrals of ``f / sin(theta)``; the division is done analytically
(``omega_sin``) so nothing is divided by a small sine on the grid.

The mean-curvature variation is assembled by differentiating
``H = (E N + G L - 2 F M) / (2 (E G - F^2))`` through the first and second
form coefficients.  Because every form coefficient is a function of the six
pointwise quantities ``(r, r_t, r_p, r_tt, r_pp, r_tp)`` only, the gradient
is obtained by contracting the six pointwise partials against the basis
tables instead of looping over modes.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .geometry import (
    GeometryField,
    RadiusField,
    enclosed_volume,
    eval_geometry_field,
    eval_radius_field,
    reduced_volume,
    surface_area,
    truncation_degree,
)
from .quadrature import SphereGrid, integrate
from .shbasis import index_to_nm


@dataclass(frozen=True)
class EnergyParams:
    kappa_c: float = 1.0
    kappa_g: float = 0.0
    c0: float = 0.0
    k_s: float = 1.0e4
    k_v: float = 1.0e4
    s_bar: float = 4.0 * math.pi
    v_bar: float = 4.0 * math.pi / 3.0

    def __post_init__(self):
        if not self.kappa_c > 0:
            raise ValueError("kappa_c must be positive")
        if self.k_s < 0 or self.k_v < 0:
            raise ValueError("penalty weights must be nonnegative")

    @property
    def e0(self) -> float:
        """Bending energy of a sphere with c0 = 0."""
        return 8.0 * math.pi * self.kappa_c


@dataclass(frozen=True)
class EnergyReport:
    e_bend: float
    e_total: float
    s_area: float
    volume: float
    reduced_v: float
    grad_norm: float = float("nan")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Variation:
    """First-order change of the pointwise quantities along one direction."""

    dr: np.ndarray
    dr_theta: np.ndarray
    dr_phi: np.ndarray
    dr_thetatheta: np.ndarray
    dr_phiphi: np.ndarray
    dr_thetaphi: np.ndarray
    domega: np.ndarray
    domega_sin: np.ndarray


def _first_order(q, dq, s, c):
    """Directional derivatives of (omega, omega/sin, H) at base point q along dq.

    ``q`` and ``dq`` are 6-tuples ordered like :attr:`RadiusField.FIELDS`;
    entries of ``dq`` may carry extra leading axes (e.g. one per mode).
    """
    r, rt, rp, rtt, rpp, rtp = q
    dr, drt, drp, drtt, drpp, drtp = dq
    s2 = s * s

    W = rp * rp + (rt * rt + r * r) * s2
    sqW = np.sqrt(W)
    R = r * sqW
    dW = 2 * rp * drp + 2 * (rt * drt + r * dr) * s2
    dR = dr * sqW + r * dW / (2 * sqW)

    Ws = rp * rp / s2 + rt * rt + r * r
    sqWs = np.sqrt(Ws)
    domega_sin = dr * sqWs + r * (rp * drp / s2 + rt * drt + r * dr) / sqWs

    E = rt * rt + r * r
    F = rt * rp
    G = rp * rp + r * r * s2
    dE = 2 * rt * drt + 2 * r * dr
    dF = rt * drp + rp * drt
    dG = 2 * rp * drp + 2 * r * dr * s2

    Lnum = -2 * r * rt * rt * s + r * r * rtt * s - r**3 * s
    Mnum = r * r * rtp * s - 2 * r * rp * rt * s - r * r * rp * c
    Nnum = -(r**3) * s**3 + r * r * rpp * s + r * r * rt * c * s2 - 2 * r * rp * rp * s
    dLnum = s * (-2 * dr * rt * rt - 4 * r * rt * drt + 2 * r * dr * rtt + r * r * drtt - 3 * r * r * dr)
    dMnum = (
        s * (2 * r * dr * rtp + r * r * drtp - 2 * dr * rp * rt - 2 * r * drp * rt - 2 * r * rp * drt)
        - c * (2 * r * dr * rp + r * r * drp)
    )
    dNnum = (
        -3 * r * r * dr * s**3
        + s * (2 * r * dr * rpp + r * r * drpp)
        + c * s2 * (2 * r * dr * rt + r * r * drt)
        - 2 * s * (dr * rp * rp + 2 * r * rp * drp)
    )
    L, M, N = Lnum / R, Mnum / R, Nnum / R
    dL = (dLnum - L * dR) / R
    dM = (dMnum - M * dR) / R
    dN = (dNnum - N * dR) / R

    det = E * G - F * F
    num = E * N + G * L - 2 * F * M
    dnum = dE * N + E * dN + dG * L + G * dL - 2 * (dF * M + F * dM)
    ddet = dE * G + E * dG - 2 * F * dF
    dH = dnum / (2 * det) - num * ddet / (2 * det * det)
    return dR, domega_sin, dH


def _mode_dq(mode, grid: SphereGrid):
    if isinstance(mode, tuple):
        n, m = mode
        from .shbasis import nm_to_index

        i = nm_to_index(n, m)
    else:
        i = int(mode)
        n, _ = index_to_nm(i)
    tab = grid.basis(n)
    return tuple(getattr(tab, f)[i] for f in tab.FIELDS)


def variation_fields(mode, grid: SphereGrid, rf: RadiusField) -> Variation:
    """Per-node variations of r, its partials, and omega along one coefficient."""
    dq = _mode_dq(mode, grid)
    domega, domega_sin, _ = _first_order(rf.as_tuple(), dq, grid.sin_theta, grid.cos_theta)
    return Variation(*dq, domega=domega, domega_sin=domega_sin)


def mean_curvature_variation(mode, rf: RadiusField, gf: GeometryField | None, grid: SphereGrid) -> np.ndarray:
    """dH/da_i at every node.  ``gf`` is accepted for API symmetry and unused."""
    dq = _mode_dq(mode, grid)
    return _first_order(rf.as_tuple(), dq, grid.sin_theta, grid.cos_theta)[2]


def pointwise_partials(rf: RadiusField, grid: SphereGrid):
    """Partials of omega/sin and H with respect to each of the six r-quantities.

    Returns two arrays of shape ``(6, n_t, n_p)``.
    """
    q = rf.as_tuple()
    zero = np.zeros_like(rf.r)
    one = np.ones_like(rf.r)
    dws, dh = [], []
    for k in range(6):
        dq = tuple(one if j == k else zero for j in range(6))
        _, a, b = _first_order(q, dq, grid.sin_theta, grid.cos_theta)
        dws.append(a)
        dh.append(b)
    return np.stack(dws), np.stack(dh)


def bending_energy(gf: GeometryField, grid: SphereGrid, params: EnergyParams) -> float:
    curv = 2.0 * gf.H - params.c0
    e = 0.5 * params.kappa_c * float(integrate(grid, curv * curv * gf.omega_sin))
    if params.kappa_g != 0.0:
        # genus-0 Gauss-Bonnet constant
        e += 4.0 * math.pi * params.kappa_g
    return e


class _State:
    """Geometry and scalar terms at one coefficient vector."""

    def __init__(self, coeffs, grid: SphereGrid, params: EnergyParams):
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.N = truncation_degree(self.coeffs.size)
        self.rf = eval_radius_field(self.coeffs, grid)
        self.gf = eval_geometry_field(self.rf, grid)
        self.e_bend = bending_energy(self.gf, grid, params)
        self.s_area = surface_area(self.gf, grid)
        self.volume = enclosed_volume(self.rf, grid)
        ds = self.s_area - params.s_bar
        dv = self.volume - params.v_bar
        self.e_total = self.e_bend + 0.5 * params.k_s * ds * ds + 0.5 * params.k_v * dv * dv

    def gradient(self, grid: SphereGrid, params: EnergyParams) -> np.ndarray:
        dws, dh = pointwise_partials(self.rf, grid)
        curv = 2.0 * self.gf.H - params.c0
        kc = params.kappa_c
        ds = self.s_area - params.s_bar
        dv = self.volume - params.v_bar
        coef = 2.0 * kc * curv * self.gf.omega_sin * dh + (0.5 * kc * curv * curv + params.k_s * ds) * dws
        coef[0] += params.k_v * dv * self.rf.r**2
        coef *= grid.weights
        stacked = grid.basis(self.N).stacked()
        return np.einsum("kmij,kij->m", stacked, coef)

    def report(self, grad=None) -> EnergyReport:
        gn = float("nan") if grad is None else float(np.linalg.norm(grad))
        return EnergyReport(
            e_bend=self.e_bend,
            e_total=self.e_total,
            s_area=self.s_area,
            volume=self.volume,
            reduced_v=reduced_volume(self.s_area, self.volume),
            grad_norm=gn,
        )


def total_energy(coeffs, grid: SphereGrid, params: EnergyParams, gradient: bool = False) -> EnergyReport:
    st = _State(coeffs, grid, params)
    return st.report(st.gradient(grid, params) if gradient else None)


def total_energy_value(coeffs, grid: SphereGrid, params: EnergyParams) -> float:
    return _State(coeffs, grid, params).e_total


def energy_and_gradient(coeffs, grid: SphereGrid, params: EnergyParams) -> tuple[float, np.ndarray]:
    st = _State(coeffs, grid, params)
    return st.e_total, st.gradient(grid, params)


def energy_gradient(coeffs, grid: SphereGrid, params: EnergyParams) -> np.ndarray:
    return energy_and_gradient(coeffs, grid, params)[1]
