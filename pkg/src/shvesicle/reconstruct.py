"""Target surfaces, least-squares projection onto the harmonic basis, and truncation errors."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .energy import EnergyParams, bending_energy
from .geometry import (
    RadiusField,
    enclosed_volume,
    eval_geometry_field,
    eval_radius_field,
    radius_field_from_arrays,
    surface_area,
    truncation_degree,
)
from .quadrature import SphereGrid, build_grid
from .shbasis import n_modes

DENSE_N_T = 200
RECON_N_T = 32


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class RbcShapeParams:
    """Biconcave profile coefficients (micrometres)."""

    r0: float
    c0: float
    c2: float
    c4: float

    def blend(self, other: "RbcShapeParams", weight: float) -> "RbcShapeParams":
        """Coefficient-wise convex combination, ``weight`` on ``other``."""
        w = float(weight)
        if not 0.0 <= w <= 1.0:
            raise ValueError("blend weight must be in [0, 1]")
        mix = lambda a, b: (1.0 - w) * a + w * b  # noqa: E731
        return RbcShapeParams(
            mix(self.r0, other.r0), mix(self.c0, other.c0), mix(self.c2, other.c2), mix(self.c4, other.c4)
        )


# average shapes at tonicity 300 and 217 mOsm
RBC_300 = RbcShapeParams(r0=3.91, c0=0.81, c2=7.83, c4=-4.39)
RBC_217 = RbcShapeParams(r0=3.80, c0=2.10, c2=7.58, c4=-5.59)


def rbc_blend(weight_217: float) -> RbcShapeParams:
    return RBC_300.blend(RBC_217, weight_217)


RBC_FORMS = ("smooth", "printed")


def _rbc_poly(p: RbcShapeParams) -> np.polynomial.Polynomial:
    """(0.5 / r0) (c0 + c2 x^2 + c4 x^4)."""
    return (0.5 / p.r0) * np.polynomial.Polynomial([p.c0, 0.0, p.c2, 0.0, p.c4])


def _check_form(form: str) -> None:
    if form not in RBC_FORMS:
        raise ValueError(f"form must be one of {RBC_FORMS}, got {form!r}")


def rbc_profile(params: RbcShapeParams, x, form: str = "smooth"):
    """Upper half-height h(x) of the biconcave profile, x in [-1, 1].

    ``form="smooth"`` multiplies the polynomial by ``sqrt(1 - x^2)``, which
    gives a vertical tangent at the rim.  ``form="printed"`` multiplies by
    ``(1 - x^2)`` instead, which leaves a crease at x = +-1.
    """
    _check_form(form)
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0):
        raise ValueError("x must lie in [-1, 1]")
    q = _rbc_poly(params)(x)
    val = q * (np.sqrt(1.0 - x * x) if form == "smooth" else 1.0 - x * x)
    return float(val) if val.ndim == 0 else val


@dataclass(frozen=True)
class AxisymmetricProfile:
    """Upper half of a meridian curve z = h(x), 0 <= x <= x_max, h(x_max) = 0.

    The closed surface is this curve mirrored to z = -h(x) and revolved about
    the z (polar) axis.
    """

    height: Callable
    dheight: Callable
    d2height: Callable
    x_max: float = 1.0

    @classmethod
    def from_polynomial(cls, poly: np.polynomial.Polynomial, x_max: float = 1.0) -> "AxisymmetricProfile":
        d1 = poly.deriv()
        return cls(poly, d1, d1.deriv(), x_max)

    @classmethod
    def rbc(cls, params: RbcShapeParams, form: str = "smooth") -> "AxisymmetricProfile":
        _check_form(form)
        q = _rbc_poly(params)
        if form == "printed":
            return cls.from_polynomial(q * np.polynomial.Polynomial([1.0, 0.0, -1.0]))
        dq = q.deriv()
        d2q = dq.deriv()

        def h(x):
            return q(x) * np.sqrt(np.clip(1.0 - x * x, 0.0, None))

        def dh(x):
            s = np.sqrt(1.0 - x * x)
            return dq(x) * s - q(x) * x / s

        def d2h(x):
            s = np.sqrt(1.0 - x * x)
            return d2q(x) * s - 2.0 * dq(x) * x / s - q(x) / s**3

        return cls(h, dh, d2h, 1.0)

    @classmethod
    def ellipse(cls, a: float, c: float) -> "AxisymmetricProfile":
        """Spheroid with equatorial semi-axis ``a`` and polar semi-axis ``c``."""

        def h(x):
            return c * np.sqrt(np.clip(1.0 - (x / a) ** 2, 0.0, None))

        def dh(x):
            return -c * x / (a * a * np.sqrt(1.0 - (x / a) ** 2))

        def d2h(x):
            return -c / (a * a) * (1.0 - (x / a) ** 2) ** -1.5

        return cls(h, dh, d2h, a)

    @classmethod
    def circle(cls, radius: float) -> "AxisymmetricProfile":
        return cls.ellipse(radius, radius)

    @classmethod
    def from_samples(cls, x, h) -> "AxisymmetricProfile":
        x = np.asarray(x, dtype=float)
        h = np.asarray(h, dtype=float)
        if x.ndim != 1 or x.shape != h.shape:
            raise ProfileError("x and h must be 1-D arrays of equal length")
        if np.any(np.diff(x) <= 0):
            raise ProfileError("x must be strictly increasing")
        if x[0] < -1.0 or x[-1] > 1.0:
            raise ProfileError("x must lie in [-1, 1]")
        keep = x >= 0.0
        if keep.sum() < 4:
            raise ProfileError("need at least 4 samples with x >= 0")
        xs, hs = x[keep], np.abs(h[keep])
        spline = CubicSpline(xs, hs)
        return cls(spline, spline.derivative(1), spline.derivative(2), float(xs[-1]))


def read_profile_csv(path) -> AxisymmetricProfile:
    """Read a half-profile from a CSV file with header ``x,h``."""
    xs, hs = [], []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["x", "h"]:
            raise ProfileError(f"{path}: expected header 'x,h'")
        for row in reader:
            xs.append(float(row["x"]))
            hs.append(float(row["h"]))
    return AxisymmetricProfile.from_samples(xs, hs)


def _slopes(profile: AxisymmetricProfile, x: float) -> tuple[float, float]:
    with np.errstate(divide="ignore", invalid="ignore"):
        try:
            return float(profile.dheight(np.float64(x))), float(profile.d2height(np.float64(x)))
        except ZeroDivisionError:
            return math.inf, math.inf


def _upper_radius(profile: AxisymmetricProfile, theta: float, tol: float) -> tuple[float, float, float]:
    """r, dr/dtheta, d2r/dtheta2 for 0 < theta <= pi/2."""
    s, c = math.sin(theta), math.cos(theta)
    h = profile.height

    def f(x):
        return x * c - float(h(x)) * s

    xs = np.linspace(0.0, profile.x_max, 257)
    vals = xs * c - np.asarray(h(xs), dtype=float) * s
    changes = np.count_nonzero(np.diff(np.sign(vals)) != 0)
    if changes > 1:
        raise ProfileError(f"profile is not star-shaped about the origin (theta={theta:.6g})")
    if abs(c) < 1e-15:
        x = profile.x_max
    else:
        x = brentq(f, 0.0, profile.x_max, xtol=tol, rtol=4 * np.finfo(float).eps)
    z = float(h(x))
    r = math.hypot(x, z)
    # a vertical tangent at the rim makes h' infinite there; step just inside
    xd = x
    hp, hpp = _slopes(profile, xd)
    while not (math.isfinite(hp) and math.isfinite(hpp)) and xd > 0.0:
        xd -= 1e-10 * profile.x_max
        hp, hpp = _slopes(profile, xd)
    # unit tangent (1, h')/|.| and signed curvature, both bounded as |h'| grows
    if abs(hp) <= 1.0:
        g = math.sqrt(1.0 + hp * hp)
        tx, tz, kappa = 1.0 / g, hp / g, hpp / g**3
    else:
        g = math.sqrt(1.0 + 1.0 / (hp * hp))
        tx, tz = 1.0 / (abs(hp) * g), math.copysign(1.0 / g, hp)
        kappa = hpp / abs(hp) ** 3 / g**3
    if xd != x:
        tx, tz = 0.0, math.copysign(1.0, hp)
    # ray u = (sin, cos) in the (x, z) plane; r(theta) u(theta) stays on the curve
    cross = lambda a0, a1, b0, b1: a0 * b1 - a1 * b0  # noqa: E731
    D = cross(s, c, tx, tz)
    C1 = cross(c, -s, tx, tz)
    rp = -r * C1 / D
    lam = (rp * s + r * c) * tx + (rp * c - r * s) * tz
    dtx, dtz = -kappa * lam * tz, kappa * lam * tx
    rpp = -(2.0 * rp * C1 + rp * cross(s, c, dtx, dtz) - r * D + r * cross(c, -s, dtx, dtz)) / D
    return r, rp, rpp


def profile_to_radius(profile: AxisymmetricProfile, theta, tol: float = 1e-12, derivatives: bool = False):
    """Distance from the origin to the revolved profile along polar angle theta.

    With ``derivatives=True`` returns ``(r, r_theta, r_thetatheta)``.
    """
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    out = np.empty((3, th.size))
    for j, t in enumerate(th):
        if not 0.0 < t < math.pi:
            raise ValueError("theta must lie strictly inside (0, pi)")
        if t <= 0.5 * math.pi:
            out[:, j] = _upper_radius(profile, t, tol)
        else:
            r, rp, rpp = _upper_radius(profile, math.pi - t, tol)
            out[:, j] = (r, -rp, rpp)
    out = out.reshape((3,) + np.shape(theta))
    if derivatives:
        return out[0], out[1], out[2]
    return out[0]


class TargetSurface:
    """A star-shaped surface that can be sampled on a grid."""

    tag = "target"

    def radius(self, grid: SphereGrid) -> np.ndarray:
        return self.radius_field(grid).r

    def radius_field(self, grid: SphereGrid) -> RadiusField:
        raise NotImplementedError


class AxisymmetricTarget(TargetSurface):
    def __init__(self, profile: AxisymmetricProfile, tag: str = "profile"):
        self.profile = profile
        self.tag = tag

    def radius(self, grid: SphereGrid) -> np.ndarray:
        r = profile_to_radius(self.profile, grid.thetas)
        return np.broadcast_to(r[:, None], grid.shape).copy()

    def radius_field(self, grid: SphereGrid) -> RadiusField:
        r, rt, rtt = profile_to_radius(self.profile, grid.thetas, derivatives=True)
        shape = grid.shape
        bc = lambda v: np.broadcast_to(v[:, None], shape).copy()  # noqa: E731
        return radius_field_from_arrays(bc(r), bc(rt), r_thetatheta=bc(rtt))


class CoefficientTarget(TargetSurface):
    def __init__(self, coeffs, tag: str = "harmonic"):
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.tag = tag

    def radius(self, grid: SphereGrid) -> np.ndarray:
        return _radius_values(self.coeffs, grid)

    def radius_field(self, grid: SphereGrid) -> RadiusField:
        return eval_radius_field(self.coeffs, grid)


def rbc_target(weight_217: float, form: str = "smooth") -> AxisymmetricTarget:
    """Biconcave target with ``weight_217`` on the 217 mOsm coefficients."""
    return AxisymmetricTarget(AxisymmetricProfile.rbc(rbc_blend(weight_217), form), tag=f"rbc-{weight_217:g}-{form}")


def project_coefficients(target: TargetSurface, N: int, grid: SphereGrid) -> np.ndarray:
    """Weighted least-squares fit of the target radius by all modes of degree <= N."""
    r = target.radius(grid)
    basis = grid.basis_values(N).reshape(n_modes(N), -1)
    sw = np.sqrt(grid.weights).ravel()
    A = (basis * sw).T
    b = r.ravel() * sw
    coeffs, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    if rank < n_modes(N):
        raise np.linalg.LinAlgError(f"projection is rank deficient ({rank} < {n_modes(N)}); refine the grid")
    return coeffs


def _radius_values(coeffs, grid: SphereGrid) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    N = truncation_degree(coeffs.size)
    return np.tensordot(coeffs, grid.basis_values(N), axes=1)


def weighted_misfit(target: TargetSurface, coeffs, grid: SphereGrid) -> float:
    diff = target.radius(grid) - _radius_values(coeffs, grid)
    return float(np.sum(grid.weights * diff * diff))


@dataclass(frozen=True)
class ReconstructionErrors:
    e_rms: float
    e_ms: float
    e_vol: float
    e_sa: float
    e_eng: float
    # False when the truncated expansion has r <= 0 somewhere on the dense grid
    star_shaped: bool = True


@dataclass(frozen=True)
class SurfaceMeasures:
    s_area: float
    volume: float
    e_bend: float


def surface_measures(rf: RadiusField, grid: SphereGrid, params: EnergyParams) -> SurfaceMeasures:
    gf = eval_geometry_field(rf, grid, check=False)
    return SurfaceMeasures(surface_area(gf, grid), enclosed_volume(rf, grid), bending_energy(gf, grid, params))


def reconstruction_grid(N: int, n_t: int = RECON_N_T, n_p: int | None = None) -> SphereGrid:
    """Sampling grid for projection; ``n_p`` defaults to ``max(2 n_t, 2N + 2)``."""
    if n_p is None:
        n_p = max(2 * n_t, 2 * N + 2)
    return build_grid(n_t, n_p)


def dense_grid_for(N: int, n_t: int = DENSE_N_T) -> SphereGrid:
    return build_grid(n_t, max(8, 4 * (N + 1)))


def reconstruction_errors(
    target: TargetSurface,
    coeffs,
    grid: SphereGrid,
    params: EnergyParams | None = None,
    dense: SphereGrid | None = None,
) -> ReconstructionErrors:
    """Pointwise error on ``grid`` and relative volume/area/energy errors on a dense grid.

    ``e_rms`` is the root mean square over the grid nodes and ``e_ms`` the
    mean square itself.
    """
    params = params or EnergyParams()
    coeffs = np.asarray(coeffs, dtype=float)
    diff = target.radius(grid) - _radius_values(coeffs, grid)
    ms = float(np.mean(diff * diff))
    if dense is None:
        dense = dense_grid_for(int(math.isqrt(coeffs.size)) - 1)
    ref = surface_measures(target.radius_field(dense), dense, params)
    rec_rf = eval_radius_field(coeffs, dense, check=False)
    rec = surface_measures(rec_rf, dense, params)
    rel = lambda a, b: abs(a - b) / abs(b)  # noqa: E731
    return ReconstructionErrors(
        e_rms=math.sqrt(ms),
        e_ms=ms,
        e_vol=rel(rec.volume, ref.volume),
        e_sa=rel(rec.s_area, ref.s_area),
        e_eng=rel(rec.e_bend, ref.e_bend),
        star_shaped=bool(np.all(rec_rf.r > 0.0)),
    )
