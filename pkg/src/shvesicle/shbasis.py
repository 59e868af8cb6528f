"""Real surface harmonics and associated Legendre functions.

Modes are addressed by a flat index ``i`` in ``[0, (N+1)**2)``.  Within a
degree ``n`` the ordering is ``A_n^0 .. A_n^n`` followed by ``B_n^1 .. B_n^n``;
a negative order ``m`` addresses the sine (B) coefficient of order ``|m|``.

Legendre functions carry the Condon-Shortley phase ``(-1)**m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

POLE_FLOOR = 1e-12


class DegenerateNodeError(ValueError):
    """Raised when a theta-derivative is requested too close to a pole."""


def index_to_nm(i: int) -> tuple[int, int]:
    if i < 0:
        raise ValueError(f"mode index must be nonnegative, got {i}")
    n = math.isqrt(i)
    k = i - n * n
    m = k if k <= n else n * n + n - i
    return n, m


def nm_to_index(n: int, m: int) -> int:
    if abs(m) > n:
        raise ValueError(f"|m| must not exceed n (n={n}, m={m})")
    return n * n + m if m >= 0 else n * n + n - m


def n_modes(N: int) -> int:
    return (N + 1) ** 2


def normalization_factor(n: int, m: int) -> float:
    """sqrt((2n+1)(n-m)! / (4 pi (n+m)!)), with the factorial ratio in log space."""
    if not 0 <= m <= n:
        raise ValueError(f"need 0 <= m <= n, got n={n}, m={m}")
    log_ratio = math.lgamma(n - m + 1) - math.lgamma(n + m + 1)
    return math.exp(0.5 * (math.log((2 * n + 1) / (4.0 * math.pi)) + log_ratio))


def legendre_table(nmax: int, mmax: int, mu) -> np.ndarray:
    """All P_n^m(mu) for 0 <= m <= mmax, m <= n <= nmax.

    Returns an array of shape ``(nmax + 1, mmax + 1) + mu.shape``; entries with
    ``m > n`` are zero.  Uses the diagonal seed
    ``P_m^m = (-1)^m (2m-1)!! (1-mu^2)^{m/2}`` and the three-term upward
    recurrence in ``n``.
    """
    mu = np.asarray(mu, dtype=float)
    out = np.zeros((nmax + 1, mmax + 1) + mu.shape)
    sin_t = np.sqrt(np.clip(1.0 - mu * mu, 0.0, None))
    diag = np.ones_like(mu)
    for m in range(mmax + 1):
        if m > 0:
            diag = -(2 * m - 1) * sin_t * diag
        if m > nmax:
            break
        out[m, m] = diag
        if m + 1 <= nmax:
            out[m + 1, m] = (2 * m + 1) * mu * diag
        for n in range(m + 2, nmax + 1):
            out[n, m] = ((2 * n - 1) * mu * out[n - 1, m] - (n + m - 1) * out[n - 2, m]) / (n - m)
    return out


def assoc_legendre(n: int, m: int, mu):
    if not 0 <= m <= n:
        raise ValueError(f"need 0 <= m <= n, got n={n}, m={m}")
    mu = np.asarray(mu, dtype=float)
    if np.any(np.abs(mu) > 1.0):
        raise ValueError("mu must lie in [-1, 1]")
    val = legendre_table(n, m, mu)[n, m]
    return float(val) if val.ndim == 0 else val


def _pole_guard(theta, floor):
    s = np.sin(theta)
    if np.any(np.abs(s) < floor):
        raise DegenerateNodeError(f"sin(theta) below {floor:g}; theta too close to a pole")
    return s


def _dtheta_from_table(P, n, m, cos_t, sin_t):
    return -((n + 1) * cos_t * P[n, m] - (n - m + 1) * P[n + 1, m]) / sin_t


def _d2theta_from_table(P, n, m, cos_t, sin_t):
    num = (
        (n + 1 + (n + 1) ** 2 * cos_t**2) * P[n, m]
        - 2 * cos_t * (n - m + 1) * (n + 2) * P[n + 1, m]
        + (n - m + 1) * (n - m + 2) * P[n + 2, m]
    )
    return num / sin_t**2


def assoc_legendre_dtheta(n: int, m: int, theta, floor: float = POLE_FLOOR):
    """d/dtheta of P_n^m(cos theta) via the degree-raising derivative recurrence."""
    theta = np.asarray(theta, dtype=float)
    sin_t = _pole_guard(theta, floor)
    cos_t = np.cos(theta)
    P = legendre_table(n + 1, m, cos_t)
    val = _dtheta_from_table(P, n, m, cos_t, sin_t)
    return float(val) if val.ndim == 0 else val


def assoc_legendre_d2theta(n: int, m: int, theta, floor: float = POLE_FLOOR):
    theta = np.asarray(theta, dtype=float)
    sin_t = _pole_guard(theta, floor)
    cos_t = np.cos(theta)
    P = legendre_table(n + 2, m, cos_t)
    val = _d2theta_from_table(P, n, m, cos_t, sin_t)
    return float(val) if val.ndim == 0 else val


@dataclass(frozen=True)
class BasisSample:
    s: float
    s_theta: float
    s_phi: float
    s_thetatheta: float
    s_phiphi: float
    s_thetaphi: float


@dataclass(frozen=True)
class BasisTable:
    """Every mode of degree <= N and its derivatives on a tensor grid.

    Each array has shape ``(n_modes, n_t, n_p)``.  Field order in
    :data:`FIELDS` matches :class:`BasisSample`.
    """

    N: int
    s: np.ndarray
    s_theta: np.ndarray
    s_phi: np.ndarray
    s_thetatheta: np.ndarray
    s_phiphi: np.ndarray
    s_thetaphi: np.ndarray

    FIELDS = ("s", "s_theta", "s_phi", "s_thetatheta", "s_phiphi", "s_thetaphi")

    def stacked(self) -> np.ndarray:
        """Array of shape ``(6, n_modes, n_t, n_p)``."""
        return np.stack([getattr(self, f) for f in self.FIELDS])


def basis_table(N: int, thetas, phis, floor: float = POLE_FLOOR) -> BasisTable:
    thetas = np.asarray(thetas, dtype=float)
    phis = np.asarray(phis, dtype=float)
    sin_t = _pole_guard(thetas, floor)
    cos_t = np.cos(thetas)
    # degrees up to N+2 so the second-derivative formula never recurses again
    P = legendre_table(N + 2, N, cos_t)

    nm = n_modes(N)
    shape = (nm, thetas.size, phis.size)
    out = {f: np.empty(shape) for f in BasisTable.FIELDS}
    for i in range(nm):
        n, m = index_to_nm(i)
        am = abs(m)
        f = normalization_factor(n, am)
        p = f * P[n, am]
        dp = f * _dtheta_from_table(P, n, am, cos_t, sin_t)
        d2p = f * _d2theta_from_table(P, n, am, cos_t, sin_t)
        if m >= 0:
            trig = np.cos(m * phis)
            dtrig = -m * np.sin(m * phis)
        else:
            trig = np.sin(am * phis)
            dtrig = am * np.cos(am * phis)
        out["s"][i] = np.outer(p, trig)
        out["s_theta"][i] = np.outer(dp, trig)
        out["s_thetatheta"][i] = np.outer(d2p, trig)
        out["s_phi"][i] = np.outer(p, dtrig)
        out["s_phiphi"][i] = -(m * m) * out["s"][i]
        out["s_thetaphi"][i] = np.outer(dp, dtrig)
    return BasisTable(N=N, **out)


def basis_values(N: int, thetas, phis) -> np.ndarray:
    """Values only of every mode of degree <= N, shape ``(n_modes, n_t, n_p)``."""
    thetas = np.asarray(thetas, dtype=float)
    phis = np.asarray(phis, dtype=float)
    P = legendre_table(N, N, np.cos(thetas))
    out = np.empty((n_modes(N), thetas.size, phis.size))
    for i in range(out.shape[0]):
        n, m = index_to_nm(i)
        am = abs(m)
        trig = np.cos(m * phis) if m >= 0 else np.sin(am * phis)
        out[i] = np.outer(normalization_factor(n, am) * P[n, am], trig)
    return out


def basis_sample(mode: int | tuple[int, int], theta: float, phi: float) -> BasisSample:
    """Value and first/second partials of one surface harmonic at a point.

    ``mode`` is a flat index or an ``(n, m)`` pair.
    """
    if isinstance(mode, tuple):
        n, m = mode
        i = nm_to_index(n, m)
    else:
        i = int(mode)
        n, m = index_to_nm(i)
    tab = basis_table(n, np.array([theta]), np.array([phi]))
    return BasisSample(*(float(getattr(tab, f)[i, 0, 0]) for f in BasisTable.FIELDS))
