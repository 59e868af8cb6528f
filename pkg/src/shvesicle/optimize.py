"""Nonlinear conjugate gradient (Hestenes-Stiefel beta) with a bisection line search."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .energy import EnergyParams, _State, energy_gradient, total_energy_value
from .geometry import GeometryError, reduced_volume
from .quadrature import SphereGrid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NcgConfig:
    eps_g: float = 1e-6
    eps_a: float = 1e-6
    max_iters: int = 5000
    ls_max_iters: int = 60
    ls_eps: float = 1e-10
    # clamp beta at zero and restart on non-descent directions; False runs the
    # textbook recursion with no safeguards
    beta_floor_at_zero: bool = True

    def __post_init__(self):
        for name in ("eps_g", "eps_a", "ls_eps"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iters < 0 or self.ls_max_iters < 1:
            raise ValueError("iteration limits must be positive")


@dataclass(frozen=True)
class TraceRow:
    k: int
    energy: float
    grad_norm: float
    alpha: float
    beta: float
    s_area: float
    volume: float
    reduced_v: float


@dataclass
class IterationTrace:
    rows: list[TraceRow] = field(default_factory=list)

    def append(self, row: TraceRow) -> None:
        if self.rows and row.k <= self.rows[-1].k:
            raise ValueError("trace iteration counter must increase")
        self.rows.append(row)

    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.rows])

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class LineSearchResult:
    alpha: float
    value: float
    success: bool
    n_evals: int


class LineSearchError(RuntimeError):
    pass


def bisection_line_search(phi, dphi, max_iters: int = 60, eps: float = 1e-10) -> LineSearchResult:
    """Minimize ``phi`` on [0, 1] by energy-ordered bisection.

    ``alpha_l`` always holds the lowest energy seen and ``alpha_u`` the other
    end of the bracket, so the bracket may be stored in either orientation.
    The slope ``dphi`` is only evaluated at points that improve on
    ``alpha_l`` and decides which half keeps the minimum.  Success means a
    point strictly below ``phi(0)`` was found.
    """
    e_m, e_M = phi(0.0), phi(1.0)
    n_evals = 2
    if e_m < e_M:
        a_l, a_u, e_l = 0.0, 1.0, e_m
    else:
        a_l, a_u, e_l = 1.0, 0.0, e_M
    for _ in range(max_iters):
        if abs(a_u - a_l) < eps:
            break
        a_t = 0.5 * (a_l + a_u)
        e_t = phi(a_t)
        n_evals += 1
        if not e_t <= e_l:
            a_u = a_t
        else:
            slope = dphi(a_t)
            if slope * (a_l - a_t) > 0:
                a_l = a_t
            else:
                a_u, a_l = a_l, a_t
            e_l = e_t
    # the last trial may have been rejected, so return the best point, not a_t
    return LineSearchResult(alpha=a_l, value=e_l, success=e_l < e_m, n_evals=n_evals)


def _safe_energy(coeffs, grid, params) -> float:
    try:
        return total_energy_value(coeffs, grid, params)
    except GeometryError:
        return math.inf


def line_search(coeffs, direction, grid: SphereGrid, params: EnergyParams, cfg: NcgConfig | None = None) -> LineSearchResult:
    cfg = cfg or NcgConfig()
    coeffs = np.asarray(coeffs, dtype=float)
    direction = np.asarray(direction, dtype=float)
    if not np.any(direction):
        raise ValueError("search direction is zero")

    def phi(alpha):
        return _safe_energy(coeffs + alpha * direction, grid, params)

    def dphi(alpha):
        return float(energy_gradient(coeffs + alpha * direction, grid, params) @ direction)

    return bisection_line_search(phi, dphi, cfg.ls_max_iters, cfg.ls_eps)


@dataclass
class NcgResult:
    coeffs: np.ndarray
    trace: IterationTrace
    stop_reason: str
    energy: float

    @property
    def iterations(self) -> int:
        return self.trace.rows[-1].k if self.trace.rows else 0


def _row(k, st: _State, grad, alpha, beta) -> TraceRow:
    return TraceRow(
        k=k,
        energy=st.e_total,
        grad_norm=float(np.linalg.norm(grad)),
        alpha=alpha,
        beta=beta,
        s_area=st.s_area,
        volume=st.volume,
        reduced_v=reduced_volume(st.s_area, st.volume),
    )


def ncg_minimize(coeffs0, grid: SphereGrid, params: EnergyParams, cfg: NcgConfig | None = None) -> NcgResult:
    """Minimize the penalized energy from ``coeffs0``.

    Stops when the gradient, the gradient change or the coefficient step
    falls below its tolerance, when ``max_iters`` is reached, or when no decrease can be
    found even along steepest descent.  Returns the lowest-energy iterate.
    """
    cfg = cfg or NcgConfig()
    a = np.array(coeffs0, dtype=float)
    st = _State(a, grid, params)
    g = st.gradient(grid, params)
    d = -g
    trace = IterationTrace()
    trace.append(_row(0, st, g, 0.0, 0.0))
    best_a, best_e = a.copy(), st.e_total
    stop = "max_iters"

    # a gradient below eps_g is roundoff from the penalty residuals; stepping
    # along it only trades one-ulp energy noise for real drift in the shape
    if np.linalg.norm(g) < cfg.eps_g:
        return NcgResult(best_a, trace, "stationary", best_e)

    for k in range(1, cfg.max_iters + 1):
        ls = line_search(a, d, grid, params, cfg)
        if not ls.success and cfg.beta_floor_at_zero and not np.array_equal(d, -g):
            logger.debug("iteration %d: no decrease along conjugate direction, restarting", k)
            d = -g
            ls = line_search(a, d, grid, params, cfg)
        if not ls.success:
            stop = "line_search_failed"
            break

        a_new = a + ls.alpha * d
        st_new = _State(a_new, grid, params)
        g_new = st_new.gradient(grid, params)
        dg = g_new - g
        step = float(np.linalg.norm(a_new - a))

        beta = 0.0
        grad_change = float(np.linalg.norm(dg))
        if grad_change >= cfg.eps_g:
            denom = float(dg @ d)
            beta = float(g_new @ dg) / denom if denom != 0.0 else 0.0
            if cfg.beta_floor_at_zero:
                beta = max(beta, 0.0)
        d_new = -g_new + beta * d
        if cfg.beta_floor_at_zero and float(g_new @ d_new) >= 0.0:
            d_new = -g_new

        trace.append(_row(k, st_new, g_new, ls.alpha, beta))
        if st_new.e_total <= best_e:
            best_a, best_e = a_new.copy(), st_new.e_total
        a, g, d = a_new, g_new, d_new

        if grad_change < cfg.eps_g:
            stop = "grad_change"
            break
        if step < cfg.eps_a:
            stop = "step"
            break
        if np.linalg.norm(g) < cfg.eps_g:
            stop = "stationary"
            break

    return NcgResult(best_a, trace, stop, best_e)


@dataclass(frozen=True)
class FdCheck:
    analytic: np.ndarray
    numeric: np.ndarray
    rel_errors: np.ndarray

    @property
    def max_error(self) -> float:
        return float(self.rel_errors.max())


def fd_gradient_check(
    coeffs, grid: SphereGrid, params: EnergyParams, step: float = 1e-6, small: float = 1e-4, abs_scale: float = 1e-2
) -> FdCheck:
    """Central-difference gradient compared with the analytic one.

    Components with analytic magnitude below ``small`` are compared in
    absolute terms, divided by ``abs_scale`` so that an absolute error of
    ``1e-8`` maps to a reported ``1e-6``.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    a = np.asarray(coeffs, dtype=float)
    analytic = energy_gradient(a, grid, params)
    numeric = np.empty_like(analytic)
    for i in range(a.size):
        e = np.zeros_like(a)
        e[i] = step
        numeric[i] = (total_energy_value(a + e, grid, params) - total_energy_value(a - e, grid, params)) / (2 * step)
    diff = np.abs(numeric - analytic)
    mag = np.abs(analytic)
    rel = np.where(mag < small, diff / abs_scale, diff / np.where(mag < small, 1.0, mag))
    return FdCheck(analytic, numeric, rel)
