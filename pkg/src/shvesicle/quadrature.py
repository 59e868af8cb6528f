"""Product Gauss-Legendre x trapezoid quadrature on the unit sphere."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Tensor grid of ``n_t`` polar and ``n_p`` azimuthal nodes.

    ``weights[k, l]`` are solid-angle weights, so ``sum(weights * f)``
    approximates the integral of ``f sin(theta) dtheta dphi``.
    """

    thetas: np.ndarray
    phis: np.ndarray
    weights: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_t(self) -> int:
        return self.thetas.size

    @property
    def n_p(self) -> int:
        return self.phis.size

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_t, self.n_p)

    @property
    def sin_theta(self) -> np.ndarray:
        """sin(theta) broadcast to the grid shape."""
        return np.broadcast_to(np.sin(self.thetas)[:, None], self.shape)

    @property
    def cos_theta(self) -> np.ndarray:
        return np.broadcast_to(np.cos(self.thetas)[:, None], self.shape)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.thetas, self.phis, indexing="ij")

    def basis(self, N: int):
        """Basis table for degree ``N`` on this grid, built once and cached."""
        from .shbasis import basis_table

        tab = self._cache.get(N)
        if tab is None:
            tab = basis_table(N, self.thetas, self.phis)
            self._cache[N] = tab
        return tab

    def basis_values(self, N: int) -> np.ndarray:
        """Mode values only; cheaper than :meth:`basis` on large grids."""
        from .shbasis import basis_values

        if N in self._cache:
            return self._cache[N].s
        key = ("values", N)
        vals = self._cache.get(key)
        if vals is None:
            vals = basis_values(N, self.thetas, self.phis)
            self._cache[key] = vals
        return vals


def build_grid(n_t: int, n_p: int | None = None) -> SphereGrid:
    """Gauss nodes in cos(theta), equispaced nodes in phi.

    ``n_p`` defaults to ``2 * n_t``.
    """
    if n_p is None:
        n_p = 2 * n_t
    if n_t < 2:
        raise ValueError(f"n_t must be >= 2, got {n_t}")
    if n_p < 4:
        raise ValueError(f"n_p must be >= 4, got {n_p}")
    mu, wmu = np.polynomial.legendre.leggauss(n_t)
    # descending mu so theta increases from the north pole
    mu, wmu = mu[::-1], wmu[::-1]
    thetas = np.arccos(mu)
    phis = 2.0 * np.pi * np.arange(n_p) / n_p
    weights = np.outer(wmu, np.full(n_p, 2.0 * np.pi / n_p))
    for arr in (thetas, phis, weights):
        arr.setflags(write=False)
    return SphereGrid(thetas=thetas, phis=phis, weights=weights)


def integrate(grid: SphereGrid, values) -> float:
    """Integrate per-node values against the solid-angle measure."""
    values = np.asarray(values, dtype=float)
    if values.shape[-2:] != grid.shape:
        raise ValueError(f"values shape {values.shape} does not match grid {grid.shape}")
    return np.sum(values * grid.weights, axis=(-2, -1))
