"""Static figures written next to the CSV/JSON outputs."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .geometry import truncation_degree  # noqa: E402
from .shbasis import basis_values  # noqa: E402
from .study import REFERENCE_SH, REFERENCE_SHAPE_EQ, REFERENCE_V  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.6),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.frameon": False,
}


def meridian(coeffs, phi: float = 0.0, n: int = 361) -> tuple[np.ndarray, np.ndarray]:
    """(horizontal, vertical) coordinates of the cross-section through ``phi`` and ``phi + pi``."""
    coeffs = np.asarray(coeffs, dtype=float)
    N = truncation_degree(coeffs.size)
    th = np.linspace(0.0, math.pi, n)
    r = np.tensordot(coeffs, basis_values(N, th, np.array([phi, phi + math.pi])), axes=1)
    rho = np.concatenate([r[:, 0] * np.sin(th), -r[::-1, 1] * np.sin(th[::-1])])
    z = np.concatenate([r[:, 0] * np.cos(th), r[::-1, 1] * np.cos(th[::-1])])
    return rho, z


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def plot_sweep(v: Sequence[float], e_ratio: Sequence[float], path: Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        order = np.argsort(v)
        ax.plot(np.asarray(v)[order], np.asarray(e_ratio)[order], "o-", color="k", label="this run")
        ax.plot(REFERENCE_V, REFERENCE_SH, "s", mfc="none", color="tab:blue", label="published harmonic")
        ax.plot(REFERENCE_V, REFERENCE_SHAPE_EQ, "^", mfc="none", color="tab:red", label="shape equation")
        ax.set_xlabel("reduced volume $v$")
        ax.set_ylabel("$E/E_0$")
        ax.legend()
        return _save(fig, path)


def plot_trace(energy: Sequence[float], grad_norm: Sequence[float], path: Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        k = np.arange(len(energy))
        ax.plot(k, energy, color="k")
        ax.set_xlabel("iteration")
        ax.set_ylabel("penalized energy")
        ax2 = ax.twinx()
        ax2.semilogy(k, np.maximum(grad_norm, 1e-300), color="tab:blue", lw=0.8)
        ax2.set_ylabel("gradient norm", color="tab:blue")
        ax2.grid(False)
        return _save(fig, path)


def plot_shape(coeffs, path: Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for phi, ls in ((0.0, "-"), (0.5 * math.pi, "--")):
            ax.plot(*meridian(coeffs, phi), ls, color="k", label=f"$\\phi$ = {phi:.2f}")
        ax.set_aspect("equal")
        ax.set_xlabel("$\\rho$")
        ax.set_ylabel("$z$")
        ax.legend()
        return _save(fig, path)


def plot_reconstruction(target_rz: tuple[np.ndarray, np.ndarray], fits: dict, path: Path) -> Path:
    """Target cross-section against reconstructions keyed by degree."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(*target_rz, color="k", lw=2, label="target")
        for N, coeffs in sorted(fits.items()):
            ax.plot(*meridian(coeffs), lw=0.9, label=f"N = {N}")
        ax.set_aspect("equal")
        ax.set_xlabel("$\\rho$")
        ax.set_ylabel("$z$")
        ax.legend(fontsize=7)
        return _save(fig, path)
