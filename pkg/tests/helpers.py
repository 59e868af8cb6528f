from __future__ import annotations

import numpy as np

from shvesicle.geometry import sphere_coeffs


def random_shape(N: int, seed: int, amplitude: float = 0.1) -> np.ndarray:
    """Unit sphere plus uniform noise in [-amplitude, amplitude] on every other mode."""
    rng = np.random.default_rng(seed)
    a = sphere_coeffs(N)
    a[1:] += rng.uniform(-amplitude, amplitude, a.size - 1)
    return a
