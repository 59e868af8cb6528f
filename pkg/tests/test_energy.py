from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest
from helpers import random_shape
from hypothesis import given
from hypothesis import strategies as st

from shvesicle.energy import (
    EnergyParams,
    bending_energy,
    energy_and_gradient,
    energy_gradient,
    mean_curvature_variation,
    total_energy,
    total_energy_value,
    variation_fields,
)
from shvesicle.geometry import eval_geometry_field, eval_radius_field, sphere_coeffs
from shvesicle.optimize import fd_gradient_check
from shvesicle.quadrature import build_grid
from shvesicle.shbasis import index_to_nm, nm_to_index

Y00 = 1.0 / math.sqrt(4.0 * math.pi)


def test_params_validation():
    with pytest.raises(ValueError):
        EnergyParams(kappa_c=0.0)
    with pytest.raises(ValueError):
        EnergyParams(k_s=-1.0)
    assert EnergyParams(kappa_c=2.0).e0 == pytest.approx(16 * math.pi)


def test_sphere_bending_energy(grid20):
    rep = total_energy(sphere_coeffs(4), grid20, EnergyParams())
    assert rep.e_bend == pytest.approx(8 * math.pi, rel=1e-12)
    assert rep.e_total == pytest.approx(8 * math.pi, rel=1e-12)
    assert rep.reduced_v == pytest.approx(1.0, abs=1e-12)


def test_spontaneous_curvature_cancels_sphere(grid20):
    # H = -1 on the unit sphere in this orientation, so c0 = -2 zeroes the integrand
    rep = total_energy(sphere_coeffs(2), grid20, EnergyParams(c0=-2.0))
    assert rep.e_bend == pytest.approx(0.0, abs=1e-12)


def test_volume_penalty_substitution(grid20):
    p = EnergyParams(k_v=100.0, v_bar=0.9 * 4 * math.pi / 3)
    rep = total_energy(sphere_coeffs(2), grid20, p)
    assert rep.e_total == pytest.approx(8 * math.pi + 50 * (4 * math.pi / 3 * 0.1) ** 2, rel=1e-12)


@given(seed=st.integers(0, 10_000), ds=st.floats(-1, 1), dv=st.floats(-1, 1))
def test_penalties_nonnegative(seed, ds, dv):
    g = build_grid(10)
    p = EnergyParams(s_bar=4 * math.pi + ds, v_bar=4 * math.pi / 3 + dv)
    rep = total_energy(random_shape(3, seed), g, p)
    assert rep.e_bend >= 0.0
    assert rep.e_total >= rep.e_bend


def test_kappa_g_is_inert(grid20):
    a = random_shape(4, 5)
    base = EnergyParams()
    e0, g0 = energy_and_gradient(a, grid20, base)
    e1, g1 = energy_and_gradient(a, grid20, dataclasses.replace(base, kappa_g=3.0))
    assert np.array_equal(g0, g1)
    assert e1 - e0 == pytest.approx(12 * math.pi, rel=1e-12)


def test_penalty_consistency(grid20):
    a = random_shape(4, 6)
    p = EnergyParams(k_s=10.0, s_bar=12.0)
    rep = total_energy(a, grid20, p)
    h = 1.0
    e_plus = total_energy_value(a, grid20, dataclasses.replace(p, k_s=p.k_s + h))
    e_minus = total_energy_value(a, grid20, dataclasses.replace(p, k_s=p.k_s - h))
    assert (e_plus - e_minus) / (2 * h) == pytest.approx(0.5 * (rep.s_area - p.s_bar) ** 2, rel=1e-9)


@pytest.mark.parametrize("lam", [0.5, 2.0, 10.0])
def test_bending_energy_scale_invariant(lam, grid20):
    a = random_shape(4, 7)
    p = EnergyParams()
    e1 = total_energy(a, grid20, p).e_bend
    e2 = total_energy(lam * a, grid20, p).e_bend
    assert e2 == pytest.approx(e1, rel=1e-10)


def test_bending_energy_function(grid20):
    a = random_shape(3, 1)
    rf = eval_radius_field(a, grid20)
    gf = eval_geometry_field(rf, grid20)
    assert bending_energy(gf, grid20, EnergyParams()) == pytest.approx(total_energy(a, grid20, EnergyParams()).e_bend)


def _bump(a, i, eps):
    b = a.copy()
    b[i] += eps
    return b


def test_variation_fields_sphere_constant_mode(grid20):
    a = sphere_coeffs(4)
    rf = eval_radius_field(a, grid20)
    var = variation_fields((0, 0), grid20, rf)
    assert np.allclose(var.dr, Y00, atol=1e-15)
    # omega = r^2 sin(theta) on a sphere
    assert np.allclose(var.domega, 2 * grid20.sin_theta * Y00, atol=1e-14)
    eps = 1e-7
    om = lambda b: eval_geometry_field(eval_radius_field(b, grid20), grid20).omega  # noqa: E731
    fd = (om(_bump(a, 0, eps)) - om(_bump(a, 0, -eps))) / (2 * eps)
    assert np.allclose(var.domega, fd, atol=1e-7)


@pytest.mark.parametrize("mode", [0, 3, 7, 13, 24])
def test_variation_fields_random(mode, grid20):
    a = random_shape(4, mode)
    rf = eval_radius_field(a, grid20)
    var = variation_fields(mode, grid20, rf)
    m = index_to_nm(mode)[1]
    assert np.allclose(var.dr_phiphi, -(m * m) * var.dr, atol=1e-13)
    eps = 1e-6
    geo = lambda b: eval_geometry_field(eval_radius_field(b, grid20), grid20)  # noqa: E731
    gp, gm = geo(_bump(a, mode, eps)), geo(_bump(a, mode, -eps))
    fd = (gp.omega - gm.omega) / (2 * eps)
    assert np.abs(var.domega - fd).max() <= 1e-6 * np.abs(fd).max()
    fd_s = (gp.omega_sin - gm.omega_sin) / (2 * eps)
    assert np.abs(var.domega_sin - fd_s).max() <= 1e-6 * np.abs(fd_s).max()


def test_mean_curvature_variation_sphere(grid20):
    a = sphere_coeffs(3)
    rf = eval_radius_field(a, grid20)
    dH = mean_curvature_variation((0, 0), rf, None, grid20)
    assert np.allclose(dH, Y00, atol=1e-13)


def test_mean_curvature_variation_b_mode_vanishes_at_phi_zero(grid20):
    a = sphere_coeffs(4)
    a[nm_to_index(2, 0)] = 0.1
    a[nm_to_index(4, 0)] = -0.05
    rf = eval_radius_field(a, grid20)
    for m in (1, 2, 3):
        dH = mean_curvature_variation((3, -m), rf, None, grid20)
        assert np.abs(dH[:, 0]).max() < 1e-13


@pytest.mark.parametrize("seed", range(6))
def test_mean_curvature_variation_finite_difference(seed, grid20):
    rng = np.random.default_rng(seed)
    a = random_shape(4, seed)
    mode = int(rng.integers(0, a.size))
    rf = eval_radius_field(a, grid20)
    dH = mean_curvature_variation(mode, rf, None, grid20)
    eps = 1e-6
    H = lambda b: eval_geometry_field(eval_radius_field(b, grid20), grid20).H  # noqa: E731
    fd = (H(_bump(a, mode, eps)) - H(_bump(a, mode, -eps))) / (2 * eps)
    assert np.abs(dH - fd).max() <= 1e-6 * max(1.0, np.abs(fd).max())


def test_gradient_zero_on_matching_sphere(grid20):
    g = energy_gradient(sphere_coeffs(4), grid20, EnergyParams())
    assert np.linalg.norm(g) < 1e-8


def test_gradient_volume_term_on_constant_mode(grid20):
    dv = 0.3
    p = EnergyParams(k_s=0.0, k_v=2.0, v_bar=4 * math.pi / 3 - dv)
    g = energy_gradient(sphere_coeffs(3), grid20, p)
    assert g[0] == pytest.approx(2.0 * dv * math.sqrt(4 * math.pi), rel=1e-12)
    assert np.abs(g[1:]).max() < 1e-10


@pytest.mark.parametrize("seed", range(4))
def test_gradient_matches_finite_difference(seed, grid20):
    chk = fd_gradient_check(random_shape(4, 200 + seed), grid20, EnergyParams())
    assert chk.max_error < 1e-6


def test_gradient_with_offset_targets_and_curvature():
    # looser: the penalties here are large and the FD quotient loses digits
    g = build_grid(16)
    p = EnergyParams(c0=0.7, s_bar=13.0, v_bar=4.0, k_s=50.0, k_v=50.0)
    chk = fd_gradient_check(random_shape(3, 9), g, p)
    assert chk.max_error < 1e-5


def test_report_dict(grid20):
    rep = total_energy(sphere_coeffs(2), grid20, EnergyParams(), gradient=True)
    d = rep.to_dict()
    assert set(d) == {"e_bend", "e_total", "s_area", "volume", "reduced_v", "grad_norm"}
    assert d["grad_norm"] < 1e-8
