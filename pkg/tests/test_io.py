from __future__ import annotations

import json
import math
from collections import Counter

import numpy as np
import pytest
from helpers import random_shape
from hypothesis import given
from hypothesis import strategies as st

from shvesicle import io
from shvesicle.energy import EnergyParams, total_energy
from shvesicle.geometry import eval_radius_field, enclosed_volume, sphere_coeffs
from shvesicle.quadrature import build_grid


@given(x=st.floats(allow_nan=False, allow_infinity=False))
def test_float_format_round_trips(x):
    s = io.fmt_float(x)
    assert float(s) == x
    assert json.loads(io.dumps({"x": x}))["x"] == x


def test_dumps_special_values():
    doc = json.loads(io.dumps({"a": 1.0, "b": [float("nan"), float("inf")], "c": 2, "d": True, "e": "t"}))
    assert doc == {"a": 1.0, "b": [None, None], "c": 2, "d": True, "e": "t"}
    assert isinstance(doc["a"], float)
    assert "0.10000000000000001" in io.dumps(0.1)


def test_coeffs_round_trip_is_bit_identical(tmp_path, grid20):
    a = random_shape(4, 1) * math.pi
    path = io.write_coeffs(tmp_path / "c.json", a)
    b = io.read_coeffs(path)
    assert np.array_equal(a, b)
    p = EnergyParams(s_bar=12.3, v_bar=4.1)
    assert total_energy(a, grid20, p, gradient=True) == total_energy(b, grid20, p, gradient=True)
    doc = json.loads(path.read_text())
    assert doc["N"] == 4 and doc["modes"][7] == [2, -1]


def test_read_coeffs_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"N": 3, "coeffs": [1.0] * 9}))
    with pytest.raises(ValueError):
        io.read_coeffs(bad)
    bad.write_text(json.dumps({"coeffs": [1.0] * 5}))
    with pytest.raises(ValueError):
        io.read_coeffs(bad)
    bad.write_text(json.dumps({"N": 1}))
    with pytest.raises(ValueError):
        io.read_coeffs(bad)


def test_csv_writer(tmp_path):
    path = io.write_csv(tmp_path / "t.csv", ("a", "b"), [(0.1, "x"), (2, "y")])
    assert path.read_text().splitlines() == ["a,b", "0.10000000000000001,x", "2,y"]


@pytest.mark.parametrize("n_t, n_p", [(6, 8), (20, 40)])
def test_mesh_topology(n_t, n_p):
    g = build_grid(n_t, n_p)
    verts, faces = io.surface_mesh(random_shape(3, 2, 0.05), g)
    assert verts.shape == (n_t * n_p + 2, 3)
    assert faces.shape == (2 * n_p * (n_t - 1) + 2 * n_p, 3)
    # closed, consistently oriented: every directed edge appears once and its reverse once
    edges = Counter()
    for f in faces:
        for i in range(3):
            edges[(f[i], f[(i + 1) % 3])] += 1
    assert all(c == 1 for c in edges.values())
    assert all(edges[(b, a)] == 1 for a, b in edges)


def test_mesh_orientation_and_axis():
    a = sphere_coeffs(4)
    a[4] = 0.3
    g = build_grid(60)
    verts, faces = io.surface_mesh(a, g)
    vol = io.mesh_volume(verts, faces)
    ref = enclosed_volume(eval_radius_field(a, g), g)
    assert vol > 0
    assert vol == pytest.approx(ref, rel=5e-3)
    # polar axis is +y; the north pole vertex sits at (0, r(0), 0)
    north = verts[-2]
    assert north[0] == 0.0 and north[2] == 0.0 and north[1] > 0


def test_obj_file_round_trip(tmp_path):
    g = build_grid(8)
    a = random_shape(2, 4, 0.05)
    path = io.write_obj(tmp_path / "s.obj", a, g)
    v, f = io.read_obj(path)
    v0, f0 = io.surface_mesh(a, g)
    assert np.array_equal(v, v0) and np.array_equal(f, f0)
