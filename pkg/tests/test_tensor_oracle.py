from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tycz_lab.acceptance import tube_point
from tycz_lab.tensor_oracle import (
    NotKahlerEinsteinError,
    PotentialFamily,
    curvature_from_potential,
    kahler_point_to_json,
    lu_scalars,
    model_potential,
    model_space_data,
    riemann_symmetry_defect,
    tycz_a3_pipeline_ke,
    tycz_coeffs_ke,
)


def wirtinger_hessian(F, z, h=1e-4):
    """``d_i dbar_j F`` by central differences in real coordinates."""
    n = z.size
    out = np.empty((n, n), complex)

    def d2(a, b):
        return (F(z + a + b) - F(z + a - b) - F(z - a + b) + F(z - a - b)) / (4 * h * h)

    E = np.eye(n) * h
    for i in range(n):
        for j in range(n):
            xx, yy = d2(E[i], E[j]), d2(1j * E[i], 1j * E[j])
            xy, yx = d2(E[i], 1j * E[j]), d2(1j * E[i], E[j])
            out[i, j] = ((xx + yy) + 1j * (xy - yx)) / 4
    return out


def test_projective_metric_matches_fd_of_potential():
    z = np.array([0.3 - 0.2j, -0.4 + 0.5j])
    d = curvature_from_potential(model_potential("projective", 2, 1.7), z)
    ref = wirtinger_hessian(lambda w: 1.7 * math.log(1 + np.vdot(w, w).real), z)
    assert np.allclose(d.g, ref, atol=1e-7)


@pytest.mark.parametrize("model", ["projective", "hyperbolic"])
def test_ricci_is_ddbar_log_det(model):
    z = np.array([0.2 + 0.1j, -0.3j])
    fam = model_potential(model, 2, 1.0)
    d = curvature_from_potential(fam, z)
    logdet = lambda w: math.log(abs(np.linalg.det(curvature_from_potential(fam, w).g)))  # noqa: E731
    assert np.allclose(d.ric, wirtinger_hessian(logdet, z, h=1e-3), atol=1e-5)


@pytest.mark.parametrize("model,sign", [("projective", -1), ("hyperbolic", 1)])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_constant_holomorphic_curvature(model, sign, n):
    """R = (lam/(n+1)) (g g + g g) with lam = sign (n+1)/c, and |R|^2 = 2n(n+1)/c^2."""
    c = 1.3
    z = (np.array([0.3, 0.1j, -0.2 + 0.1j])[:n]).astype(complex)
    d = curvature_from_potential(model_potential(model, n, c), z)
    lam = sign * (n + 1) / c
    g = d.g
    ref = lam / (n + 1) * (np.einsum("ij,kl->ijkl", g, g) + np.einsum("il,kj->ijkl", g, g))
    assert np.allclose(d.riem, ref, atol=1e-10)
    assert d.sigma / n == pytest.approx(lam, rel=1e-12)
    assert d.R2 == pytest.approx(2 * n * (n + 1) / c**2, rel=1e-12)
    assert d.Ric2 == pytest.approx(n * lam**2, rel=1e-12)


def test_flat_space_is_flat():
    d = curvature_from_potential(model_potential("flat", 3, 2.0), np.array([0.1, 0.2j, 1.0]))
    assert np.allclose(d.g, 2 * np.eye(3))
    assert np.max(np.abs(d.riem)) == 0 and d.R2 == 0 and d.sigma == 0


@given(st.floats(0.2, 2.5), st.floats(0, 2 * math.pi), st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=30, deadline=None)
def test_tube_metric_is_kahler_einstein(profile, r, theta, s1, s2):
    d = curvature_from_potential(PotentialFamily.tube(profile), tube_point(r, theta, (s1, s2)))
    assert riemann_symmetry_defect(d) < 1e-10
    assert np.allclose(d.ric, d.g, atol=1e-7 * np.max(np.abs(d.g)))


def test_tube_invariants_depend_only_on_radius(profile):
    fam = PotentialFamily.tube(profile)
    vals = [curvature_from_potential(fam, tube_point(1.3, t, (s, -s))).R2 for t in (0.1, 1.0, 2.5) for s in (0, 4)]
    assert np.ptp(vals) < 1e-10


def test_tube_metric_matches_fd(profile):
    z = tube_point(1.2, 0.6)
    d = curvature_from_potential(PotentialFamily.tube(profile), z)
    F = lambda w: profile.at(np.linalg.norm(2 * w.real))[0, 0]  # noqa: E731
    assert np.allclose(d.g, wirtinger_hessian(F, z, 1e-4), rtol=1e-6, atol=1e-7)


def test_tube_agrees_across_switch_radius(profile):
    fam = PotentialFamily.tube(profile)
    rs = profile.switch_radius
    lo = curvature_from_potential(fam, tube_point(rs * (1 - 1e-9), 0.3))
    hi = curvature_from_potential(fam, tube_point(rs * (1 + 1e-9), 0.3))
    assert np.allclose(lo.riem, hi.riem, rtol=1e-7, atol=1e-9)


def test_rotation_jets_match_fd():
    """Analytic jets agree with ``d_k dbar_l g_{i jb} - g^{p qb} d_k g_{i qb} dbar_l g_{p jb}`` by FD."""
    fam = model_potential("projective", 2, 1.0)
    z = np.array([0.25 + 0.1j, -0.15 + 0.3j])
    d = curvature_from_potential(fam, z)
    G = lambda w: curvature_from_potential(fam, w).g  # noqa: E731
    h = 1e-5
    dx = [(G(z + h * e) - G(z - h * e)) / (2 * h) for e in np.eye(2)]
    dy = [(G(z + 1j * h * e) - G(z - 1j * h * e)) / (2 * h) for e in np.eye(2)]
    dg = np.array([(a - 1j * b) / 2 for a, b in zip(dx, dy)])  # dg[k, i, j] = d_k g_{i jb}
    dbg = np.array([(a + 1j * b) / 2 for a, b in zip(dx, dy)])
    ddg = np.empty((2, 2, 2, 2), complex)
    for i in range(2):
        for j in range(2):
            ddg[i, j] = wirtinger_hessian(lambda w: G(w)[i, j], z, 1e-3)
    gup = np.linalg.inv(d.g).T  # gup[p, q] = g^{p qb}
    ref = ddg - np.einsum("pq,kiq,lpj->ijkl", gup, dg, dbg)
    assert np.allclose(d.riem, ref, atol=1e-6)
    assert riemann_symmetry_defect(d) < 1e-13


def test_symmetry_defect_detects_corruption():
    d = curvature_from_potential(model_potential("projective", 2), np.array([0.2, 0.1j]))
    bad = d.riem.copy()
    bad[0, 1, 1, 1] += 0.5
    from dataclasses import replace

    assert riemann_symmetry_defect(replace(d, riem=bad)) > 0.1


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("model", ["projective", "hyperbolic"])
def test_lu_scalars_on_model_spaces(n, model):
    d = curvature_from_potential(model_potential(model, n, 1.0), np.full(n, 0.1 + 0.05j))
    lam = d.sigma / n
    s = lu_scalars(d)
    assert s.sigma3 == pytest.approx(n * lam**3, rel=1e-10)
    assert s.RRicRic == pytest.approx(n * lam**3, rel=1e-10)
    assert s.RicRR == pytest.approx(lam * d.R2, rel=1e-10)
    assert s.divdivRRic == pytest.approx(0.0, abs=1e-10 * abs(lam) ** 3)


def test_pipeline_equals_reduced_formula_on_tube(profile):
    fam = PotentialFamily.tube(profile)
    for r in (0.5, 1.5, 2.3):
        d = curvature_from_potential(fam, tube_point(r, 0.7))
        assert tycz_a3_pipeline_ke(d, 0.37) == pytest.approx(tycz_coeffs_ke(d.R2, 0.37, 1.0, 2).a3, abs=1e-10)


def test_pipeline_refuses_non_ke():
    fam = PotentialFamily.rotation(lambda u: (1 + u, 1.0, 0.0, 0.0), 2)  # phi = u + u^2/2
    d = curvature_from_potential(fam, np.array([0.5, 0.2j]))
    with pytest.raises(NotKahlerEinsteinError):
        tycz_a3_pipeline_ke(d, 0.0)


def test_model_space_coefficients():
    flat = model_space_data("flat", 2)
    assert flat.a1 == flat.a2 == flat.a3 == 0
    for model in ("projective", "hyperbolic"):
        m2 = model_space_data(model, 2)
        assert m2.homogeneity_defect < 1e-10
        assert m2.a3 == pytest.approx(0, abs=1e-12)
        m3 = model_space_data(model, 3)
        assert abs(m3.a3) > 1e-3
    assert model_space_data("projective", 2).a1 == pytest.approx(3.0)
    assert model_space_data("hyperbolic", 2, 3.0).lam == pytest.approx(1.0)


def test_json_layout():
    d = curvature_from_potential(model_potential("projective", 2), np.array([0.2 + 0.1j, -0.1j]))
    doc = json.loads(kahler_point_to_json(d))
    riem = np.array(doc["riem"]["re"]) + 1j * np.array(doc["riem"]["im"])
    assert np.array_equal(riem.reshape(2, 2, 2, 2), d.riem)
    assert doc["R2"] == d.R2


def test_point_shape_and_family_validation():
    with pytest.raises(ValueError):
        curvature_from_potential(model_potential("flat", 2), np.zeros(3))
    with pytest.raises(ValueError):
        PotentialFamily("cone", 2, lambda u: (1, 0, 0, 0))
    with pytest.raises(ValueError):
        model_potential("projective", 2, -1.0)
