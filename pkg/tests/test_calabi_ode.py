from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tycz_lab.calabi_ode import (
    SolverConfig,
    derivative_cascade,
    estimate_boundary,
    ode_residual,
    profile_from_csv,
    profile_to_csv,
    solve_profile,
)
from tycz_lab.series import calabi_series, series_derivative

A_REF = 2.624550017242768


def _rk4(y0: float, r0: float, r1: float, steps: int):
    """Plain fixed-step RK4 for the n = 2 system (y, y')' = (y', r e^y / y')."""
    s = calabi_series(y0, 2, 40)
    u = np.array([s(r0), series_derivative(s)(r0)])
    h = (r1 - r0) / steps
    f = lambda r, v: np.array([v[1], r * math.exp(v[0]) / v[1]])  # noqa: E731
    r = r0
    for _ in range(steps):
        k1 = f(r, u)
        k2 = f(r + h / 2, u + h / 2 * k1)
        k3 = f(r + h / 2, u + h / 2 * k2)
        k4 = f(r + h, u + h * k3)
        u = u + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        r += h
    return u


def test_matches_independent_rk4(profile):
    ref = _rk4(0.0, 0.01, 2.0, 4000)
    got = profile.at(2.0)[0]
    assert got[0] == pytest.approx(ref[0], abs=1e-9)
    assert got[1] == pytest.approx(ref[1], abs=1e-9)


def test_blowup_radius(profile):
    assert profile.a_estimate == pytest.approx(A_REF, rel=1e-12)
    be = estimate_boundary(profile)
    assert be.spread < 1e-6
    assert profile.yp[-1] > 1e6
    assert profile.ypp[-1] > 1e12  # y'' diverges at the boundary


@pytest.mark.parametrize("y0", [-1.0, 0.5, 2.0])
def test_scaling_symmetry(profile, y0):
    """y(lam r) + 4 log lam solves the same equation, so a(y0) = a(0) e^{-y0/4}."""
    other = solve_profile(y0, 2)
    assert other.a_estimate == pytest.approx(profile.a_estimate * math.exp(-y0 / 4), rel=1e-6)
    lam = math.exp(y0 / 4)
    r = np.array([0.3, 1.0, 2.0]) / lam
    assert np.allclose(other.at(r)[:, 0], profile.at(r * lam)[:, 0] + y0, atol=1e-9)


def test_determinism():
    a, b = solve_profile(0.0, 2), solve_profile(0.0, 2)
    assert np.array_equal(a.grid, b.grid)
    assert np.array_equal(a.samples, b.samples)
    assert profile_to_csv(a) == profile_to_csv(b)


def test_tolerance_refinement_is_stable():
    loose = solve_profile(0.0, 2, SolverConfig(rtol=1e-12))
    tight = solve_profile(0.0, 2, SolverConfig(rtol=1e-14))
    r = np.linspace(0.1, 2.5, 13)
    assert np.max(np.abs(loose.at(r)[:, 0] - tight.at(r)[:, 0])) < 1e-9
    assert loose.a_estimate == pytest.approx(tight.a_estimate, rel=1e-9)


def test_residual_small(profile):
    assert ode_residual(profile) < profile.config.residual_tol


def test_corrupted_second_derivative_is_detected(profile):
    bad = profile.samples.copy()
    bad[:, 2] *= 1 + 1e-3
    assert ode_residual(profile.with_samples(bad)) == pytest.approx(1e-3, rel=1e-3)


def test_series_only_residual():
    s = calabi_series(0.0, 2, 64)
    d1, d2 = series_derivative(s), series_derivative(series_derivative(s))
    r = np.linspace(1e-3, 1.2, 50)
    res = d1(r) / r * d2(r) * np.exp(-s(r)) - 1
    assert np.max(np.abs(res)) < 1e-13


def test_cascade_matches_finite_differences(profile):
    r = np.array([1.7, 2.0, 2.3])
    h = 1e-4
    d = profile.at(r)
    fd3 = (profile.at(r + h)[:, 2] - profile.at(r - h)[:, 2]) / (2 * h)
    fd4 = (profile.at(r + h)[:, 3] - profile.at(r - h)[:, 3]) / (2 * h)
    assert np.allclose(d[:, 3], fd3, rtol=1e-6)
    assert np.allclose(d[:, 4], fd4, rtol=1e-6)
    y3, y4 = derivative_cascade(r, d[:, 0], d[:, 1], d[:, 2])
    assert np.allclose(y3, d[:, 3]) and np.allclose(y4, d[:, 4])


def test_series_and_integrator_agree_at_switch(profile):
    rs = profile.switch_radius
    inside = profile.at(rs * (1 - 1e-9))[0]
    outside = profile.at(rs * (1 + 1e-9))[0]
    assert np.allclose(inside[:3], outside[:3], rtol=1e-8)


@given(st.floats(-2.0, 2.0))
@settings(max_examples=5, deadline=None)
def test_solution_is_increasing_and_convex(y0):
    p = solve_profile(y0, 2)
    assert np.all(np.diff(p.y) > 0)
    assert np.all(p.yp > 0) and np.all(p.ypp > 0)


def test_csv_round_trip(profile):
    r, s = profile_from_csv(profile_to_csv(profile))
    assert np.array_equal(r, profile.grid)
    assert np.array_equal(s, profile.samples)
    with pytest.raises(ValueError):
        profile_from_csv("x,y\n1,2\n")


def test_extended_precision_matches(profile):
    ext = solve_profile(0.0, 2, SolverConfig(precision="extended"))
    assert ext.a_estimate == pytest.approx(profile.a_estimate, rel=1e-12)


def test_invalid_config():
    with pytest.raises(ValueError):
        SolverConfig(rtol=0)
    with pytest.raises(ValueError):
        SolverConfig(precision="quad")


def test_coverage_guard(profile):
    with pytest.raises(ValueError):
        profile.at(0.0)
    with pytest.raises(ValueError):
        profile.at(3.0)
