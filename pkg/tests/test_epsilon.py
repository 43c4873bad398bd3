from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from tycz_lab.epsilon_models import (
    EpsilonSeries,
    IllConditionedFitError,
    QuadSettings,
    TrivialSectionSpaceError,
    calabi_section_norm,
    disc_monomial_norm,
    epsilon_disc,
    epsilon_flat,
    epsilon_projective,
    fit_expansion,
    lorentzian_integral,
    projective_monomial_norm,
    reduced_integrand,
    sample_epsilon,
)


@given(st.floats(0.5, 30), st.floats(-2, 2), st.floats(-2, 2))
def test_flat_epsilon_is_constant(alpha, x, y):
    assert epsilon_flat(alpha, 1, [complex(x, y)]) == pytest.approx(alpha / math.pi, rel=1e-12)


def test_flat_epsilon_is_unitarily_invariant():
    """Unitary change of coordinates mixes the monomial basis but not the sum."""
    rng = np.random.default_rng(1)
    q, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    z = np.array([0.7 - 0.2j, 0.3 + 1.1j])
    for alpha in (0.8, 3.0, 11.0):
        ref = (alpha / math.pi) ** 2
        assert epsilon_flat(alpha, 2, z) == pytest.approx(ref, rel=1e-12)
        assert epsilon_flat(alpha, 2, q @ z) == pytest.approx(ref, rel=1e-12)


@given(st.floats(1.1, 40), st.floats(0.5, 3.0), st.floats(0, 0.95))
@settings(max_examples=40)
def test_disc_epsilon_is_constant_and_positive(alpha, mu, rho):
    if alpha * mu <= 1.05:
        return
    e0 = epsilon_disc(alpha, mu, 0.0)
    assert e0 > 0
    assert e0 == pytest.approx((alpha - 1 / mu) / math.pi, rel=1e-12)
    assert epsilon_disc(alpha, mu, rho * np.exp(0.4j)) == pytest.approx(e0, rel=1e-9)


@pytest.mark.parametrize("k", [0, 1, 5, 20])
def test_disc_norm_beta_matches_quadrature(k):
    assert disc_monomial_norm(k, 3.5, 0.8, "quad") == pytest.approx(disc_monomial_norm(k, 3.5, 0.8), rel=1e-10)


@given(st.integers(1, 40), st.floats(0, 5))
@settings(max_examples=40)
def test_projective_epsilon_is_constant(m, x):
    assert epsilon_projective(m, 1, x) == pytest.approx((m + 1) / math.pi, rel=1e-12)


def test_projective_norms_by_quadrature():
    """``2 pi int_0^inf t^{2k+1} (1+t^2)^{-m-2} dt`` with the FS volume ``(1+|z|^2)^{-2}``."""
    for m, k in ((3, 0), (5, 2), (8, 8)):
        val, _ = integrate.quad(lambda t: 2 * math.pi * t ** (2 * k + 1) / (1 + t * t) ** (m + 2), 0, np.inf,
                                epsrel=1e-12)
        assert projective_monomial_norm(k, m) == pytest.approx(val, rel=1e-9)


def test_tail_control_stable_under_point_doubling():
    """Far points need far more terms; the summed value must not drift."""
    for alpha in (2.0, 9.0):
        near = epsilon_flat(alpha, 1, [1.0])
        far = epsilon_flat(alpha, 1, [2.0])
        assert far == pytest.approx(near, rel=1e-12)
        assert epsilon_disc(alpha, 1.0, 0.45) == pytest.approx(epsilon_disc(alpha, 1.0, 0.9), rel=1e-9)


def test_trivial_spaces_rejected():
    with pytest.raises(TrivialSectionSpaceError):
        epsilon_disc(1.0, 1.0)
    with pytest.raises(TrivialSectionSpaceError):
        disc_monomial_norm(0, 0.5, 1.0)
    with pytest.raises(ValueError):
        epsilon_disc(3.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        epsilon_flat(-1.0)
    with pytest.raises(ValueError):
        epsilon_projective(0)
    with pytest.raises(ValueError):
        epsilon_projective(3, n=2)


def test_fit_recovers_exact_polynomial():
    x = np.linspace(1, 30, 15)
    v = 0.7 * (x**2 - 1.5 * x + 0.25)
    fit = fit_expansion(EpsilonSeries("synthetic", x, v), 2)
    assert fit.c == pytest.approx(0.7, rel=1e-12)
    assert fit.a1_hat == pytest.approx(-1.5, abs=1e-10)
    assert fit.a2_hat == pytest.approx(0.25, abs=1e-9)
    assert fit.residual < 1e-13


def test_fit_is_stable_to_noise_and_subsets():
    s = sample_epsilon("projective", np.arange(1, 13), 0.3)
    base = fit_expansion(s, 1)
    rng = np.random.default_rng(0)
    noisy = EpsilonSeries(s.model, s.alphas, s.values * (1 + 1e-12 * rng.normal(size=s.values.size)))
    assert fit_expansion(noisy, 1).a1_hat == pytest.approx(base.a1_hat, abs=1e-9)
    sub = EpsilonSeries(s.model, s.alphas[2:], s.values[2:])
    assert fit_expansion(sub, 1).a1_hat == pytest.approx(base.a1_hat, abs=1e-9)
    assert base.a1_se < 1e-9


def test_model_fits():
    proj = fit_expansion(sample_epsilon("projective", np.arange(1, 13), 0.3), 1)
    assert proj.a1_hat == pytest.approx(1.0, abs=1e-10)
    disc = fit_expansion(sample_epsilon("disc", np.linspace(2, 20, 10), 0.3, mu=2.0), 1)
    assert disc.a1_hat == pytest.approx(-0.5, abs=1e-10)
    assert abs(disc.a2_hat) < 1e-9


def test_fit_guards():
    with pytest.raises(IllConditionedFitError):
        fit_expansion(EpsilonSeries("x", np.arange(1, 5.0), np.ones(4)), 1)
    with pytest.raises(IllConditionedFitError):
        fit_expansion(EpsilonSeries("x", np.linspace(10, 20, 8), np.ones(8)), 1)
    with pytest.raises(ValueError):
        sample_epsilon("sphere", [1, 2])


@pytest.mark.parametrize("C", [0.1, 1.0, 13.0])
def test_lorentzian(C):
    assert lorentzian_integral(C) == pytest.approx(2 * math.pi / math.sqrt(C), rel=1e-11)


def test_reduced_integrand_bounded(profile):
    a = profile.a_estimate
    th = np.linspace(0, 2 * np.pi, 40)
    for r in np.linspace(0, a, 30):
        v = reduced_integrand(r * np.cos(th), r * np.sin(th), 2.0, profile)
        assert np.all(np.isfinite(v)) and np.all(v >= 0)
        assert np.all(v <= np.pi**2 / (9 * a * a) * (1 + 1e-12))


def test_section_norm_against_cartesian_quadrature(profile):
    a = profile.a_estimate
    rep = calabi_section_norm(2.0, profile)
    ref, _ = integrate.dblquad(
        lambda x2, x1: reduced_integrand(x1, x2, 2.0, profile).item(),
        -a, a, lambda x1: -math.sqrt(max(a * a - x1 * x1, 0.0)), lambda x1: math.sqrt(max(a * a - x1 * x1, 0.0)),
        epsrel=1e-9,
    )
    assert rep.reduced_value == pytest.approx(ref, rel=1e-7)
    assert rep.finite and rep.relative_gap < 1e-4
    assert rep.tail_bound < 1e-5


def test_section_norm_grows_with_domain_and_falls_with_alpha(profile):
    small = calabi_section_norm(2.0, profile, QuadSettings(domain_fraction=0.5))
    full = calabi_section_norm(2.0, profile)
    heavier = calabi_section_norm(3.0, profile)
    assert small.reduced_value < full.reduced_value
    assert heavier.reduced_value < full.reduced_value
    with pytest.raises(ValueError):
        calabi_section_norm(1.0, profile)
