"""Curvature invariants of the n = 2 Calabi metric as functions of r.

Every closed form here is a signed sum of monomials ``c r^i e^{jy} y'^k``,
stored as ``(c, i, j, k)`` tuples. That keeps the expanded expressions easy to
audit term by term and lets the chain rule act on each monomial.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .calabi_ode import ProfileError, RadialProfile, ode_residual
from .extrapolate import LimitFit, boundary_limit, origin_limit
from .series import TaylorPoly, riemann_norm2_series, series_derivative

__all__ = [
    "EINSTEIN_CONSTANT",
    "RIEMANN_HALF",
    "QUARTER_DR2_EXPANDED",
    "A_TERMS",
    "B_TERMS",
    "C_TERMS",
    "MetricAt",
    "DerivativePair",
    "CurvatureSample",
    "CurvatureTable",
    "BoundaryDecomposition",
    "AuxiliaryLimits",
    "LogTrickResult",
    "metric_at",
    "riemann_norm2",
    "riemann_norm2_derivative",
    "radial_laplacian",
    "a3_profile",
    "a3_error_bound",
    "boundary_limit_decomposition",
    "boundary_limits",
    "auxiliary_limits",
    "log_trick_check",
    "origin_R2_limit",
]

# Ric = +g for this metric with R = d dbar g - g^{-1} dg dbar g (see tensor_oracle)
EINSTEIN_CONSTANT = 1.0
N_DIM = 2

# |R|^2 / 2, ten terms
RIEMANN_HALF = (
    (2, 0, 0, 0),
    (-8, 1, 1, -3),
    (1, -4, -2, 4),
    (4, -1, 0, -1),
    (12, 2, 2, -6),
    (-2, -3, -1, 1),
    (-12, 0, 1, -4),
    (6, -5, -2, 3),
    (-12, -4, -1, 0),
    (12, -6, -2, 2),
)

# (1/4) d|R|^2/dr with y'' eliminated through the ODE, thirteen terms
QUARTER_DR2_EXPANDED = (
    (-4, 1, 1, -2),
    (24, 2, 2, -5),
    (-36, 3, 3, -8),
    (-8, -5, -2, 4),
    (-1, -4, -2, 5),
    (3, -3, -1, 2),
    (-3, -2, 0, -1),
    (18, -4, -1, 1),
    (-27, -6, -2, 3),
    (36, -5, -1, 0),
    (-36, -7, -2, 2),
    (36, 1, 2, -6),
    (-12, 0, 1, -3),
)

A_TERMS = (
    (-8, -5, -2, 5),
    (18, -4, -1, 2),
    (-27, -6, -2, 4),
    (36, -5, -1, 1),
    (-36, -7, -2, 3),
)
B_TERMS = (
    (-1, -4, -2, 6),
    (3, -3, -1, 3),
    (-3, -2, 0, 0),
)
C_TERMS = (
    (-4, 1, 1, -1),
    (24, 2, 2, -4),
    (-36, 3, 3, -7),
    (36, 1, 2, -5),
    (-12, 0, 1, -2),
)


def _term_values(terms, r, y, p):
    r, y, p = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (r, y, p)))
    return np.stack([c * r**i * np.exp(j * y) * p**k for c, i, j, k in terms])


def _eval(terms, r, y, p):
    return _term_values(terms, r, y, p).sum(axis=0)


def _eval_chain(terms, r, y, p, ypp, y3):
    """Value, first and second r-derivative of a monomial sum by the chain rule."""
    T = _term_values(terms, r, y, p)
    c = np.array([t[1:] for t in terms], dtype=float)
    i, j, k = (c[:, m][:, None] for m in range(3))
    g1 = i / r + j * p + k * ypp / p
    g1p = -i / r**2 + j * ypp + k * (y3 / p - ypp**2 / p**2)
    return T.sum(axis=0), (T * g1).sum(axis=0), (T * (g1**2 + g1p)).sum(axis=0)


def _scale(terms, r, y, p):
    return np.abs(_term_values(terms, r, y, p)).sum(axis=0)


@dataclass(frozen=True)
class MetricAt:
    G: np.ndarray
    Ginv: np.ndarray


def metric_at(x1: float, x2: float, profile: RadialProfile) -> MetricAt:
    r = float(np.hypot(x1, x2))
    if not 0 < r <= profile.r_max:
        raise ValueError(f"r = {r} outside profile coverage")
    _, p, ypp, _, _ = profile.at(r)[0]
    u = p / r
    x = np.array([x1, x2])
    xx = np.outer(x, x) / r**2
    G = u * np.eye(2) + (ypp - u) * xx
    Ginv = (1 / u) * np.eye(2) + (1 / ypp - 1 / u) * xx
    return MetricAt(G, Ginv)


def _series_region(profile: RadialProfile, r):
    R2 = _R2_series(profile)
    d1 = series_derivative(R2)
    return R2(r), d1(r), series_derivative(d1)(r)


def _R2_series(profile: RadialProfile):
    return _R2_series_cached(profile.series)


@functools.lru_cache(maxsize=8)
def _R2_series_cached(series):
    return riemann_norm2_series(series)


def riemann_norm2(r, profile: RadialProfile, closed_form_only: bool = False):
    """``|R|^2`` at radius ``r``.

    Below ``profile.switch_radius`` the value comes from the origin series
    (the closed form cancels like ``r^-6`` there) unless ``closed_form_only``.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    y, p = profile.at(r)[:, :2].T
    out = 2 * _eval(RIEMANN_HALF, r, y, p)
    if not closed_form_only:
        near = r <= profile.switch_radius
        if np.any(near):
            out[near] = _R2_series(profile)(r[near])
    return out


@dataclass(frozen=True)
class DerivativePair:
    expanded: np.ndarray
    differentiated: np.ndarray


def riemann_norm2_derivative(r, profile: RadialProfile) -> DerivativePair:
    """``d|R|^2/dr`` from the expanded 13-term closed form and by the chain rule.

    The chain-rule route uses the profile's ``y''`` and ``y'''`` rather than
    the ODE, so the two routes agree only as well as the ODE is satisfied.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    y, p, ypp, y3, _ = profile.at(r).T
    expanded = 4 * _eval(QUARTER_DR2_EXPANDED, r, y, p)
    _, d1, _ = _eval_chain(RIEMANN_HALF, r, y, p, ypp, y3)
    return DerivativePair(expanded, 2 * d1)


def radial_laplacian(fp, fpp, r, profile: RadialProfile):
    """Laplacian ``f''/y'' + f'/y'`` of a radial function on the n = 2 metric."""
    s = profile.at(r)
    return np.asarray(fpp) / s[:, 2] + np.asarray(fp) / s[:, 1]


@dataclass(frozen=True)
class CurvatureSample:
    r: float
    R2: float
    dR2: float
    d2R2: float
    lapR2: float
    a1: float
    a2: float
    a3: float
    sigma: float


@dataclass(frozen=True, eq=False)
class CurvatureTable:
    r: np.ndarray
    R2: np.ndarray
    dR2: np.ndarray
    d2R2: np.ndarray
    lapR2: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray
    sigma: np.ndarray

    def __len__(self):
        return self.r.size

    def __getitem__(self, i) -> CurvatureSample:
        return CurvatureSample(*(float(getattr(self, f)[i]) for f in self.__dataclass_fields__))


def _curvature_arrays(profile: RadialProfile, r):
    s = profile.at(r)
    y, p, ypp, y3 = s[:, 0], s[:, 1], s[:, 2], s[:, 3]
    R2, d1, d2 = _eval_chain(RIEMANN_HALF, r, y, p, ypp, y3)
    R2, d1, d2 = 2 * R2, 2 * d1, 2 * d2
    near = r <= profile.switch_radius
    if np.any(near):
        R2[near], d1[near], d2[near] = _series_region(profile, r[near])
    return R2, d1, d2, p, ypp


def a3_profile(profile: RadialProfile, r=None) -> CurvatureTable:
    """Per-radius ``|R|^2``, its derivatives, ``Delta|R|^2`` and a1, a2, a3.

    With n = 2 the KE formulas reduce to ``a2 = (|R|^2 + 4 lam^2)/24`` and
    ``a3 = Delta|R|^2 / 48``. The profile must satisfy the ODE; anything
    else (a synthetic flat profile, say) is rejected.
    """
    res = ode_residual(profile)
    if res > profile.config.residual_tol:
        raise ProfileError(f"profile violates the Calabi ODE (residual {res:.3g})")
    r = profile.grid if r is None else np.atleast_1d(np.asarray(r, dtype=float))
    R2, d1, d2, p, ypp = _curvature_arrays(profile, r)
    lap = d2 / ypp + d1 / p
    lam, n = EINSTEIN_CONSTANT, N_DIM
    sigma = np.full_like(r, n * lam)
    a1 = -sigma / 2
    a2 = (R2 + n * lam**2 * (3 * n - 4)) / 24
    a3 = (lap - lam * (n - 2) * (lam**2 * n * (n - 2) + R2)) / 48
    return CurvatureTable(r, R2, d1, d2, lap, a1, a2, a3, sigma)


def a3_error_bound(profile: RadialProfile, r: float, h_rel: float = 1e-3) -> float:
    """Numerical error bound for ``a3(r)``.

    Sum of (i) the gap between ``Delta|R|^2`` built from chain-rule derivatives
    and from an independent route (origin series below the switch radius,
    otherwise the expanded first derivative plus a Richardson-extrapolated
    centered difference of it), and (ii) a rounding bound over all terms.
    """
    rr = np.array([float(r)])
    s = profile.at(rr)
    y, p, ypp, y3 = s[0, :4]
    _, d1, d2 = _eval_chain(RIEMANN_HALF, rr, y, p, ypp, y3)
    lap_chain = (2 * d2[0]) / ypp + (2 * d1[0]) / p
    eps = np.finfo(float).eps
    if r <= profile.switch_radius:
        # the value in use comes from the series: bound its truncation by
        # dropping the last two even orders, and its rounding by |coeffs|
        full = _R2_series(profile)
        short = full.truncate(full.order - 4)
        absd = TaylorPoly(np.abs(np.asarray(full.coeffs, dtype=float)))
        lap = []
        for ser in (full, short, absd):
            d1s = series_derivative(ser)
            lap.append(series_derivative(d1s)(r) / ypp + d1s(r) / p)
        return float((abs(lap[0] - lap[1]) + 64 * eps * lap[2]) / 48)
    else:
        h = h_rel * min(r, profile.a_estimate - r)

        def fd(hh):
            f = riemann_norm2_derivative(np.array([r - hh, r + hh]), profile).expanded
            return (f[1] - f[0]) / (2 * hh)

        d2_alt = (4 * fd(h / 2) - fd(h)) / 3
        d1_alt = riemann_norm2_derivative(rr, profile).expanded[0]
        lap_alt = d2_alt / ypp + d1_alt / p
    rounding = 64 * eps * (_scale(RIEMANN_HALF, rr, y, p)[0] * (1 / ypp + 1 / p) * (1 + p**2 + 1 / r**2))
    return float((abs(lap_chain - lap_alt) + rounding) / 48)


@dataclass(frozen=True)
class BoundaryDecomposition:
    r: float
    A: float
    B: float
    C: float
    total: float
    scale: float


def boundary_limit_decomposition(profile: RadialProfile, radii) -> list[BoundaryDecomposition]:
    """Groups ``A, B, C`` of ``(1/4) y' d|R|^2/dr`` at the given radii.

    ``total`` is the chain-rule value of ``(1/4) y' d|R|^2/dr``; ``scale`` is
    the sum of the absolute values of all group terms, the natural yardstick
    for the recombination error near the boundary where the terms of ``C``
    grow like ``y'^2``.
    """
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    if np.any(radii > profile.r_max) or np.any(radii <= 0):
        raise ValueError("radii beyond profile coverage")
    y, p, ypp, y3, _ = profile.at(radii).T
    A = _eval(A_TERMS, radii, y, p)
    B = _eval(B_TERMS, radii, y, p)
    C = _eval(C_TERMS, radii, y, p)
    _, d1, _ = _eval_chain(RIEMANN_HALF, radii, y, p, ypp, y3)
    total = 0.25 * p * 2 * d1
    scale = sum(_scale(T, radii, y, p) for T in (A_TERMS, B_TERMS, C_TERMS))
    return [
        BoundaryDecomposition(*(float(v) for v in row))
        for row in zip(radii, A, B, C, total, scale)
    ]


def _boundary_radii(profile: RadialProfile, window):
    a = profile.a_estimate
    d = a - profile.grid
    sel = (d >= window[0] * a) & (d <= window[1] * a)
    return profile.grid[sel], d[sel]


DEFAULT_WINDOWS = {
    "R2": (1e-7, 1e-4),
    "A": (1e-6, 1e-4),
    "B": (1e-7, 1e-4),
    "C": (1e-5, 1e-3),
    "yp_dR2": (1e-5, 1e-3),
    "ey_yp3": (1e-7, 1e-4),
    "cubic": (1e-6, 1e-4),
}


def boundary_limits(profile: RadialProfile, windows: dict | None = None) -> dict[str, LimitFit]:
    """Extrapolated ``r -> a`` limits of |R|^2, A, B, C and y' d|R|^2/dr."""
    w = {**DEFAULT_WINDOWS, **(windows or {})}
    out = {}
    r, d = _boundary_radii(profile, (min(v[0] for v in w.values()), max(v[1] for v in w.values())))
    dec = boundary_limit_decomposition(profile, r)
    a = profile.a_estimate
    series = {
        "R2": riemann_norm2(r, profile),
        "A": np.array([x.A for x in dec]),
        "B": np.array([x.B for x in dec]),
        "C": np.array([x.C for x in dec]),
        "yp_dR2": 4 * np.array([x.A + x.B + x.C for x in dec]),
    }
    for name, vals in series.items():
        lo, hi = w[name]
        out[name] = boundary_limit(d, vals, (lo * a, hi * a))
    return out


@dataclass(frozen=True)
class AuxiliaryLimits:
    lim_ey_yp3: LimitFit
    lim_cubic: LimitFit
    cubic_growth: np.ndarray
    cubic_delta: np.ndarray


def auxiliary_limits(profile: RadialProfile, windows: dict | None = None) -> AuxiliaryLimits:
    """Limits of ``e^y/y'^3`` and ``(y'^3 - 3 r e^y)/y'^2`` as r -> a.

    ``cubic_growth`` samples ``y'^3 - 3 r e^y`` across the boundary layer
    (at the ``cubic_delta`` distances) to witness its divergence.
    """
    w = {**DEFAULT_WINDOWS, **(windows or {})}
    a = profile.a_estimate
    r, d = _boundary_radii(profile, (1e-12, 0.5))
    y, p = profile.at(r)[:, :2].T
    q = np.exp(y - 3 * np.log(p))
    Z = p - 3 * r * np.exp(y - 2 * np.log(p))
    lo, hi = w["ey_yp3"]
    f1 = boundary_limit(d, q, (lo * a, hi * a))
    lo, hi = w["cubic"]
    f2 = boundary_limit(d, Z, (lo * a, hi * a))
    cubic = Z * p**2
    idx = np.unique(np.linspace(0, r.size - 1, 12).astype(int))
    return AuxiliaryLimits(f1, f2, cubic[idx], d[idx])


@dataclass(frozen=True)
class LogTrickResult:
    is_constant: bool
    max_dev: float
    boundary_value: float
    values: np.ndarray


def log_trick_check(profile: RadialProfile, dR2=None, tol: float = 1e-8) -> LogTrickResult:
    """Is ``y' d|R|^2/dr`` constant on the interior?

    ``Delta|R|^2 = 0`` forces it to be, so a non-constant result certifies
    ``a3 != 0`` somewhere. ``dR2`` may be supplied (one value per grid point)
    to test the detector on synthetic input.
    """
    r = profile.grid
    a = profile.a_estimate
    interior = (r >= 0.05 * a) & (r <= 0.95 * a)
    if dR2 is None:
        _, d1, _, _, _ = _curvature_arrays(profile, r)
    else:
        d1 = np.asarray(dR2, dtype=float)
    vals = profile.yp * d1
    inner = vals[interior]
    max_dev = float(np.max(np.abs(inner - inner.mean())))
    try:
        bv = boundary_limit(a - r, vals, (1e-5 * a, 1e-3 * a)).estimate
    except ValueError:
        bv = float("nan")
    if dR2 is not None and not np.any(d1):
        bv = 0.0
    return LogTrickResult(max_dev < tol, max_dev, float(bv), inner)


def origin_R2_limit(profile: RadialProfile, r_hi_fraction: float = 0.1) -> LimitFit:
    r = profile.grid
    hi = r_hi_fraction * profile.a_estimate
    sel = r <= hi
    return origin_limit(r[sel], riemann_norm2(r[sel], profile), hi)
