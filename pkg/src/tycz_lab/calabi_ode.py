"""Calabi's singular Cauchy problem ``(y'/r)^(n-1) y'' = e^y`` on (0, a).

The origin is handled by the Taylor series from :mod:`tycz_lab.series`; past
``switch_radius`` an adaptive Taylor-series integrator advances ``(y, y')``
until ``y'`` exceeds ``p_max``. Each accepted step keeps its local polynomials,
so the profile can be evaluated anywhere on ``(0, r_max]``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .series import (
    TaylorPoly,
    as_scalar,
    calabi_series,
    scalar_exp,
    series_derivative,
    working_precision,
)

__all__ = [
    "SolverConfig",
    "RadialProfile",
    "BoundaryEstimate",
    "ProfileError",
    "solve_profile",
    "estimate_boundary",
    "ode_residual",
    "derivative_cascade",
    "profile_to_csv",
    "profile_metadata",
]

_EPS = np.finfo(float).eps


class ProfileError(RuntimeError):
    """The solve could not produce a profile meeting its contract."""


@dataclass(frozen=True)
class SolverConfig:
    taylor_order: int = 30
    series_order: int = 64
    rtol: float = 1e-16
    p_max: float = 1e8
    points_per_decade: int = 200
    origin_fraction: float = 1e-3
    switch_tol: float = 1e-14
    residual_tol: float = 1e-9
    max_steps: int = 5000
    precision: str = "double"

    def __post_init__(self):
        if self.rtol <= 0 or self.residual_tol <= 0 or self.switch_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.taylor_order < 8:
            raise ValueError("taylor_order must be >= 8")
        if self.precision not in ("double", "extended"):
            raise ValueError(f"unknown precision {self.precision!r}")


def derivative_cascade(r, y, yp, ypp, n: int = 2):
    """``y'''`` and ``y''''`` from differentiating ``y'' = e^y r^(n-1) / y'^(n-1)``.

    With ``L = y' + (n-1)/r - (n-1) y''/y'`` the log-derivative of ``y''``,
    ``y''' = y'' L`` and ``y'''' = y''' L + y'' L'``.
    """
    m = n - 1
    L = yp + m / r - m * ypp / yp
    y3 = ypp * L
    dL = ypp - m / r**2 - m * (y3 * yp - ypp**2) / yp**2
    return y3, y3 * L + ypp * dL


@dataclass(frozen=True, eq=False)
class _DenseSteps:
    r0: np.ndarray
    h: np.ndarray
    ycoef: np.ndarray
    pcoef: np.ndarray
    local_err: np.ndarray

    def locate(self, r):
        idx = np.searchsorted(self.r0, r, side="right") - 1
        return np.clip(idx, 0, self.r0.size - 1)

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        idx = self.locate(r)
        t = r - self.r0[idx]
        yc, pc = self.ycoef[idx], self.pcoef[idx]
        K = yc.shape[-1] - 1
        y = yc[..., K].copy()
        p = pc[..., K].copy()
        dp = pc[..., K] * K
        for k in range(K - 1, -1, -1):
            y = y * t + yc[..., k]
            p = p * t + pc[..., k]
            if k:
                dp = dp * t + pc[..., k] * k
        return y, p, dp


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Sampled solution with dense output.

    ``samples`` has columns ``(y, y', y'', y''', y'''')``; ``y_err`` is the
    per-point error estimate for ``y``.
    """

    n: int
    y0: float
    grid: np.ndarray
    samples: np.ndarray
    a_estimate: float
    a_uncertainty: float
    switch_radius: float
    series: TaylorPoly
    y_err: np.ndarray
    config: SolverConfig = field(default_factory=SolverConfig)
    _steps: _DenseSteps | None = field(default=None, repr=False)

    @property
    def r_max(self) -> float:
        return float(self.grid[-1])

    @property
    def y(self):
        return self.samples[:, 0]

    @property
    def yp(self):
        return self.samples[:, 1]

    @property
    def ypp(self):
        return self.samples[:, 2]

    def at(self, r) -> np.ndarray:
        """``(y, y', y'', y''', y'''')`` at arbitrary radii in ``(0, r_max]``."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if np.any(r <= 0) or np.any(r > self.r_max * (1 + 1e-14)):
            raise ValueError(f"radius outside profile coverage (0, {self.r_max}]")
        out = np.empty((r.size, 5))
        near = r <= self.switch_radius
        if np.any(near):
            out[near] = _series_samples(self.series, r[near])
        far = ~near
        if np.any(far):
            y, p, ypp = self._steps.evaluate(r[far])
            y3, y4 = derivative_cascade(r[far], y, p, ypp, self.n)
            out[far] = np.column_stack([y, p, ypp, y3, y4])
        return out

    def with_samples(self, samples: np.ndarray) -> "RadialProfile":
        """Copy with replaced samples (for sensitivity and contract tests)."""
        return RadialProfile(
            self.n, self.y0, self.grid, np.asarray(samples, dtype=float),
            self.a_estimate, self.a_uncertainty, self.switch_radius, self.series,
            self.y_err, self.config, self._steps,
        )


def _series_samples(series: TaylorPoly, r: np.ndarray) -> np.ndarray:
    s = series.to_float()
    cols = [s]
    for _ in range(4):
        cols.append(series_derivative(cols[-1]))
    return np.column_stack([c(r) for c in cols])


def _switch_radius(series: TaylorPoly, tol: float) -> float:
    """Largest r where the estimated next omitted term of ``y''`` is below ``tol``."""
    c = [abs(float(v)) for v in series.coeffs]
    N = series.order
    b_next = c[N] ** 2 / c[N - 2]
    scale = (N + 2) * (N + 1) * b_next
    return (tol / scale) ** (1.0 / N)


def _taylor_step_coeffs(r0, y0, p0, n: int, K: int, extended: bool):
    """Taylor coefficients of ``y`` and ``y'`` about ``r0`` to degree ``K``.

    ``y' = p``, ``p' = (r0+t)^(n-1) e^y / p^(n-1)`` with ``e^y`` and
    ``p^(n-1)`` advanced by their own Cauchy-product recurrences.
    """
    zero = mpmath.mpf(0) if extended else 0.0
    dtype = object if extended else float
    Y = np.array([zero] * (K + 1), dtype=dtype)
    P = Y.copy()
    E = Y.copy()
    W = Y.copy()
    F = Y.copy()
    Rm = Y.copy()
    m = n - 1
    for j in range(min(m, K) + 1):
        Rm[j] = math.comb(m, j) * r0 ** (m - j)
    Y[0], P[0] = y0, p0
    E[0] = scalar_exp(y0)
    W[0] = p0**m
    for k in range(K):
        num = np.dot(Rm[: k + 1], E[k::-1])
        F[k] = (num - np.dot(W[1 : k + 1], F[k - 1 :: -1][:k])) / W[0] if k else num / W[0]
        P[k + 1] = F[k] / (k + 1)
        Y[k + 1] = P[k] / (k + 1)
        j = np.arange(1, k + 2)
        E[k + 1] = np.dot(j * Y[1 : k + 2], E[k::-1]) / (k + 1)
        if m:
            W[k + 1] = np.dot(((m + 1) * j - (k + 1)) * P[1 : k + 2], W[k::-1]) / ((k + 1) * p0)
    return Y, P


def _step_size(Y, P, rtol: float) -> float:
    K = Y.size - 1
    h = math.inf
    for coef, scale in ((Y, max(1.0, abs(float(Y[0])))), (P, abs(float(P[0])))):
        for k in (K - 1, K):
            ck = abs(float(coef[k]))
            if ck > 0:
                h = min(h, (rtol * scale / ck) ** (1.0 / k))
    return h


def _fit_blowup(r: np.ndarray, p: np.ndarray) -> tuple[float, float]:
    """Fit ``r + 3/p = a + c s^2 + d s^3`` with ``s = 1/p`` over the last steps."""
    s = 1.0 / p
    target = r + 3.0 * s

    def fit(k):
        A = np.column_stack([np.ones(k), s[-k:] ** 2, s[-k:] ** 3])
        coef, *_ = np.linalg.lstsq(A, target[-k:], rcond=None)
        return coef[0]

    a1, a2 = fit(8), fit(14)
    return a1, abs(a1 - a2) + abs(target[-1] - a1) * 1e-3


def _integrate(y0, n: int, cfg: SolverConfig, series: TaylorPoly, r_switch: float):
    ext = cfg.precision == "extended"
    r = as_scalar(r_switch, cfg.precision)
    ys = series(r)
    ps = series_derivative(series)(r)
    r0s, hs, ycs, pcs, errs = [], [], [], [], []
    ends_r, ends_p = [], []
    y, p = ys, ps
    for _ in range(cfg.max_steps):
        Y, P = _taylor_step_coeffs(r, y, p, n, cfg.taylor_order, ext)
        h = _step_size(Y, P, cfg.rtol)
        if not math.isfinite(h) or h <= 0:
            raise ProfileError(f"step size collapsed at r={float(r)}")
        hh = as_scalar(h, cfg.precision)
        powers = np.array([hh**k for k in range(Y.size)], dtype=Y.dtype)
        y_new = np.dot(Y, powers)
        p_new = np.dot(P, powers)
        r0s.append(float(r))
        hs.append(h)
        ycs.append([float(v) for v in Y])
        pcs.append([float(v) for v in P])
        errs.append(abs(float(Y[-1])) * h ** (Y.size - 1) + abs(float(Y[-2])) * h ** (Y.size - 2))
        r, y, p = r + hh, y_new, p_new
        ends_r.append(float(r))
        ends_p.append(float(p))
        if p > cfg.p_max:
            break
    else:
        raise ProfileError("max_steps reached before y' exceeded p_max")
    steps = _DenseSteps(
        np.array(r0s), np.array(hs), np.array(ycs), np.array(pcs), np.array(errs)
    )
    return steps, np.array(ends_r), np.array(ends_p)


def _build_grid(a: float, r_end: float, r_switch: float, ppd: int, origin_fraction: float) -> np.ndarray:
    lo = origin_fraction * a
    half = 0.5 * a
    n_lo = max(2, int(math.ceil(ppd * math.log10(half / lo))) + 1)
    inner = np.geomspace(lo, half, n_lo)
    d_hi, d_lo = a - half, a - r_end
    n_hi = max(2, int(math.ceil(ppd * math.log10(d_hi / d_lo))) + 1)
    outer = a - np.geomspace(d_hi, d_lo, n_hi)
    grid = np.unique(np.concatenate([inner, outer, [r_switch]]))
    return grid[(grid > 0) & (grid <= r_end)]


def solve_profile(y0: float = 0.0, n: int = 2, config: SolverConfig | None = None) -> RadialProfile:
    cfg = config or SolverConfig()
    if n < 2:
        raise ValueError("n must be >= 2")
    with working_precision(cfg.precision):
        series = calabi_series(y0, n, cfg.series_order, cfg.precision)
        r_switch = _switch_radius(series, cfg.switch_tol)
        steps, ends_r, ends_p = _integrate(y0, n, cfg, series, r_switch)
    series_f = series.to_float()
    if ends_r.size < 14:
        raise ProfileError("blow-up reached before minimum grid coverage")
    a, a_unc = _fit_blowup(ends_r, ends_p)
    r_end = float(ends_r[-1])
    grid = _build_grid(a, r_end, r_switch, cfg.points_per_decade, cfg.origin_fraction)
    proto = RadialProfile(
        n, float(y0), grid, np.empty((0, 5)), a, a_unc, r_switch, series_f,
        np.empty(0), cfg, steps,
    )
    samples = proto.at(grid)
    nsteps = np.searchsorted(steps.r0, grid, side="right")
    acc = np.concatenate([[0.0], np.cumsum(steps.local_err)])[nsteps]
    y, p = samples[:, 0], samples[:, 1]
    y_err = acc + 10 * (nsteps + 1) * (cfg.rtol + _EPS) * (np.abs(y) + grid * np.abs(p))
    prof = RadialProfile(
        n, float(y0), grid, samples, a, a_unc, r_switch, series_f, y_err, cfg, steps
    )
    res = ode_residual(prof)
    if res > cfg.residual_tol:
        raise ProfileError(f"ODE residual {res:.3g} exceeds {cfg.residual_tol:.3g}")
    return prof


def ode_residual(profile: RadialProfile) -> float:
    """Max relative residual of ``(y'/r)^(n-1) y'' = e^y``.

    For the tube metric this is the Monge-Ampere identity ``det(f_ij) = e^f``.
    """
    r = profile.grid
    y, p, ypp = profile.y, profile.yp, profile.ypp
    lhs = (p / r) ** (profile.n - 1) * ypp
    return float(np.max(np.abs(lhs * np.exp(-y) - 1.0)))


@dataclass(frozen=True)
class BoundaryEstimate:
    a: float
    a_from_limit: float
    spread: float
    limit_ey_yp3: float


def estimate_boundary(profile: RadialProfile, window: tuple[float, float] = (1e-7, 1e-4)) -> BoundaryEstimate:
    """Blow-up radius two ways: step-end asymptotic fit, and ``1/(3 lim e^y/y'^3)``.

    The limit is extrapolated as a polynomial in ``s = 1/y'`` (which vanishes
    linearly at the boundary) from grid points with ``s`` inside ``window``
    scaled by ``a``.
    """
    if profile.yp[-1] < 1e6:
        raise ProfileError("profile not integrated deep enough (y' < 1e6)")
    r, y, p = profile.grid, profile.y, profile.yp
    s = 1.0 / p
    a = profile.a_estimate
    sel = (s >= window[0] * a) & (s <= window[1] * a)
    if sel.sum() < 20:
        raise ProfileError("too few boundary-layer points for extrapolation")
    ratio = np.exp(y[sel] - 3 * np.log(p[sel]))
    A = np.column_stack([np.ones(sel.sum()), s[sel], s[sel] ** 2])
    coef, *_ = np.linalg.lstsq(A, ratio, rcond=None)
    L = coef[0]
    a_lim = 1.0 / (3.0 * L)
    return BoundaryEstimate(a, a_lim, abs(a - a_lim) / a, L)


def profile_metadata(profile: RadialProfile) -> dict:
    return {
        "y0": profile.y0,
        "n": profile.n,
        "a_estimate": profile.a_estimate,
        "a_uncertainty": profile.a_uncertainty,
        "residual_max": ode_residual(profile),
        "switch_radius": profile.switch_radius,
        "r_max": profile.r_max,
        "points": int(profile.grid.size),
        "taylor_order": profile.config.taylor_order,
        "series_order": profile.config.series_order,
        "rtol": profile.config.rtol,
        "p_max": profile.config.p_max,
        "precision": profile.config.precision,
    }


def profile_to_csv(profile: RadialProfile) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "y", "yp", "ypp", "yppp", "ypppp"])
    for r, row in zip(profile.grid, profile.samples):
        w.writerow([f"{r:.17g}"] + [f"{v:.17g}" for v in row])
    return buf.getvalue()


def profile_from_csv(text: str) -> tuple[np.ndarray, np.ndarray]:
    rows = list(csv.reader(io.StringIO(text)))
    if rows[0] != ["r", "y", "yp", "ypp", "yppp", "ypppp"]:
        raise ValueError(f"unexpected header {rows[0]}")
    data = np.array([[float(v) for v in row] for row in rows[1:]])
    return data[:, 0], data[:, 1:]


def dump_metadata(profile: RadialProfile) -> str:
    return json.dumps(profile_metadata(profile), indent=2, sort_keys=True)
