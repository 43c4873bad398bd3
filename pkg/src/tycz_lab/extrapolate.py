"""Endpoint limit estimation from sampled values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

__all__ = ["LimitFit", "boundary_limit", "origin_limit"]


@dataclass(frozen=True)
class LimitFit:
    estimate: float
    uncertainty: float
    exponent: float
    n_points: int


def _power_fit(d, q):
    # seed with the linear-in-d fit
    A = np.column_stack([np.ones_like(d), d])
    (q0, c0), *_ = np.linalg.lstsq(A, q, rcond=None)
    scale = np.max(np.abs(q - q0)) or 1.0

    def model(x, qinf, alpha, beta):
        return qinf + alpha * x**beta

    try:
        popt, pcov = curve_fit(
            model, d, q, p0=(q0, c0, 1.0), bounds=([-np.inf, -np.inf, 0.05], [np.inf, np.inf, 6.0]),
            x_scale=(scale, abs(c0) or 1.0, 1.0), maxfev=20000,
        )
    except RuntimeError:
        return q0, np.inf, 1.0
    return popt[0], float(np.sqrt(abs(pcov[0, 0]))), popt[2]


def boundary_limit(delta, values, window: tuple[float, float]) -> LimitFit:
    """Limit as ``delta -> 0`` from a fit ``q_inf + alpha delta^beta``.

    Only points with ``window[0] <= delta <= window[1]`` enter. The reported
    uncertainty combines the fit's standard error with the shift between the
    full-window fit and a fit on the inner half (in log-delta) of the window.
    """
    delta = np.asarray(delta, dtype=float)
    values = np.asarray(values, dtype=float)
    sel = (delta >= window[0]) & (delta <= window[1]) & np.isfinite(values)
    if sel.sum() < 8:
        raise ValueError(f"only {sel.sum()} points inside window {window}")
    d, q = delta[sel], values[sel]
    est, se, beta = _power_fit(d, q)
    mid = np.sqrt(window[0] * window[1])
    inner = d <= mid
    if inner.sum() >= 6:
        est2, _, _ = _power_fit(d[inner], q[inner])
        shift = abs(est2 - est)
    else:
        shift = np.inf
    return LimitFit(float(est), float(se + shift), float(beta), int(sel.sum()))


def origin_limit(r, values, r_hi: float, degree: int = 6) -> LimitFit:
    """Limit as ``r -> 0`` from a least-squares even polynomial in ``r``."""
    r = np.asarray(r, dtype=float)
    values = np.asarray(values, dtype=float)
    sel = (r > 0) & (r <= r_hi)
    if sel.sum() < degree + 3:
        raise ValueError("too few points near the origin")
    x = r[sel] ** 2
    c = np.polynomial.polynomial.polyfit(x, values[sel], degree)
    c2 = np.polynomial.polynomial.polyfit(x, values[sel], degree - 1)
    return LimitFit(float(c[0]), float(abs(c[0] - c2[0])), 0.0, int(sel.sum()))
