"""Truncated power series in one variable and the Calabi origin recurrence.

Coefficients live in fixed-length arrays. In ``"double"`` precision they are
``float64``; in ``"extended"`` precision they are object arrays of
``mpmath.mpf`` so the same code paths run at higher working precision.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
import mpmath
import numpy as np

__all__ = [
    "TaylorPoly",
    "PQSTriple",
    "OriginLimits",
    "SeriesCancellationError",
    "EXTENDED_DPS",
    "as_scalar",
    "working_precision",
    "scalar_exp",
    "series_mul",
    "series_exp",
    "series_div",
    "series_pow",
    "series_derivative",
    "series_shift_down",
    "calabi_series",
    "pqs_series",
    "limit_origin_expressions",
    "riemann_norm2_series",
]

EXTENDED_DPS = 34
_MIN_PIVOT = 1e-300


class SeriesCancellationError(ArithmeticError):
    """Leading coefficients that should cancel did not."""


def working_precision(precision: str):
    """Context fixing the mpmath working precision for ``"extended"`` runs."""
    if precision == "extended":
        return mpmath.workdps(EXTENDED_DPS)
    return contextlib.nullcontext()


def as_scalar(value, precision: str = "double"):
    if precision == "extended":
        return mpmath.mpf(value)
    if precision == "double":
        return float(value)
    raise ValueError(f"unknown precision {precision!r}")


def scalar_exp(x):
    if isinstance(x, mpmath.mpf):
        return mpmath.exp(x)
    return math.exp(x)


def _zeros(n: int, extended: bool) -> np.ndarray:
    if extended:
        return np.array([mpmath.mpf(0)] * n, dtype=object)
    return np.zeros(n)


@dataclass(frozen=True, eq=False)
class TaylorPoly:
    """Truncated series ``c_0 + c_1 r + ... + c_N r^N`` about ``center``."""

    coeffs: np.ndarray
    center: float = 0.0

    def __post_init__(self):
        c = self.coeffs
        if not isinstance(c, np.ndarray):
            c = np.asarray(c, dtype=object if any(isinstance(v, mpmath.mpf) for v in c) else float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coeffs must be a non-empty 1-D array")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @property
    def extended(self) -> bool:
        return self.coeffs.dtype == object

    @classmethod
    def constant(cls, value, order: int, precision: str = "double") -> "TaylorPoly":
        c = _zeros(order + 1, precision == "extended")
        c[0] = as_scalar(value, precision)
        return cls(c)

    @classmethod
    def variable(cls, order: int, precision: str = "double") -> "TaylorPoly":
        c = _zeros(order + 1, precision == "extended")
        if order >= 1:
            c[1] = as_scalar(1, precision)
        return cls(c)

    def truncate(self, order: int) -> "TaylorPoly":
        if order > self.order:
            raise ValueError(f"cannot extend a series of order {self.order} to {order}")
        return TaylorPoly(self.coeffs[: order + 1], self.center)

    def __call__(self, r):
        """Horner evaluation; accepts scalars or arrays."""
        c = self.coeffs
        acc = c[-1] * np.ones_like(r) if isinstance(r, np.ndarray) else c[-1]
        for ck in c[-2::-1]:
            acc = acc * r + ck
        return acc

    def to_float(self) -> "TaylorPoly":
        return TaylorPoly(np.array([float(v) for v in self.coeffs]), self.center)

    def to_json(self) -> dict:
        return {
            "center": float(self.center),
            "order": self.order,
            "coeffs": [float(v) for v in self.coeffs],
        }

    @classmethod
    def from_json(cls, data: dict) -> "TaylorPoly":
        coeffs = np.asarray(data["coeffs"], dtype=float)
        if coeffs.size != data["order"] + 1:
            raise ValueError("order does not match number of coefficients")
        return cls(coeffs, data.get("center", 0.0))

    def _coerce(self, other) -> "TaylorPoly":
        if isinstance(other, TaylorPoly):
            if other.order != self.order:
                raise ValueError(f"order mismatch: {self.order} vs {other.order}")
            return other
        return TaylorPoly.constant(other, self.order, "extended" if self.extended else "double")

    def __add__(self, other):
        return TaylorPoly(self.coeffs + self._coerce(other).coeffs, self.center)

    __radd__ = __add__

    def __neg__(self):
        return TaylorPoly(-self.coeffs, self.center)

    def __sub__(self, other):
        return TaylorPoly(self.coeffs - self._coerce(other).coeffs, self.center)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, TaylorPoly):
            return series_mul(self, other)
        return TaylorPoly(self.coeffs * other, self.center)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TaylorPoly):
            return series_div(self, other)
        return TaylorPoly(self.coeffs / other, self.center)

    def __rtruediv__(self, other):
        return series_div(self._coerce(other), self)

    def __pow__(self, k: int):
        return series_pow(self, k)

    def __repr__(self):
        return f"TaylorPoly(order={self.order}, coeffs={list(self.coeffs[:4])}...)"


def series_mul(a: TaylorPoly, b: TaylorPoly) -> TaylorPoly:
    """Cauchy product truncated at the common order."""
    if a.order != b.order:
        raise ValueError(f"order mismatch: {a.order} vs {b.order}")
    ac, bc = a.coeffs, b.coeffs
    if not (a.extended or b.extended):
        return TaylorPoly(np.convolve(ac, bc)[: a.order + 1], a.center)
    out = _zeros(a.order + 1, True)
    for k in range(a.order + 1):
        out[k] = np.dot(ac[: k + 1], bc[k::-1])
    return TaylorPoly(out, a.center)


def series_exp(a: TaylorPoly) -> TaylorPoly:
    """exp of a series via ``b' = a' b``: ``k b_k = sum_j j a_j b_{k-j}``."""
    ac = a.coeffs
    out = _zeros(a.order + 1, a.extended)
    out[0] = scalar_exp(ac[0])
    j = np.arange(1, a.order + 1)
    ja = j * ac[1:]
    for k in range(1, a.order + 1):
        out[k] = np.dot(ja[:k], out[k - 1 :: -1][:k]) / k
    return TaylorPoly(out, a.center)


def series_div(a: TaylorPoly, b: TaylorPoly) -> TaylorPoly:
    """Quotient ``a / b``; requires a nonvanishing constant term in ``b``."""
    if a.order != b.order:
        raise ValueError(f"order mismatch: {a.order} vs {b.order}")
    b0 = b.coeffs[0]
    if abs(b0) <= _MIN_PIVOT:
        raise ZeroDivisionError("series division by a series with zero constant term")
    ac, bc = a.coeffs, b.coeffs
    out = _zeros(a.order + 1, a.extended or b.extended)
    for k in range(a.order + 1):
        s = ac[k] - np.dot(bc[1 : k + 1], out[k - 1 :: -1][:k]) if k else ac[0]
        out[k] = s / b0
    return TaylorPoly(out, a.center)


def series_pow(a: TaylorPoly, k: int) -> TaylorPoly:
    if k < 0:
        return series_div(TaylorPoly.constant(1, a.order, "extended" if a.extended else "double"), series_pow(a, -k))
    result = TaylorPoly.constant(1, a.order, "extended" if a.extended else "double")
    base = a
    while k:
        if k & 1:
            result = series_mul(result, base)
        k >>= 1
        if k:
            base = series_mul(base, base)
    return result


def series_derivative(a: TaylorPoly) -> TaylorPoly:
    """Derivative; the result has order ``N - 1``."""
    if a.order == 0:
        raise ValueError("cannot differentiate an order-0 series")
    k = np.arange(1, a.order + 1)
    return TaylorPoly(a.coeffs[1:] * k, a.center)


def series_shift_down(a: TaylorPoly, k: int, rtol: float = 1e-9) -> TaylorPoly:
    """Divide by ``r^k`` after checking that the first ``k`` coefficients cancel.

    Cancellation is judged relative to ``scale``, the largest coefficient
    magnitude among the ones that survive.
    """
    if k > a.order:
        raise SeriesCancellationError(f"order {a.order} too low to divide by r^{k}")
    head = [abs(float(v)) for v in a.coeffs[:k]]
    scale = max([abs(float(v)) for v in a.coeffs[k:]] + [1.0])
    if head and max(head) > rtol * scale:
        raise SeriesCancellationError(
            f"leading coefficients {head} do not cancel (scale {scale:.3g})"
        )
    return TaylorPoly(a.coeffs[k:], a.center)


def calabi_series(y0, n: int = 2, order: int = 32, precision: str = "double") -> TaylorPoly:
    """Taylor series at r = 0 of the solution of ``(y'/r)^(n-1) y'' = e^y``.

    The seed ``y''(0) = e^{y0/n}`` fixes ``b_2``. For ``k >= 1`` the coefficient
    ``b_{2k+2}`` enters the degree-``2k`` balance linearly with weight
    ``p^(n-1) (2k+2)(2k+n)``, ``p = e^{y0/n}``; everything else at that degree
    is already known.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if order < 6 or order % 2:
        raise ValueError("order must be even and >= 6")
    with working_precision(precision):
        return _calabi_series(y0, n, order, precision)


def _calabi_series(y0, n: int, order: int, precision: str) -> TaylorPoly:
    ext = precision == "extended"
    y0 = as_scalar(y0, precision)
    p = scalar_exp(y0 / n)
    c = _zeros(order + 1, ext)
    c[0] = y0
    c[2] = p / 2
    for k in range(1, order // 2):
        deg = 2 * k
        # only degrees <= deg matter; work at that truncation
        y = TaylorPoly(c[: deg + 3])
        P = series_shift_down(series_derivative(y), 1, rtol=math.inf).truncate(deg)
        ypp = series_derivative(series_derivative(y)).truncate(deg)
        lhs = series_mul(series_pow(P, n - 1), ypp).coeffs[deg]
        rhs = series_exp(y.truncate(deg)).coeffs[deg]
        c[deg + 2] = (rhs - lhs) / (p ** (n - 1) * (2 * k + 2) * (2 * k + n))
    return TaylorPoly(c)


@dataclass(frozen=True)
class PQSTriple:
    """``P = y'/r``, ``Q = P'/r``, ``S = Q'/r`` as series in r."""

    P: TaylorPoly
    Q: TaylorPoly
    S: TaylorPoly

    @property
    def c(self) -> np.ndarray:
        """Coefficients ``c_{2j}`` of P (with ``c_0 = e^{y0/2}`` when n = 2)."""
        return self.P.coeffs


def pqs_series(y: TaylorPoly) -> PQSTriple:
    odd = [abs(float(v)) for v in y.coeffs[1::2]]
    if odd and max(odd) != 0.0:
        raise ValueError("y has nonzero odd coefficients")
    P = series_shift_down(series_derivative(y), 1, rtol=0.0)
    Q = series_shift_down(series_derivative(P), 1, rtol=0.0)
    S = series_shift_down(series_derivative(Q), 1, rtol=0.0)
    return PQSTriple(P, Q, S)


@dataclass(frozen=True)
class OriginLimits:
    """The two origin limits of the |R|^2 closed form and the quantities they are built from.

    ``L1``/``L2`` come from dividing the numerator series by ``r^2``/``r^4``
    and reading the constant term; ``L1_lhopital``/``L2_lhopital`` evaluate
    the l'Hopital expressions in ``P, Q, S`` at r = 0.
    """

    L1: float
    L2: float
    inner1: float
    inner2: float
    L1_lhopital: float
    L2_lhopital: float
    order: int


def limit_origin_expressions(y: TaylorPoly) -> OriginLimits:
    """Origin limits of the two groups in the ``|R|^2`` closed form.

    Group 1: ``(-8E^3 + 4E^2P^2 - 2EP^4 + 6P^6) / r^2`` and, after the
    ``r^3/y'^3 e^{-2y}`` prefactor, ``L1``. Group 2:
    ``(E^4 - E^3P^2 - EP^6 + P^8) / r^4`` and ``L2``.
    """
    if y.order < 8:
        raise SeriesCancellationError(f"order {y.order} < 8 cannot resolve the r^4 cancellation")
    with working_precision("extended" if y.extended else "double"):
        return _limit_origin_expressions(y)


def _limit_origin_expressions(y: TaylorPoly) -> OriginLimits:
    pqs = pqs_series(y)
    P = pqs.P
    m = P.order
    E = series_exp(y.truncate(m))
    E2, E3 = E * E, E * E * E
    P2 = P * P
    P4 = P2 * P2
    P6 = P4 * P2
    num1 = -8 * E3 + 4 * E2 * P2 - 2 * E * P4 + 6 * P6
    num2 = E3 * E - E3 * P2 - E * P6 + P6 * P2
    g1 = series_shift_down(num1, 2)
    g2 = series_shift_down(num2, 4)
    pref1 = series_div(TaylorPoly.constant(1, m, "extended" if y.extended else "double"), P2 * P * E2)
    pref2 = series_div(TaylorPoly.constant(1, m, "extended" if y.extended else "double"), P6 * E2)
    L1 = (g1 * pref1.truncate(g1.order)).coeffs[0]
    L2 = (g2 * pref2.truncate(g2.order)).coeffs[0]

    # l'Hopital route: constant terms only
    e = scalar_exp(y.coeffs[0])
    p0, q0, s0 = pqs.P.coeffs[0], pqs.Q.coeffs[0], pqs.S.coeffs[0]
    inner1_h = (
        -24 * e**3 * p0 + 8 * e**2 * p0**3 + 8 * e**2 * p0 * q0
        - 8 * e * p0**3 * q0 - 2 * e * p0**5 + 36 * p0**5 * q0
    ) / 2
    inner2_h = (
        16 * e**4 * p0**2 + 4 * e**4 * q0 - 9 * e**3 * p0**4 - 9 * e**3 * p0**2 * q0
        - 6 * e**3 * p0**2 * q0 - 2 * e**3 * q0**2 - 2 * e**3 * p0 * s0 - e * p0**8
        - 7 * e * p0**6 * q0 - 6 * e * p0**6 * q0 - 30 * e * p0**4 * q0**2
        - 6 * e * p0**5 * s0 + 56 * p0**6 * q0**2 + 8 * p0**7 * s0
    ) / 8
    return OriginLimits(
        L1=L1,
        L2=L2,
        inner1=g1.coeffs[0],
        inner2=g2.coeffs[0],
        L1_lhopital=inner1_h / (p0**3 * e**2),
        L2_lhopital=inner2_h / (p0**6 * e**2),
        order=y.order,
    )


def riemann_norm2_series(y: TaylorPoly) -> TaylorPoly:
    """``|R|^2`` of the n = 2 Calabi metric as an even series about r = 0.

    Same grouping as :func:`limit_origin_expressions`; the result has order
    ``y.order - 6``.
    """
    with working_precision("extended" if y.extended else "double"):
        return _riemann_norm2_series(y)


def _riemann_norm2_series(y: TaylorPoly) -> TaylorPoly:
    pqs = pqs_series(y)
    P = pqs.P
    m = P.order
    one = TaylorPoly.constant(1, m, "extended" if y.extended else "double")
    E = series_exp(y.truncate(m))
    Einv2 = series_div(one, E * E)
    P2 = P * P
    P4 = P2 * P2
    P6 = P4 * P2
    E3 = E * E * E
    num1 = -8 * E3 + 4 * E * E * P2 - 2 * E * P4 + 6 * P6
    num2 = E3 * E - E3 * P2 - E * P6 + P6 * P2
    g1 = series_shift_down(num1, 2).truncate(m - 4)
    g2 = series_shift_down(num2, 4)
    k = g2.order
    half = (
        2
        + (P4 * Einv2).truncate(k)
        + (g1 * series_div(one, P2 * P).truncate(m - 4) * Einv2.truncate(m - 4)).truncate(k)
        + 12 * g2 * series_div(one, P6).truncate(k) * Einv2.truncate(k)
    )
    return 2 * half
