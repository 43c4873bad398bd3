"""Epsilon functions of model spaces and the weighted section norm on the tube.

Sections are orthonormalized against ``h(s, s) = e^{-alpha Phi} |s|^2`` with
the Riemannian volume of ``g = d dbar Phi`` in the Euclidean coordinates
(``dV = det(g) dA``, ``dA`` Lebesgue measure). Monomials are orthogonal for
every rotation-invariant ``Phi``, so each epsilon function is a sum of
``|z^k|^2 e^{-alpha Phi} / ||z^k||^2``.

``alpha`` is treated as a continuous weight exponent throughout; for the
projective line only integer levels ``m`` give a section space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .calabi_ode import RadialProfile

__all__ = [
    "ExpansionFit",
    "EpsilonSeries",
    "SectionNormReport",
    "QuadSettings",
    "TrivialSectionSpaceError",
    "IllConditionedFitError",
    "epsilon_flat",
    "epsilon_disc",
    "epsilon_projective",
    "disc_monomial_norm",
    "projective_monomial_norm",
    "sample_epsilon",
    "fit_expansion",
    "lorentzian_integral",
    "reduced_integrand",
    "calabi_section_norm",
]

TAIL_TOL = 1e-14


class TrivialSectionSpaceError(ValueError):
    """The weighted space has no nonzero monomials (all norms diverge)."""


class IllConditionedFitError(ValueError):
    """Too few samples, or too narrow a range, to fit the expansion."""


# ---------------------------------------------------------------------------
# series summation


def _sum_log_terms(log_term, ratio_bound, k_max: int = 200_000) -> tuple[float, float]:
    """Sum ``exp(log_term(k))`` for k = 0, 1, ... until the tail is negligible.

    ``ratio_bound(k)`` must bound ``t_{j+1}/t_j`` for all ``j >= k`` once the
    terms are decreasing; the tail after ``k`` is then at most
    ``t_k rho / (1 - rho)``. Returns ``(sum, tail_bound)``.
    """
    total = 0.0
    comp = 0.0
    for k in range(k_max):
        t = math.exp(log_term(k))
        # Kahan summation keeps the fixed-order sum reproducible to the last bit
        yk = t - comp
        s = total + yk
        comp = (s - total) - yk
        total = s
        rho = ratio_bound(k)
        if rho < 1:
            tail = t * rho / (1 - rho)
            if tail <= TAIL_TOL * total:
                return total, tail
    raise RuntimeError("monomial series did not converge")


def _abs2(point) -> np.ndarray:
    z = np.atleast_1d(np.asarray(point, dtype=complex))
    return np.abs(z) ** 2


def epsilon_flat(alpha: float, n: int = 1, point=None) -> float:
    """Epsilon function of ``C^n`` with ``Phi = |z|^2``.

    ``||z^k||^2 = pi k! / alpha^(k+1)`` in each coordinate; the sum is a
    product of one-variable sums, each equal to ``alpha/pi`` up to the tail.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    s = _abs2(np.zeros(n) if point is None else point)
    if s.size != n:
        raise ValueError(f"point must have {n} coordinates")
    out = 1.0
    for sj in s:
        x = alpha * sj
        if x == 0.0:
            out *= alpha / math.pi
            continue
        lx = math.log(x)
        val, _ = _sum_log_terms(
            lambda k: -x + k * lx - math.lgamma(k + 1) + math.log(alpha / math.pi),
            lambda k: x / (k + 1),
        )
        out *= val
    return out


def disc_monomial_norm(k: int, alpha: float, mu: float, method: str = "beta") -> float:
    """``||z^k||^2`` for ``Phi = -mu log(1 - |z|^2)`` on the unit disc.

    ``pi mu int_0^1 t^k (1-t)^(alpha mu - 2) dt = pi mu B(k+1, alpha mu - 1)``;
    ``method="quad"`` evaluates the radial integral numerically instead.
    """
    beta = alpha * mu - 1
    if beta <= 0:
        raise TrivialSectionSpaceError(
            f"alpha*mu = {alpha * mu:g} <= 1: every monomial has infinite norm"
        )
    if method == "beta":
        return math.pi * mu * math.exp(special.betaln(k + 1, beta))
    if method == "quad":
        val, _ = integrate.quad(lambda t: 1.0, 0.0, 1.0, weight="alg", wvar=(k, beta - 1),
                                epsabs=0.0, epsrel=1e-12, limit=200)
        return math.pi * mu * val
    raise ValueError(f"unknown method {method!r}")


def epsilon_disc(alpha: float, mu: float = 1.0, point=0.0) -> float:
    """Epsilon function of the unit disc with ``Phi = -mu log(1 - |z|^2)``."""
    beta = alpha * mu - 1
    if beta <= 0:
        raise TrivialSectionSpaceError(
            f"alpha*mu = {alpha * mu:g} <= 1: the weighted space is {{0}}"
        )
    (s,) = _abs2(point)
    if s >= 1:
        raise ValueError("point outside the unit disc")
    log_pref = alpha * mu * math.log1p(-s) - math.log(math.pi * mu)
    if s == 0.0:
        return math.exp(log_pref - special.betaln(1, beta))
    ls = math.log(s)
    val, _ = _sum_log_terms(
        lambda k: log_pref + k * ls - special.betaln(k + 1, beta),
        lambda k: s * (k + 1 + beta) / (k + 1),
    )
    return val


def projective_monomial_norm(k: int, m: int) -> float:
    """``||z^k||^2`` for sections of level m on the projective line,
    ``Phi = log(1 + |z|^2)``: ``pi k! (m-k)! / (m+1)!``."""
    return math.pi * math.factorial(k) * math.factorial(m - k) / math.factorial(m + 1)


def epsilon_projective(m: int, n: int = 1, point=0.0) -> float:
    """Epsilon function at level ``m`` of the projective line (affine chart)."""
    if n != 1:
        raise ValueError("only the projective line (n = 1) is implemented")
    if m < 1 or int(m) != m:
        raise ValueError("m must be a positive integer")
    m = int(m)
    (s,) = _abs2(point)
    # fixed index order for reproducibility
    terms = [s**k / projective_monomial_norm(k, m) for k in range(m + 1)]
    return math.fsum(terms) / (1 + s) ** m


# ---------------------------------------------------------------------------
# expansion fits


@dataclass(frozen=True)
class ExpansionFit:
    """``eps(alpha) ~ c (alpha^n + a1_hat alpha^(n-1) + a2_hat alpha^(n-2))``."""

    c: float
    a1_hat: float
    a2_hat: float
    residual: float
    a1_se: float
    a2_se: float


@dataclass(frozen=True, eq=False)
class EpsilonSeries:
    model: str
    alphas: np.ndarray
    values: np.ndarray
    fit: ExpansionFit | None = None
    params: dict = field(default_factory=dict)


def sample_epsilon(model: str, alphas, point=0.0, n: int = 1, mu: float = 1.0) -> EpsilonSeries:
    """Evaluate one of the model epsilon functions on an alpha grid."""
    alphas = np.asarray(alphas, dtype=float)
    if model == "flat":
        pt = np.full(n, point, dtype=complex) if np.ndim(point) == 0 else point
        vals = [epsilon_flat(a, n, pt) for a in alphas]
        params = {"n": n}
    elif model == "disc":
        vals = [epsilon_disc(a, mu, point) for a in alphas]
        params = {"mu": mu}
    elif model == "projective":
        vals = [epsilon_projective(int(a), 1, point) for a in alphas]
        params = {"fs_scale": 1.0}
    else:
        raise ValueError(f"unknown model {model!r}")
    return EpsilonSeries(model, alphas, np.array(vals), params=params)


def fit_expansion(series: EpsilonSeries, n: int, order: int = 2) -> ExpansionFit:
    """Least-squares fit of the leading three terms of the expansion.

    The fit is linear in ``(c, c a1_hat, c a2_hat)``; standard errors of the
    ratios follow by first-order propagation, with the noise level floored at
    machine precision so exact data still gets an honest error bar.
    """
    if order != 2:
        raise ValueError("only order 2 is implemented")
    x = np.asarray(series.alphas, dtype=float)
    v = np.asarray(series.values, dtype=float)
    if x.size < 6:
        raise IllConditionedFitError(f"need at least 6 samples, got {x.size}")
    if np.min(x) <= 0 or np.max(x) / np.min(x) < 4:
        raise IllConditionedFitError("alpha samples must span a factor of at least 4")
    X = np.column_stack([x**n, x ** (n - 1), x ** (n - 2)])
    # column scaling keeps the normal matrix well conditioned
    col = np.linalg.norm(X, axis=0)
    beta_s, *_ = np.linalg.lstsq(X / col, v, rcond=None)
    beta = beta_s / col
    resid = v - X @ beta
    vscale = float(np.max(np.abs(v)))
    residual = float(np.max(np.abs(resid)) / vscale)
    dof = x.size - 3
    s2 = max(float(resid @ resid) / dof, (np.finfo(float).eps * vscale) ** 2)
    cov = s2 * np.linalg.inv((X / col).T @ (X / col)) / np.outer(col, col)
    c, b1, b2 = beta
    J = np.array([[-b1 / c**2, 1 / c, 0.0], [-b2 / c**2, 0.0, 1 / c]])
    se = np.sqrt(np.abs(np.diag(J @ cov @ J.T)))
    return ExpansionFit(float(c), float(b1 / c), float(b2 / c), residual, float(se[0]), float(se[1]))


# ---------------------------------------------------------------------------
# weighted section norm on the Calabi tube


def lorentzian_integral(C: float) -> float:
    """``int_R du / (u^2/4 + C) = 2 pi / sqrt(C)`` by adaptive quadrature."""
    if C <= 0:
        raise ValueError("C must be positive")
    f = lambda u: 1.0 / (u * u / 4 + C)  # noqa: E731
    val, _ = integrate.quad(f, -np.inf, np.inf, epsabs=0.0, epsrel=1e-13, limit=200)
    return val


@dataclass(frozen=True)
class QuadSettings:
    """Quadrature controls for :func:`calabi_section_norm`.

    ``u_max`` truncates each imaginary-part integral of the direct route; the
    omitted tails are bounded by ``8/u_max`` per coordinate.
    """

    epsrel: float = 1e-10
    n_theta: int = 48
    u_max: float = 1e7
    u_nodes: int = 8
    r_nodes: int = 12
    r_panels: int = 14
    domain_fraction: float = 1.0


@dataclass(frozen=True)
class SectionNormReport:
    alpha: float
    reduced_value: float
    direct_value: float
    relative_gap: float
    finite: bool
    reduced_error: float
    direct_refinement_change: float
    tail_bound: float
    domain_radius: float


def _angular_factor(r, a, n_theta):
    """``int_0^{2pi} dtheta / ((4a - r cos) (4a - r sin))`` by the trapezoid rule
    (spectrally accurate for this smooth periodic integrand)."""
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    r = np.atleast_1d(r)[:, None]
    return (2 * np.pi / n_theta) * np.sum(1.0 / ((4 * a - r * np.cos(th)) * (4 * a - r * np.sin(th))), axis=1)


def reduced_integrand(x1, x2, alpha: float, profile: RadialProfile) -> np.ndarray:
    """``pi^2 e^{(1-alpha) y(|x|)} / ((4a - x1)(4a - x2))``; zero past ``r_max``,
    where ``e^{(1-alpha) y}`` has already underflowed for ``alpha > 1``."""
    x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
    r = np.hypot(x1, x2).ravel()
    a = profile.a_estimate
    y = np.full(r.shape, np.inf)
    inside = (r > 0) & (r <= profile.r_max)
    y[inside] = profile.at(r[inside])[:, 0]
    y[r == 0] = profile.y0
    w = np.where(np.isfinite(y), np.exp((1 - alpha) * np.where(np.isfinite(y), y, 0.0)), 0.0)
    return (np.pi**2 * w.reshape(x1.shape) / ((4 * a - x1) * (4 * a - x2)))


def _reduced(alpha, profile, R, qs: QuadSettings):
    a = profile.a_estimate
    rmax = min(R, profile.r_max)

    def radial(r):
        y = profile.at(r)[0, 0]
        return np.pi**2 * math.exp((1 - alpha) * y) * r * _angular_factor(r, a, qs.n_theta)[0]

    val, err = integrate.quad(radial, 0.0, rmax, epsabs=0.0, epsrel=qs.epsrel, limit=400)
    # beyond r_max the weight is at most e^{(1-alpha) y(r_max)}
    if R > rmax:
        ymax = profile.at(rmax)[0, 0]
        err += np.pi**2 * math.exp((1 - alpha) * ymax) * np.pi * (R**2 - rmax**2) / (3 * a) ** 2
    return val, err


def _gl_panels(edges, k):
    x, w = np.polynomial.legendre.leggauss(k)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        weights.append(0.5 * (hi - lo) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _direct(alpha, profile, R, qs: QuadSettings, refine: int = 1):
    """Tensor-product Gauss rule for the full 4-D integrand
    ``2^-4 e^{(1-alpha) y(|x|)} |h(z)|^2`` over ``|x| < R``, ``|u_j| <= u_max``.

    For fixed ``x`` the integrand is a product ``F1(u1) F2(u2)``, so the double
    sum over the ``(u1, u2)`` nodes is accumulated as a product of two single
    sums; this is the same quadrature rule, evaluated in O(N) instead of O(N^2).
    """
    a = profile.a_estimate
    rmax = min(R, profile.r_max)
    # radial panels cluster geometrically toward the boundary layer
    d = rmax * 0.5 ** np.arange(qs.r_panels * refine)
    r_edges = np.unique(np.concatenate([[0.0], rmax - d, [rmax]]))
    rn, rw = _gl_panels(r_edges, qs.r_nodes)
    nt = qs.n_theta * refine
    th = 2 * np.pi * np.arange(nt) / nt
    # u >= 0 half-line: [0, 1] then doubling panels up to u_max; the integrand
    # is even in each u_j, so the symmetric rule is the mirrored half-line rule
    n_dbl = int(math.ceil(math.log2(qs.u_max)))
    u_edges = np.concatenate([[0.0], 2.0 ** np.arange(0, n_dbl + 1)])
    u_edges[-1] = qs.u_max
    un, uw = _gl_panels(u_edges, qs.u_nodes * refine)
    un = np.concatenate([-un[::-1], un])
    uw = np.concatenate([uw[::-1], uw])
    u2 = un**2 / 4
    y = profile.at(rn)[:, 0]
    x1 = rn[:, None] * np.cos(th)[None, :]
    x2 = rn[:, None] * np.sin(th)[None, :]
    c1 = x1**2 / 4 - 2 * a * x1 + 4 * a**2
    c2 = x2**2 / 4 - 2 * a * x2 + 4 * a**2
    s1 = np.einsum("rtu,u->rt", 1.0 / (u2[None, None, :] + c1[:, :, None]), uw)
    s2 = np.einsum("rtu,u->rt", 1.0 / (u2[None, None, :] + c2[:, :, None]), uw)
    inner = (s1 * s2).sum(axis=1) * (2 * np.pi / nt)
    return float(np.sum(np.exp((1 - alpha) * y) * rn * rw * inner) / 16)


def calabi_section_norm(alpha: float, profile: RadialProfile, quad: QuadSettings | None = None) -> SectionNormReport:
    """Weighted norm of ``h(z) = prod_j 1/(z_j - 2a)`` on the n = 2 tube.

    The base of the tube is the ball ``|x| < a`` in ``x = 2 Re z`` (scaled by
    ``quad.domain_fraction``). ``reduced_value`` integrates the closed-form
    ``u``-marginal in polar coordinates; ``direct_value`` integrates the full
    four-dimensional integrand on a truncated tube with a tensor-product rule,
    once at base resolution and once refined.
    """
    qs = quad or QuadSettings()
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    if profile.n != 2:
        raise ValueError("the section norm is implemented for n = 2")
    R = qs.domain_fraction * profile.a_estimate
    red, red_err = _reduced(alpha, profile, R, qs)
    d1 = _direct(alpha, profile, R, qs, 1)
    d2 = _direct(alpha, profile, R, qs, 2)
    change = abs(d2 - d1) / abs(d2)
    # each truncated u-integral misses at most 8/u_max of its value 2 pi / sqrt(C),
    # with sqrt(C) = |x_j/2 - 2a| <= 2a + R/2
    tail = 2 * (8 / qs.u_max) * (2 * profile.a_estimate + R / 2) / (2 * np.pi)
    gap = abs(red - d2) / abs(red)
    finite = bool(np.isfinite(red) and red > 0 and change < 1e-6 and red_err < 1e-6 * red)
    return SectionNormReport(float(alpha), float(red), float(d2), float(gap), finite,
                             float(red_err), float(change), float(tail), float(R))
