"""Pointwise Kähler curvature from a potential, by direct tensor contraction.

Conventions follow the component formula

    R_{i jb k lb} = d_k dbar_l g_{i jb} - g^{p qb} (d_k g_{i qb}) (dbar_l g_{p jb}),
    Ric_{i jb} = g^{l mb} R_{i jb l mb},   sigma = g^{i jb} Ric_{i jb}.

Arrays are indexed in the written order (i, jb, k, lb), and ``g^{a bb}`` is
stored as ``gup[a, b]``. Every contraction pairs an upper unbarred index with
a lower unbarred one and an upper barred index with a lower barred one
(``conj(R_{a bb c db}) = R_{b ab d cb}``), which fixes the index order of each
inverse metric in the scalar invariants. With this sign of ``R`` one has
``Ric = d dbar log det g``, so Einstein constants come out with the sign of
``d dbar log det g`` (the Calabi tube metric has ``Ric = +g``).

Two potential families are supported:

* tube-radial: ``f(z) = y(|z + zbar|)`` with ``y`` from a :class:`RadialProfile`;
* rotation-radial: ``f(z) = phi(|z|^2)`` with closed-form ``phi``.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .calabi_ode import RadialProfile
from .series import pqs_series, series_derivative, series_shift_down

__all__ = [
    "KahlerPointData",
    "PotentialFamily",
    "LuScalars",
    "TyczCoefficients",
    "ModelSpaceData",
    "NotKahlerEinsteinError",
    "curvature_from_potential",
    "riemann_symmetry_defect",
    "lu_scalars",
    "tycz_coeffs_ke",
    "tycz_a3_pipeline_ke",
    "model_potential",
    "model_space_data",
    "kahler_point_to_json",
]


class NotKahlerEinsteinError(ValueError):
    """Raised when a KE-only formula is applied to a non-KE point."""


@dataclass(frozen=True, eq=False)
class KahlerPointData:
    n: int
    g: np.ndarray
    ginv: np.ndarray
    riem: np.ndarray
    ric: np.ndarray
    sigma: float
    R2: float
    Ric2: float

    @property
    def gup(self) -> np.ndarray:
        """``gup[a, b] = g^{a bb}``."""
        return self.ginv.T


# ---------------------------------------------------------------------------
# potential families


@dataclass(frozen=True, eq=False)
class PotentialFamily:
    """A Kähler potential with closed-form radial derivative data.

    ``derivatives`` maps the radial variable to the four functions the metric
    jets are assembled from: ``(u, v, w, t)`` for the tube family (see
    :func:`_tube_jets`) and ``(phi', phi'', phi''', phi'''')`` for the
    rotation family. ``domain`` returns True where the potential is defined.
    """

    kind: str
    n: int
    derivatives: Callable[[float], tuple[float, float, float, float]]
    domain: Callable[[float], bool] = field(default=lambda s: True)
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("tube", "rotation"):
            raise ValueError(f"unknown potential family {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be positive")

    @classmethod
    def tube(cls, profile: RadialProfile) -> "PotentialFamily":
        """Tube-radial potential ``f(x) = y(|x|)``, ``x = z + zbar``."""
        return cls(
            "tube", profile.n, functools.partial(_tube_uvwt, profile),
            domain=lambda r: 0 < r <= profile.r_max, label="calabi",
        )

    @classmethod
    def rotation(cls, phi_derivs, n: int, domain=None, label: str = "") -> "PotentialFamily":
        """Rotation-radial potential ``phi(|z|^2)`` from its derivative function."""
        return cls("rotation", n, phi_derivs, domain or (lambda u: u >= 0), label)


@functools.lru_cache(maxsize=8)
def _uvwt_series(series):
    pqs = pqs_series(series)
    P, Q, S = pqs.P, pqs.Q, pqs.S
    T = series_shift_down(series_derivative(S), 1, rtol=0.0)
    return P, Q, S, T


def _tube_uvwt(profile: RadialProfile, r: float):
    """``u = y'/r`` and its successive ``(d/dr)/r`` derivatives ``v, w, t``.

    Inside the series region the origin expansion is used; outside, the
    derivative cascade (which loses ``r^-4`` relative accuracy near 0).
    """
    if r <= profile.switch_radius:
        return tuple(float(s(r)) for s in _uvwt_series(profile.series))
    _, p, ypp, y3, y4 = profile.at(r)[0]
    u = p / r
    v = (ypp - u) / r**2
    w = y3 / r**3 - 3 * v / r**2
    t = y4 / r**4 - 3 * y3 / r**5 - 3 * w / r**2 + 6 * v / r**4
    return u, v, w, t


def _tube_jets(fam: PotentialFamily, z):
    """Metric jets for ``f(x) = y(|x|)``: all holomorphic and antiholomorphic
    derivatives equal the real derivatives ``f_ij, f_ijk, f_ijkl`` at
    ``x = 2 Re z``."""
    x = 2 * np.real(np.asarray(z, dtype=complex))
    r = float(np.linalg.norm(x))
    if not fam.domain(r):
        raise ValueError(f"point with r = {r} outside the potential's domain")
    u, v, w, t = fam.derivatives(r)
    n = fam.n
    I = np.eye(n)
    f2 = u * I + v * np.einsum("i,j->ij", x, x)
    f3 = v * (
        np.einsum("ij,k->ijk", I, x) + np.einsum("ik,j->ijk", I, x) + np.einsum("jk,i->ijk", I, x)
    ) + w * np.einsum("i,j,k->ijk", x, x, x)
    xx = np.einsum("i,j->ij", x, x)
    ddd = np.einsum("ij,kl->ijkl", I, I)
    f4 = (
        v * (ddd + ddd.transpose(0, 2, 1, 3) + ddd.transpose(0, 2, 3, 1))
        + w * sum(np.einsum(s, I, xx) for s in (
            "ij,kl->ijkl", "ik,jl->ijkl", "il,jk->ijkl",
            "jk,il->ijkl", "jl,ik->ijkl", "kl,ij->ijkl",
        ))
        + t * np.einsum("i,j,k,l->ijkl", x, x, x, x)
    )
    f2, f3, f4 = (a.astype(complex) for a in (f2, f3, f4))
    return f2, f3, f3, f4


def _rotation_jets(fam: PotentialFamily, z):
    """Metric jets for ``phi(u)``, ``u = |z|^2``; ``d_i u = zb_i``, ``dbar_j u = z_j``."""
    z = np.asarray(z, dtype=complex)
    zb = z.conj()
    s = float(np.real(np.vdot(z, z)))
    if not fam.domain(s):
        raise ValueError(f"point with |z|^2 = {s} outside the potential's domain")
    p1, p2, p3, p4 = fam.derivatives(s)
    I = np.eye(fam.n)
    # g_{i jb} = p1 d_ij + p2 zb_i z_j
    g = p1 * I + p2 * np.einsum("i,j->ij", zb, z)
    # d_k g_{i jb}
    dg = (
        p3 * np.einsum("i,j,k->ijk", zb, z, zb)
        + p2 * np.einsum("i,jk->ijk", zb, I)
        + p2 * np.einsum("ij,k->ijk", I, zb)
    )
    # dbar_l g_{i jb}
    dbg = (
        p3 * np.einsum("i,j,l->ijl", zb, z, z)
        + p2 * np.einsum("il,j->ijl", I, z)
        + p2 * np.einsum("ij,l->ijl", I, z)
    )
    # dbar_l d_k g_{i jb}
    ddg = (
        p4 * np.einsum("i,j,k,l->ijkl", zb, z, zb, z)
        + p3 * (
            np.einsum("kl,i,j->ijkl", I, zb, z)
            + np.einsum("il,k,j->ijkl", I, zb, z)
            + np.einsum("jk,i,l->ijkl", I, zb, z)
            + np.einsum("ij,k,l->ijkl", I, zb, z)
        )
        + p2 * (np.einsum("il,jk->ijkl", I, I) + np.einsum("ij,kl->ijkl", I, I))
    )
    return g, dg, dbg, ddg


# ---------------------------------------------------------------------------
# curvature


def _assemble(n: int, g, dg, dbg, ddg) -> KahlerPointData:
    try:
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular metric") from exc
    if not np.all(np.isfinite(ginv)) or np.linalg.cond(g) > 1e14:
        raise ValueError("singular metric")
    gup = ginv.T
    # R_{i jb k lb} = d_k dbar_l g_{i jb} - g^{p qb} d_k g_{i qb} dbar_l g_{p jb}
    riem = ddg - np.einsum("pq,iqk,pjl->ijkl", gup, dg, dbg)
    ric = np.einsum("lm,ijlm->ij", gup, riem)
    sigma = np.einsum("ij,ij->", gup, ric)
    # |R|^2 = g^{i ab} g^{b jb} g^{k cb} g^{d lb} R_{i jb k lb} conj(R_{a bb c db})
    R2 = np.einsum("ia,bj,kc,dl,ijkl,abcd->", gup, gup, gup, gup, riem, riem.conj())
    # |Ric|^2 = g^{i kb} g^{l jb} Ric_{i jb} Ric_{l kb}
    Ric2 = np.einsum("ik,lj,ij,lk->", gup, gup, ric, ric)
    return KahlerPointData(
        n, g, ginv, riem, ric, float(sigma.real), float(R2.real), float(Ric2.real)
    )


def curvature_from_potential(fam: PotentialFamily, point) -> KahlerPointData:
    """Metric, curvature and basic invariants of ``fam`` at ``point`` (in C^n)."""
    point = np.atleast_1d(np.asarray(point, dtype=complex))
    if point.shape != (fam.n,):
        raise ValueError(f"point must have {fam.n} complex coordinates")
    jets = _tube_jets(fam, point) if fam.kind == "tube" else _rotation_jets(fam, point)
    return _assemble(fam.n, *jets)


def riemann_symmetry_defect(d: KahlerPointData) -> float:
    """Largest violation of the Kähler symmetries of ``R``, relative to ``max|R|``."""
    R = d.riem
    scale = max(float(np.max(np.abs(R))), 1e-300)
    defects = (
        R - R.transpose(2, 1, 0, 3),  # R_{i jb k lb} = R_{k jb i lb}
        R - R.transpose(0, 3, 2, 1),  # R_{i jb k lb} = R_{i lb k jb}
        R - R.transpose(1, 0, 3, 2).conj(),  # conj(R_{j ib l kb})
    )
    return float(max(np.max(np.abs(x)) for x in defects) / scale)


# ---------------------------------------------------------------------------
# scalar invariants and TYCZ coefficients


@dataclass(frozen=True)
class LuScalars:
    sigma3: float
    RicRR: float
    RRicRic: float
    divdivRRic: float


def lu_scalars(d: KahlerPointData) -> LuScalars:
    """``sigma_3(Ric)``, ``Ric(R,R)``, ``R(Ric,Ric)`` and the KE value of
    ``div div(R, Ric) = -R(Ric,Ric) + sigma_3(Ric)``."""
    G, R, Ric = d.gup, d.riem, d.ric
    # g^{i db} g^{a jb} g^{c bb} Ric_{i jb} Ric_{a bb} Ric_{c db}
    s3 = np.einsum("id,aj,cb,ij,ab,cd->", G, G, G, Ric, Ric, Ric)
    # g^{i ab} g^{b jb} g^{k cb} g^{p db} g^{e qb} Ric_{i jb} R_{b cb p qb} R_{k ab e db}
    ricrr = np.einsum("ia,bj,kc,pd,eq,ij,bcpq,kaed->", G, G, G, G, G, Ric, R, R)
    # g^{i ab} g^{b jb} g^{k cb} g^{d lb} R_{i jb k lb} Ric_{b ab} Ric_{d cb}
    rricric = np.einsum("ia,bj,kc,dl,ijkl,ba,dc->", G, G, G, G, R, Ric, Ric)
    s3, ricrr, rricric = (float(np.real(v)) for v in (s3, ricrr, rricric))
    return LuScalars(s3, ricrr, rricric, -rricric + s3)


@dataclass(frozen=True)
class TyczCoefficients:
    a1: float
    a2: float
    a3: float


def tycz_coeffs_ke(R2: float, lapR2: float, lam: float, n: int) -> TyczCoefficients:
    """``a1, a2, a3`` of a Kähler–Einstein metric with Einstein constant ``lam``."""
    a1 = -n * lam / 2 + 0.0  # no negative zero for flat metrics
    a2 = (R2 + n * lam**2 * (3 * n - 4)) / 24
    a3 = (lapR2 - lam * (n - 2) * (lam**2 * n * (n - 2) + R2)) / 48
    return TyczCoefficients(float(a1), float(a2), float(a3))


def _ke_lambda(d: KahlerPointData, tol: float) -> float:
    lam = d.sigma / d.n
    defect = float(np.max(np.abs(d.ric - lam * d.g)))
    if defect > tol:
        raise NotKahlerEinsteinError(f"|Ric - lam g| = {defect:.3g} exceeds {tol:g}")
    return lam


def tycz_a3_pipeline_ke(d: KahlerPointData, lapR2: float, tol: float = 1e-6) -> float:
    """``a3`` assembled from the Lu scalars without the KE simplification.

    Uses ``sigma = n lam``, ``|Ric|^2`` and ``Delta sigma = Delta |Ric|^2 = 0``
    (both constant on a KE manifold) together with the contracted
    ``sigma_3, Ric(R,R), R(Ric,Ric)`` and ``div div(R,Ric)``.
    """
    lam = _ke_lambda(d, tol)
    s = lu_scalars(d)
    sigma, R2, Ric2 = d.n * lam, d.R2, d.Ric2
    return (
        s.divdivRRic / 24
        + lapR2 / 48
        - sigma * (sigma**2 + R2 - 4 * Ric2) / 48
        - (s.sigma3 - s.RicRR + s.RRicRic) / 24
    )


# ---------------------------------------------------------------------------
# model spaces


def model_potential(model: str, n: int, scale: float = 1.0) -> PotentialFamily:
    """Rotation-radial potentials of the three model geometries.

    ``flat``: ``c u``; ``projective``: ``c log(1 + u)``; ``hyperbolic``:
    ``-c log(1 - u)`` on the unit ball. Here ``c = scale``; the Einstein
    constants are ``0``, ``-(n+1)/c`` and ``+(n+1)/c`` respectively.
    """
    c = float(scale)
    if c <= 0:
        raise ValueError("scale must be positive")
    if model == "flat":
        return PotentialFamily.rotation(lambda u: (c, 0.0, 0.0, 0.0), n, label="flat")
    if model == "projective":
        return PotentialFamily.rotation(
            lambda u: (c / (1 + u), -c / (1 + u) ** 2, 2 * c / (1 + u) ** 3, -6 * c / (1 + u) ** 4),
            n, label="projective",
        )
    if model == "hyperbolic":
        return PotentialFamily.rotation(
            lambda u: (c / (1 - u), c / (1 - u) ** 2, 2 * c / (1 - u) ** 3, 6 * c / (1 - u) ** 4),
            n, domain=lambda u: 0 <= u < 1, label="hyperbolic",
        )
    raise ValueError(f"unknown model {model!r}")


@dataclass(frozen=True)
class ModelSpaceData:
    model: str
    n: int
    scale: float
    lam: float
    R2: float
    a1: float
    a2: float
    a3: float
    homogeneity_defect: float


MODEL_POINTS = (0.0, 0.3, 0.55 + 0.2j)


def model_space_data(model: str, n: int, scale: float = 1.0) -> ModelSpaceData:
    """Einstein constant, ``|R|^2`` and KE-reduced coefficients of a model space.

    Evaluated at three points; ``homogeneity_defect`` is the largest spread of
    ``(lam, |R|^2)`` between them. ``Delta|R|^2 = 0`` by homogeneity.
    """
    fam = model_potential(model, n, scale)
    vals = []
    direction = np.array([1.0, 0.5j, -0.3 + 0.2j, 0.25][:n] + [0.1] * max(0, n - 4), dtype=complex)
    direction /= np.linalg.norm(direction)
    for c in MODEL_POINTS:
        pt = c * direction
        d = curvature_from_potential(fam, pt)
        vals.append((_ke_lambda(d, 1e-8 * max(1.0, abs(d.sigma))), d.R2))
    vals = np.array(vals)
    defect = float(np.max(np.ptp(vals, axis=0)))
    lam, R2 = vals[0]
    co = tycz_coeffs_ke(R2, 0.0, lam, n)
    return ModelSpaceData(model, n, scale, float(lam), float(R2), co.a1, co.a2, co.a3, defect)


# ---------------------------------------------------------------------------
# serialization


def _flat(a: np.ndarray):
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return {"re": a.real.ravel().tolist(), "im": a.imag.ravel().tolist()}
    return a.ravel().tolist()


def kahler_point_to_json(d: KahlerPointData) -> str:
    """JSON dump; tensors are flattened row-major in index order (i, jb, k, lb)."""
    return json.dumps(
        {
            "n": d.n,
            "g": _flat(d.g),
            "ginv": _flat(d.ginv),
            "riem": _flat(d.riem),
            "ric": _flat(d.ric),
            "sigma": d.sigma,
            "R2": d.R2,
            "Ric2": d.Ric2,
        }
    )
