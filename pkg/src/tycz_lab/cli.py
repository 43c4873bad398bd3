"""Command-line front end: ``tycz-lab <subcommand> [options]``.

Every subcommand writes one JSON document (or a CSV table with ``--format
csv``) either to stdout or, with ``--out DIR``, to ``DIR/<subcommand>.json``
/ ``.csv``. JSON documents share the envelope

    {"schema": 1, "command", "timestamp", "parameters", "paper_claim",
     "computed", "tolerance", "pass", "checks": [...], "results": {...}}

Exit codes: 0 all checks pass, 2 a numerical check failed, 3 usage error.
``TYCZ_LAB_THREADS`` caps BLAS threads and the ``verify-all`` fan-out.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from datetime import datetime, timezone

__all__ = ["main", "run", "build_parser", "UsageError"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 2, 3
SCHEMA = 1
_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _threads() -> int:
    raw = os.environ.get("TYCZ_LAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise UsageError(f"TYCZ_LAB_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise UsageError("TYCZ_LAB_THREADS must be >= 1")
    return n


def _positive(kind):
    def conv(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text}")
        return v

    return conv


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--y0", type=float, default=0.0, help="initial value y(0)")
    common.add_argument("--n", type=int, default=2, help="complex dimension")
    common.add_argument("--order", type=int, default=None, help="series truncation order")
    common.add_argument("--rtol", type=_positive(float), default=1e-16, help="integrator tolerance")
    common.add_argument("--out", default=None, help="output directory (default: stdout)")
    common.add_argument("--precision", choices=("double", "extended"), default="double")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized spot checks")

    p = _Parser(prog="tycz-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("series", parents=[common], help="origin Taylor series and limits")
    s = sub.add_parser("solve", parents=[common], help="radial profile of the Calabi ODE")
    s.add_argument("--compare", default=None, help="profile CSV to compare against")
    sub.add_parser("invariants", parents=[common], help="curvature and a1..a3 along r")
    sub.add_parser("limits", parents=[common], help="endpoint limit report")
    t = sub.add_parser("tycz", parents=[common], help="TYCZ coefficients of a model space")
    t.add_argument("--model", choices=("flat", "projective", "hyperbolic", "calabi"), default="flat")
    t.add_argument("--scale", type=_positive(float), default=1.0)
    e = sub.add_parser("epsilon", parents=[common], help="model epsilon functions and fits")
    e.add_argument("--model", choices=("flat", "disc", "projective"), default="flat")
    e.add_argument("--mu", type=_positive(float), default=1.0, help="disc weight parameter")
    h = sub.add_parser("hnorm", parents=[common], help="weighted section norm on the tube")
    h.add_argument("--alpha", type=float, nargs="+", default=[2.0, 3.0])
    v = sub.add_parser("verify-all", parents=[common], help="run the full acceptance suite")
    v.add_argument("--criteria", type=int, nargs="+", default=None)
    return p


# ---------------------------------------------------------------------------
# helpers


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    return obj


def _params(args) -> dict:
    d = {k: v for k, v in vars(args).items() if k not in ("command",)}
    d["threads"] = _threads()
    return d


def _envelope(args, claim: str, checks, results: dict) -> dict:
    rows = [c.to_dict() for c in checks]
    return _clean({
        "schema": SCHEMA,
        "command": args.command,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "parameters": _params(args),
        "paper_claim": claim,
        "computed": {r["name"]: r["computed"] for r in rows},
        "tolerance": {r["name"]: r["tolerance"] for r in rows},
        "pass": all(r["pass"] for r in rows),
        "checks": rows,
        "results": results,
    })


def _emit(args, doc: dict | None, csv_text: str | None, stdout) -> int:
    if args.format == "csv":
        if csv_text is None:
            raise UsageError(f"{args.command} has no CSV output")
        text, ext = csv_text, "csv"
    else:
        text, ext = json.dumps(doc, indent=2) + "\n", "json"
    if args.out:
        try:
            os.makedirs(args.out, exist_ok=True)
            with open(os.path.join(args.out, f"{args.command}.{ext}"), "w") as fh:
                fh.write(text)
            if args.format == "csv" and doc is not None:
                with open(os.path.join(args.out, f"{args.command}.json"), "w") as fh:
                    fh.write(json.dumps(doc, indent=2) + "\n")
        except OSError as exc:
            raise UsageError(f"cannot write to {args.out}: {exc}") from exc
    else:
        stdout.write(text)
    return EXIT_OK if doc is None or doc["pass"] else EXIT_FAIL


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(f"{float(v):.17g}" for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _profile(args):
    from .calabi_ode import SolverConfig, solve_profile

    kw = {"rtol": args.rtol, "precision": args.precision}
    if args.order is not None:
        kw["series_order"] = args.order
    return solve_profile(args.y0, args.n, SolverConfig(**kw))


def _check_n2(args):
    if args.n != 2:
        raise UsageError(f"{args.command} is implemented for n = 2 only")


# ---------------------------------------------------------------------------
# subcommands


def cmd_series(args, stdout) -> int:
    from .acceptance import _abs_check, _rel_check
    from .series import calabi_series, limit_origin_expressions, pqs_series

    order = args.order or 32
    y0 = args.y0
    y = calabi_series(y0, args.n, order, args.precision)
    checks = []
    if args.n == 2:
        pqs = pqs_series(y)
        lim = limit_origin_expressions(y)
        e = math.exp
        checks = [
            _rel_check(1, "b2", "b2 = e^{y0/2}/2", e(y0 / 2) / 2, float(y.coeffs[2]), 1e-12),
            _rel_check(1, "b4", "b4 = e^{y0}/32", e(y0) / 32, float(y.coeffs[4]), 1e-12),
            _rel_check(1, "b6", "b6 = 7 e^{3y0/2}/2304", 7 * e(1.5 * y0) / 2304, float(y.coeffs[6]), 1e-12),
            _rel_check(2, "c2", "c2 = e^{y0}/8", e(y0) / 8, float(pqs.Q.coeffs[0]) / 2, 1e-12),
            _rel_check(2, "c4", "c4 = 7 e^{3y0/2}/384", 7 * e(1.5 * y0) / 384, float(pqs.S.coeffs[0]) / 8, 1e-12),
            _abs_check(3, "L1", "first origin limit = -9/2", -4.5, lim.L1, 1e-10),
            _abs_check(3, "L2", "second origin limit = 3/16", 0.1875, lim.L2, 1e-10),
        ]
    doc = _envelope(args, "Taylor coefficients of y at the origin", checks, {"series": y.to_float().to_json()})
    csv_text = _csv(["k", "coeff"], [(k, float(c)) for k, c in enumerate(y.coeffs)])
    return _emit(args, doc, csv_text, stdout)


def cmd_solve(args, stdout) -> int:
    import numpy as np

    from .acceptance import Check, _bound_check
    from .calabi_ode import estimate_boundary, ode_residual, profile_from_csv, profile_metadata, profile_to_csv

    prof = _profile(args)
    be = estimate_boundary(prof)
    checks = [
        _bound_check(0, "ODE residual", "(y'/r)^{n-1} y'' = e^y", ode_residual(prof), prof.config.residual_tol),
        _bound_check(6, "blow-up radius spread", "1/(3 lim e^y/y'^3) = a", be.spread, 1e-3),
    ]
    results = {"metadata": profile_metadata(prof), "a_from_limit": be.a_from_limit}
    if args.compare:
        try:
            with open(args.compare) as fh:
                grid, samples = profile_from_csv(fh.read())
        except (OSError, ValueError, IndexError) as exc:
            raise UsageError(f"cannot read profile {args.compare}: {exc}") from exc
        same = grid.shape == prof.grid.shape and bool(np.array_equal(grid, prof.grid))
        diff = float(np.max(np.abs(samples - prof.samples))) if same else float("inf")
        checks.append(Check(0, "matches saved profile", "reproducible solve", 0.0, diff, 0.0, diff == 0.0))
    doc = _envelope(args, "Calabi radial profile and blow-up radius", checks, results)
    return _emit(args, doc, profile_to_csv(prof), stdout)


def cmd_invariants(args, stdout) -> int:
    import numpy as np

    from .acceptance import criterion_7
    from .curvature_radial import a3_profile, boundary_limit_decomposition

    _check_n2(args)
    prof = _profile(args)
    t = a3_profile(prof)
    dec = boundary_limit_decomposition(prof, t.r)
    A = np.array([x.A for x in dec])
    B = np.array([x.B for x in dec])
    C = np.array([x.C for x in dec])
    checks = criterion_7(profile=prof)
    i = int(np.argmax(np.abs(t.a3)))
    results = {"sup_abs_a3": float(abs(t.a3[i])), "argmax_r": float(t.r[i]), "points": len(t)}
    doc = _envelope(args, "a3 = Delta|R|^2 / 48 does not vanish identically", checks, results)
    rows = np.column_stack([t.r, t.R2, t.dR2, t.d2R2, t.lapR2, t.a1, t.a2, t.a3, A, B, C])
    csv_text = _csv(["r", "R2", "dR2", "d2R2", "lapR2", "a1", "a2", "a3", "A", "B", "C"], rows)
    return _emit(args, doc, csv_text, stdout)


_LIMIT_CLAIMS = {
    "lim_{r->0} |R|^2": "lim |R|^2 at 0",
    "lim_{r->a} |R|^2": "lim |R|^2 at a",
}


def cmd_limits(args, stdout) -> int:
    from .acceptance import criterion_4, criterion_5, criterion_6
    from .curvature_radial import boundary_limits, origin_R2_limit

    _check_n2(args)
    prof = _profile(args)
    checks = criterion_4(profile=prof) + criterion_5(profile=prof) + criterion_6(profile=prof)
    fits = boundary_limits(prof)
    fits["R2_origin"] = origin_R2_limit(prof)
    limits = []
    for c in checks:
        d = c.to_dict()
        d["claim"] = _LIMIT_CLAIMS.get(c.name, c.name)
        d["estimate"] = c.computed
        limits.append(d)
    results = {
        "a_estimate": prof.a_estimate,
        "limits": limits,
        "fits": {k: {"estimate": f.estimate, "uncertainty": f.uncertainty, "exponent": f.exponent,
                     "n_points": f.n_points} for k, f in fits.items()},
    }
    doc = _envelope(args, "endpoint limits of the curvature and auxiliary quantities", checks, results)
    return _emit(args, doc, None, stdout)


def cmd_tycz(args, stdout) -> int:
    from .acceptance import Check, _abs_check, _bound_check

    if args.model == "calabi":
        from .curvature_radial import a3_profile

        _check_n2(args)
        prof = _profile(args)
        t = a3_profile(prof)
        i = int(abs(t.a3).argmax())
        results = {"lambda": 1.0, "a1": float(t.a1[0]), "a2_range": [float(t.a2.min()), float(t.a2.max())],
                   "sup_abs_a3": float(abs(t.a3[i])), "argmax_r": float(t.r[i])}
        checks = [Check(0, "sup|a3| > 0", "a3 != 0 for the Calabi metric", 0.0, float(abs(t.a3[i])), 0.0,
                        bool(abs(t.a3[i]) > 0))]
        doc = _envelope(args, "TYCZ coefficients of the Calabi metric", checks, results)
        return _emit(args, doc, None, stdout)

    from .tensor_oracle import model_space_data

    if args.n < 1:
        raise UsageError("n must be positive")
    m = model_space_data(args.model, args.n, args.scale)
    checks = [_bound_check(0, "homogeneity defect", "model space is homogeneous", m.homogeneity_defect, 1e-10)]
    if args.model == "flat":
        checks += [_abs_check(10, "a2", "a2 = 0 on C^n", 0.0, m.a2, 1e-12),
                   _abs_check(10, "a3", "a3 = 0 on C^n", 0.0, m.a3, 1e-12)]
    elif args.n == 2:
        checks.append(_abs_check(10, "a3", "a3 = 0 for n = 2 model spaces", 0.0, m.a3, 1e-12))
    results = {"lambda": m.lam, "R2": m.R2, "a1": m.a1, "a2": m.a2, "a3": m.a3, "scale": m.scale}
    doc = _envelope(args, f"TYCZ coefficients of the {args.model} model", checks, results)
    return _emit(args, doc, None, stdout)


def cmd_epsilon(args, stdout) -> int:
    import numpy as np

    from .acceptance import _abs_check, _bound_check
    from .epsilon_models import fit_expansion, sample_epsilon
    from .tensor_oracle import curvature_from_potential, model_potential, tycz_coeffs_ke

    if args.model == "flat":
        alphas, n = np.arange(1.0, 21.0), args.n
    elif args.model == "disc":
        alphas, n = np.linspace(max(2.0, 2.0 / args.mu), 20.0, 10), 1
    else:
        alphas, n = np.arange(1.0, 13.0), 1
    series = sample_epsilon(args.model, alphas, 0.3, n=n, mu=args.mu)
    fit = fit_expansion(series, n)
    if args.model == "flat":
        targets = {"a1": 0.0, "a2": 0.0}
        checks = [_bound_check(11, "fit residual", "eps exactly polynomial", fit.residual, 1e-12)]
        tol = 1e-12
    else:
        pot = "hyperbolic" if args.model == "disc" else "projective"
        d = curvature_from_potential(model_potential(pot, 1, args.mu if pot == "hyperbolic" else 1.0),
                                     np.array([0.2 + 0.1j]))
        lam = d.sigma / d.n
        targets = {"a1": -d.sigma / 2, "a2": tycz_coeffs_ke(d.R2, 0.0, lam, 1).a2}
        checks, tol = [], 1e-3
    checks += [_abs_check(11, "a1_hat", "a1 = -sigma/2", targets["a1"], fit.a1_hat, tol),
               _abs_check(11, "a2_hat", "a2 from the KE reduction", targets["a2"], fit.a2_hat, tol)]
    results = {"model": args.model, "c": fit.c, "a1_hat": fit.a1_hat, "a2_hat": fit.a2_hat,
               "a1_se": fit.a1_se, "a2_se": fit.a2_se, "residual": fit.residual, "targets": targets,
               "params": series.params, "alphas": series.alphas, "values": series.values}
    doc = _envelope(args, "epsilon expansion coefficients of a model space", checks, results)
    csv_text = _csv(["alpha", "epsilon"], np.column_stack([series.alphas, series.values]))
    return _emit(args, doc, csv_text, stdout)


def cmd_hnorm(args, stdout) -> int:
    from dataclasses import asdict

    from .acceptance import Check, _bound_check
    from .epsilon_models import calabi_section_norm

    _check_n2(args)
    if any(a <= 1 for a in args.alpha):
        raise UsageError("every --alpha must exceed 1")
    prof = _profile(args)
    reports = [calabi_section_norm(a, prof) for a in args.alpha]
    checks = []
    for rep in reports:
        checks.append(Check(12, f"finite (alpha={rep.alpha:g})", "H_alpha != {0}", 1.0,
                            rep.reduced_value, 0.0, rep.finite))
        checks.append(_bound_check(12, f"reduced vs direct gap (alpha={rep.alpha:g})", "pi^n reduction",
                                   rep.relative_gap, 1e-4))
    doc = _envelope(args, "finite weighted norm of h(z) = prod 1/(z_j - 2a)", checks,
                    {"reports": [asdict(r) for r in reports]})
    return _emit(args, doc, None, stdout)


def cmd_verify_all(args, stdout) -> int:
    from concurrent.futures import ThreadPoolExecutor

    from .acceptance import CRITERIA

    _check_n2(args)
    which = args.criteria or sorted(CRITERIA)
    unknown = [k for k in which if k not in CRITERIA]
    if unknown:
        raise UsageError(f"unknown criteria {unknown}")
    prof = _profile(args)
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        futures = [pool.submit(CRITERIA[k], profile=prof, seed=args.seed) for k in which]
        rows = [row for f in futures for row in f.result()]  # merged in criterion order
    doc = _envelope(args, "full acceptance suite", rows, {"criteria": which})
    for r in rows:  # human-readable summary; stdout carries the document
        print(r.line(), file=sys.stderr)
    return _emit(args, doc, None, stdout)


COMMANDS = {
    "series": cmd_series,
    "solve": cmd_solve,
    "invariants": cmd_invariants,
    "limits": cmd_limits,
    "tycz": cmd_tycz,
    "epsilon": cmd_epsilon,
    "hnorm": cmd_hnorm,
    "verify-all": cmd_verify_all,
}


def run(argv=None, stdout=None) -> int:
    """Parse ``argv``, run the subcommand and return the exit code."""
    stdout = stdout or sys.stdout
    try:
        threads = str(_threads())
        for var in _THREAD_VARS:
            os.environ.setdefault(var, threads)
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, stdout)
    except UsageError as exc:
        print(f"tycz-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, RuntimeError) as exc:
        print(f"tycz-lab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main() -> None:
    sys.exit(run())
