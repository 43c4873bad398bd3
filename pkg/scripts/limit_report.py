"""Print every endpoint limit of the n = 2 profile with its extrapolation error.

Usage: python3 scripts/limit_report.py [--y0 0.0]
"""

from __future__ import annotations

import argparse

from tycz_lab.acceptance import criterion_4, criterion_5, criterion_6
from tycz_lab.calabi_ode import solve_profile
from tycz_lab.curvature_radial import boundary_limits, origin_R2_limit


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--y0", type=float, default=0.0)
    args = ap.parse_args()
    prof = solve_profile(args.y0, 2)
    print(f"a = {prof.a_estimate:.15f} +- {prof.a_uncertainty:.1e}")
    fits = {"R2 (r->0)": origin_R2_limit(prof), **{f"{k} (r->a)": v for k, v in boundary_limits(prof).items()}}
    for name, fit in fits.items():
        print(f"{name:>14}: {fit.estimate: .10e}  +- {fit.uncertainty:.1e}  (exponent {fit.exponent:.2f}, "
              f"{fit.n_points} pts)")
    print()
    for row in criterion_4(profile=prof) + criterion_5(profile=prof) + criterion_6(profile=prof):
        print(row.line())


if __name__ == "__main__":
    main()
