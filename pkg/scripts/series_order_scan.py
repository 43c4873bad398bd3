"""Scan the series truncation order needed to resolve the origin limits.

Usage: python3 scripts/series_order_scan.py [--y0 0.0] [--max-order 24]
"""

from __future__ import annotations

import argparse

from tycz_lab.series import SeriesCancellationError, calabi_series, limit_origin_expressions


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--y0", type=float, default=0.0)
    ap.add_argument("--max-order", type=int, default=24)
    args = ap.parse_args()
    print(f"{'order':>5} {'L1 + 9/2':>12} {'L2 - 3/16':>12}")
    for order in range(6, args.max_order + 1, 2):
        try:
            lim = limit_origin_expressions(calabi_series(args.y0, 2, order))
        except SeriesCancellationError as exc:
            print(f"{order:>5}  unresolved: {exc}")
            continue
        print(f"{order:>5} {lim.L1 + 4.5:12.3e} {lim.L2 - 0.1875:12.3e}")


if __name__ == "__main__":
    main()
