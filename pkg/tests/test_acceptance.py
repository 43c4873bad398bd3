"""Acceptance suite: one test per criterion, one printed line per check.

Run with ``pytest tests/test_acceptance.py -s`` to see the PASS/FAIL lines.
"""

from __future__ import annotations

import pytest

from tycz_lab.acceptance import CRITERIA, run_criteria


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k, profile):
    rows = run_criteria([k], profile, seed=0)
    assert rows, f"criterion {k} produced no checks"
    for row in rows:
        print(row.line())
    failed = [row.line() for row in rows if not row.passed]
    assert not failed, "\n".join(failed)
