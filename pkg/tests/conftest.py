from __future__ import annotations

import pytest

from tycz_lab.acceptance import default_profile


@pytest.fixture(scope="session")
def profile():
    """The y0 = 0, n = 2 profile shared by most curvature tests."""
    return default_profile(0.0, 2)
