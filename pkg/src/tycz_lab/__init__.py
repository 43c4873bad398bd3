"""Numerics for the Calabi tube metric and the TYCZ expansion of Kähler potentials.

Modules:
    series: truncated power series and the origin expansion of the radial profile.
    calabi_ode: Taylor-series integration of the radial Monge-Ampère ODE.
    curvature_radial: closed-form curvature invariants along the radius.
    tensor_oracle: curvature from a potential by explicit tensor contraction.
    epsilon_models: epsilon functions of model spaces and the tube section norm.
    acceptance: the numbered acceptance checks.
    cli: the ``tycz-lab`` command.
"""

from __future__ import annotations

__version__ = "0.1.0"

__all__ = ["__version__"]
