"""Chain recurrence, sensitivity, shadowing and entropy on finitely
presented dynamical systems."""

from .core import FiniteMetricSystem, PseudoOrbit, accumulation_set, build_ball, invariant_core, is_pseudo_orbit, is_shadowed_by
from .symbolic import SubshiftSystem, SymbolicPoint, full_shift, golden_mean, shift_metric, truncation

__all__ = [
    "FiniteMetricSystem",
    "PseudoOrbit",
    "SubshiftSystem",
    "SymbolicPoint",
    "accumulation_set",
    "build_ball",
    "full_shift",
    "golden_mean",
    "invariant_core",
    "is_pseudo_orbit",
    "is_shadowed_by",
    "shift_metric",
    "truncation",
]
