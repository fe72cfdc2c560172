"""Oscillation moduli of one-dimensional functions.

Exact step-function statistics, decreasing rearrangement, oscillation
profiles, parabolic convexification, extremal-curve geometry, and
property-based verification campaigns for the underlying theorems.
"""
from .funcspace import (
    CutoutResult,
    DomainError,
    Interval,
    IntervalStats,
    StepFunction,
    cutout,
    decreasing_rearrangement,
    distribution_measure,
    random_step_function,
    stats,
    truncate,
)
from .geometry import GeometryContext, PlanePoint, StripMembership, TauU
from .modulus import (
    ConstructionError,
    Modulus,
    OscillationProfile,
    check_companion_convex,
    ray_convex_majorant,
    mollified_majorant,
    norm_bound_check,
    oscillation_profile,
    parabolic_convex_minorant,
    worst_ratio,
)
from .report import VerificationReport
from .theorems import (
    default_length_grid,
    linear_staircase,
    run_campaign,
    verify_cutout,
    verify_inf_bound,
    verify_dilation_invariance,
    verify_monotone_convexity,
    verify_rearrangement,
    verify_linear_threshold,
    verify_convexified,
)

__version__ = "0.1.0"
