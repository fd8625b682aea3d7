"""Level-set simulator for nonlocal eikonal front propagation.

Fronts move with a velocity made of a convolution self-force c0 * occupancy
and an external load c1.  The package provides the occupancy fixed-point
construction of weak solutions, the all-level-set solver for nonnegative
kernels with its extremal occupancy evolutions, the monotone local eikonal
workhorse, geometric diagnostics (fattening, perimeter, interior ball,
arrival time), closed-form oracles, and a configuration-driven CLI.
"""

from .errors import (
    CFLError,
    ConfigurationError,
    DislosimError,
    DomainTooSmallError,
    GridMismatchError,
    NumericalError,
)
from .grid import (
    Disk,
    DiskUnion,
    Grid,
    IndicatorField,
    Interval,
    ScalarField,
    discrete_lipschitz,
    lebesgue_measure,
    make_signed_initial,
    sup_distance,
    superlevel_indicator,
)
from .kernels import (
    ExternalVelocity,
    KernelSpec,
    OccupancyField,
    assemble_cbar,
    convolve,
    slepcev_velocity,
)
from .eikonal import (
    SpeedField,
    StepControl,
    Trajectory,
    admissible_dt,
    eikonal_step,
    oleinik_lax_1d,
    solve_fixed_speed,
)
from .weak import (
    FixedPointConfig,
    PsiEps,
    WeakSolution,
    check_velocity_bounds,
    map_T,
    sandwich_report,
    solve_weak,
)
from .slepcev import (
    ExtremalPair,
    SlepcevConfig,
    counterexample_family,
    extremal_solutions,
    solve_slepcev,
)
from . import diagnostics, oracles, scenarios, snapshots

__all__ = [
    "CFLError",
    "ConfigurationError",
    "DislosimError",
    "Disk",
    "DiskUnion",
    "DomainTooSmallError",
    "ExternalVelocity",
    "ExtremalPair",
    "FixedPointConfig",
    "Grid",
    "GridMismatchError",
    "IndicatorField",
    "Interval",
    "KernelSpec",
    "NumericalError",
    "OccupancyField",
    "PsiEps",
    "ScalarField",
    "SlepcevConfig",
    "SpeedField",
    "StepControl",
    "Trajectory",
    "WeakSolution",
    "admissible_dt",
    "assemble_cbar",
    "check_velocity_bounds",
    "convolve",
    "counterexample_family",
    "diagnostics",
    "discrete_lipschitz",
    "eikonal_step",
    "extremal_solutions",
    "lebesgue_measure",
    "make_signed_initial",
    "map_T",
    "oleinik_lax_1d",
    "oracles",
    "sandwich_report",
    "scenarios",
    "slepcev_velocity",
    "snapshots",
    "solve_fixed_speed",
    "solve_slepcev",
    "solve_weak",
    "sup_distance",
    "superlevel_indicator",
]
