"""Simulation and analysis toolkit for a friction-modulated two-mass crawler."""

from .controllability import ControllabilityReport, analyze, controllability_matrix
from .engine import (
    BACKEND,
    FrictionMode,
    SimTrace,
    average_speed,
    net_displacement,
    simulate,
    step,
)
from .linalg import (
    DiscreteLTI,
    column_space_basis,
    matrix_exponential,
    numerical_rank,
    zoh_discretize,
)
from .model import (
    ContinuousLTI,
    RobotParams,
    axial_force,
    build_mimo,
    build_siso,
    center_of_mass,
    friction_force,
)
from .signals import SignalSpec, sample_signal

__version__ = "0.1.0"
