"""Two-mass crawler model: parameters, state-space realizations and force laws.

The robot is a pair of friction blocks (masses m1 rear, m2 front) coupled by a
massless spring k and damper c. The axial actuator applies +/-fa to the pair,
friction acts on each block separately. States are ordered [x1, v1, x2, v2]
throughout the package (plain length-4 float arrays).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError

# Gauge pressure conversion used at every psi interface; Pa internally.
PSI_TO_PA = 6894.757

# Axial cross-section of a 35 mm bore actuator, the shipped default.
DEFAULT_ACTUATOR_AREA_M2 = math.pi * 0.0175**2


def psi_to_pa(p_psi: float) -> float:
    return p_psi * PSI_TO_PA


@dataclass(frozen=True)
class RobotParams:
    """Physical parameters of the two-block crawler.

    mu_lo_i / mu_hi_i are the low/high friction coefficients each block can
    switch between; s_a is the axial actuator cross-section (m^2).
    """

    m1: float = 0.2  # kg
    m2: float = 0.2  # kg
    k: float = 200.0  # N/m
    c: float = 0.0  # N*s/m
    g: float = 9.81  # m/s^2
    mu_lo_1: float = 0.1
    mu_hi_1: float = 1.0
    mu_lo_2: float = 0.1
    mu_hi_2: float = 1.0
    s_a: float = DEFAULT_ACTUATOR_AREA_M2  # m^2

    def __post_init__(self) -> None:
        checks = [
            ("m1", self.m1 > 0),
            ("m2", self.m2 > 0),
            ("k", self.k >= 0),
            ("c", self.c >= 0),
            ("g", self.g > 0),
            ("s_a", self.s_a > 0),
            ("mu_lo_1", 0 < self.mu_lo_1 < self.mu_hi_1),
            ("mu_lo_2", 0 < self.mu_lo_2 < self.mu_hi_2),
        ]
        for name, ok in checks:
            if not ok:
                raise InvalidParameterError(
                    f"params.{name}={getattr(self, name)} violates its constraint"
                )
        for name in ("m1", "m2", "k", "c", "g", "s_a",
                     "mu_lo_1", "mu_hi_1", "mu_lo_2", "mu_hi_2"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"params.{name} must be finite")

    @property
    def total_mass(self) -> float:
        return self.m1 + self.m2


@dataclass(frozen=True)
class ContinuousLTI:
    """Continuous realization {A, B, C, D}; C is identity, D zero."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]
    D: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.C is None:
            object.__setattr__(self, "C", np.eye(self.A.shape[0]))
        if self.D is None:
            object.__setattr__(self, "D", np.zeros((self.A.shape[0], self.B.shape[1])))
        for name in ("A", "B", "C", "D"):
            getattr(self, name).setflags(write=False)

    @property
    def n_inputs(self) -> int:
        return self.B.shape[1]


def _system_matrix(p: RobotParams) -> np.ndarray:
    return np.array(
        [
            [0.0, 1.0, 0.0, 0.0],
            [-p.k / p.m1, -p.c / p.m1, p.k / p.m1, p.c / p.m1],
            [0.0, 0.0, 0.0, 1.0],
            [p.k / p.m2, p.c / p.m2, -p.k / p.m2, -p.c / p.m2],
        ]
    )


def build_siso(params: RobotParams) -> ContinuousLTI:
    """Single-input realization: the axial force is the only input."""
    b0 = np.array([[0.0], [-1.0 / params.m1], [0.0], [1.0 / params.m2]])
    return ContinuousLTI(A=_system_matrix(params), B=b0)


def build_mimo(params: RobotParams) -> ContinuousLTI:
    """Three-input realization with inputs [fa, f1, f2].

    Friction forces enter through negative entries, so positive force values
    (sign-matched to velocity) decelerate their block.
    """
    b1 = np.array(
        [
            [0.0, 0.0, 0.0],
            [-1.0 / params.m1, -1.0 / params.m1, 0.0],
            [0.0, 0.0, 0.0],
            [1.0 / params.m2, 0.0, -1.0 / params.m2],
        ]
    )
    return ContinuousLTI(A=_system_matrix(params), B=b1)


def axial_force(p_a: float, s_a: float) -> float:
    """Force produced by gauge pressure p_a (Pa) over cross-section s_a (m^2).

    Negative gauge pressure (vacuum drive) is rejected here; the gait module
    handles it where the valve plant can actually produce it.
    """
    if s_a <= 0:
        raise InvalidParameterError(f"s_a={s_a} must be > 0")
    if p_a < 0:
        raise InvalidParameterError(f"negative gauge pressure {p_a} Pa")
    return s_a * p_a


def friction_force(v: float, mu: float, m: float, g: float) -> float:
    """Kinetic friction value sign(v)*mu*m*g with sign(0) = 0.

    The value is sign-matched to the velocity; opposition happens in the
    plant, where friction inputs carry negative B entries.
    """
    if mu <= 0 or m <= 0 or g <= 0:
        raise InvalidParameterError("friction_force requires mu, m, g > 0")
    if v > 0:
        return mu * m * g
    if v < 0:
        return -mu * m * g
    return 0.0


def center_of_mass(state: np.ndarray, params: RobotParams) -> float:
    """Centre-of-mass position (m1*x1 + m2*x2) / (m1 + m2)."""
    return (params.m1 * state[0] + params.m2 * state[2]) / params.total_mass
