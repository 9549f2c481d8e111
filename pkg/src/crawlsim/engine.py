"""Discrete-time locomotion simulation: friction sign feedback around the ZOH plant.

Each sample the friction forces are recomputed from the current velocities
(sign feedback) or from the stiction logic (karnopp), then the exact ZOH step
advances the state. The per-sample recurrence lives in a compiled kernel with
a pure-Python twin selected at import (CRAWLSIM_PURE_PYTHON=1 forces the twin).
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import IO

import numpy as np

from .errors import InvalidParameterError, UnstableSimulationError
from .linalg import DiscreteLTI, zoh_discretize
from .model import RobotParams, build_mimo
from .signals import SignalSpec, sample_series

if os.environ.get("CRAWLSIM_PURE_PYTHON"):
    from . import _stepper_py as _stepper

    BACKEND = "python"
else:
    try:
        from . import _stepper_c as _stepper  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        from . import _stepper_py as _stepper  # type: ignore[no-redef]

        BACKEND = "python"

STATE_BOUND = 1e6  # diagnostic guard, not physics

TRACE_COLUMNS = ("t", "x1", "v1", "x2", "v2", "fa", "mu1", "mu2", "f1", "f2")


@dataclass(frozen=True)
class FrictionMode:
    """Friction law used in the loop.

    "sign": memoryless sign feedback, sign(0) = 0.
    "karnopp": velocities inside +/-eps_v are clamped to zero and static
    friction balances the applied force up to mu_static_scale times the
    kinetic cap; above the cap the block breaks away.
    """

    variant: str = "sign"
    eps_v: float = 1e-4  # m/s
    mu_static_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.variant not in ("sign", "karnopp"):
            raise InvalidParameterError(f"unknown friction variant {self.variant!r}")
        if self.variant == "karnopp" and self.eps_v <= 0:
            raise InvalidParameterError(f"eps_v={self.eps_v} must be > 0")


@dataclass(frozen=True)
class SimTrace:
    """Uniformly sampled run history.

    states[n] = [x1, v1, x2, v2] at time n*T; inputs[n] = [fa, mu1, mu2, f1, f2]
    applied at that sample (the last row's forces are never applied).
    """

    T: float
    states: np.ndarray
    inputs: np.ndarray

    def __post_init__(self) -> None:
        if len(self.states) != len(self.inputs):
            raise ValueError("states and inputs must have equal length")
        self.states.setflags(write=False)
        self.inputs.setflags(write=False)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.states)) * self.T

    @property
    def duration(self) -> float:
        return (len(self.states) - 1) * self.T


def step(d: DiscreteLTI, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """One ZOH update x' = Ad x + Bd u."""
    x = np.asarray(x, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape[0] != d.Bd.shape[1]:
        raise ValueError(f"input has {u.shape[0]} entries, plant expects {d.Bd.shape[1]}")
    return d.Ad @ x + d.Bd @ u


def _check_mu_bounds(name: str, series: np.ndarray, hi: float) -> None:
    # Zero is allowed (friction disabled) even though the hardware range
    # starts at mu_lo; anything negative or above mu_hi is a config error.
    if series.min() < 0 or series.max() > hi + 1e-12:
        raise InvalidParameterError(
            f"{name} samples must lie in [0, {hi}], got "
            f"[{series.min()}, {series.max()}]"
        )


def simulate(
    params: RobotParams,
    fa_spec: SignalSpec,
    mu1_spec: SignalSpec,
    mu2_spec: SignalSpec,
    duration: float,
    T: float = 1e-3,
    mode: FrictionMode = FrictionMode(),
    x0: np.ndarray | None = None,
) -> SimTrace:
    """Run the friction-feedback loop from the zero state (or x0) for `duration`."""
    if duration <= 0:
        raise InvalidParameterError(f"duration={duration} must be > 0")
    if T <= 0:
        raise InvalidParameterError(f"T={T} must be > 0")
    n_steps = int(round(duration / T))
    if abs(n_steps * T - duration) > 1e-9 * max(1.0, duration) or n_steps == 0:
        raise InvalidParameterError(
            f"duration={duration} is not an integer multiple of T={T}"
        )

    n_samples = n_steps + 1
    fa = np.ascontiguousarray(sample_series(fa_spec, n_samples, T))
    mu1 = np.ascontiguousarray(sample_series(mu1_spec, n_samples, T))
    mu2 = np.ascontiguousarray(sample_series(mu2_spec, n_samples, T))
    _check_mu_bounds("mu1", mu1, params.mu_hi_1)
    _check_mu_bounds("mu2", mu2, params.mu_hi_2)

    d = zoh_discretize(build_mimo(params), T)
    return _run(params, d, fa, mu1, mu2, mode, x0)


def _run(
    params: RobotParams,
    d: DiscreteLTI,
    fa: np.ndarray,
    mu1: np.ndarray,
    mu2: np.ndarray,
    mode: FrictionMode,
    x0: np.ndarray | None = None,
) -> SimTrace:
    """Drive the kernel with pre-sampled input sequences."""
    n_samples = len(fa)
    states = np.empty((n_samples, 4))
    f1 = np.empty(n_samples)
    f2 = np.empty(n_samples)
    init = (0.0, 0.0, 0.0, 0.0) if x0 is None else tuple(float(v) for v in x0)

    status, where = _stepper.run_steps(
        np.ascontiguousarray(d.Ad),
        np.ascontiguousarray(d.Bd),
        fa,
        mu1,
        mu2,
        *init,
        params.m1,
        params.m2,
        params.k,
        params.c,
        params.g,
        mode.variant == "karnopp",
        mode.eps_v,
        mode.mu_static_scale,
        STATE_BOUND,
        states_out=states,
        f1_out=f1,
        f2_out=f2,
    )
    if status == _stepper.UNSTABLE:
        raise UnstableSimulationError(
            f"state magnitude exceeded {STATE_BOUND:g} at sample {where} "
            f"(t={where * d.T:g} s); check parameters"
        )
    if status == _stepper.DISSIPATION:
        raise AssertionError(
            f"friction force aligned against velocity at sample {where}"
        )
    inputs = np.column_stack([fa, mu1, mu2, f1, f2])
    return SimTrace(T=d.T, states=states, inputs=inputs)


def net_displacement(trace: SimTrace) -> tuple[float, float]:
    """(dx1, dx2) between the last and first samples."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    dx = trace.states[-1] - trace.states[0]
    return float(dx[0]), float(dx[2])


def average_speed(trace: SimTrace) -> float:
    """Signed net speed of the rear block m1 over the trace duration."""
    if len(trace) < 2:
        raise ValueError("trace has no duration")
    return net_displacement(trace)[0] / trace.duration


def mechanical_energy(trace: SimTrace, params: RobotParams) -> np.ndarray:
    """Kinetic plus spring energy at every sample."""
    s = trace.states
    return (
        0.5 * params.m1 * s[:, 1] ** 2
        + 0.5 * params.m2 * s[:, 3] ** 2
        + 0.5 * params.k * (s[:, 2] - s[:, 0]) ** 2
    )


def center_of_mass_series(trace: SimTrace, params: RobotParams) -> np.ndarray:
    s = trace.states
    return (params.m1 * s[:, 0] + params.m2 * s[:, 2]) / params.total_mass


def _fmt(x: float) -> str:
    # repr of a Python float is the shortest string that round-trips exactly.
    return repr(float(x))


def write_trace_csv(trace: SimTrace, fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for n in range(len(trace)):
        row = [n * trace.T, *trace.states[n], *trace.inputs[n]]
        writer.writerow(_fmt(v) for v in row)


def read_trace_csv(fh: IO[str]) -> SimTrace:
    reader = csv.reader(fh)
    header = next(reader)
    if tuple(header) != TRACE_COLUMNS:
        raise ValueError(f"unexpected trace header {header}")
    rows = [[float(v) for v in row] for row in reader]
    data = np.array(rows)
    if len(data) < 2:
        raise ValueError("trace file has no samples")
    T = data[1, 0] - data[0, 0]
    return SimTrace(T=T, states=data[:, 1:5].copy(), inputs=data[:, 5:10].copy())
