"""Four-phase anchoring gait: pressure schedule, PID valve loops, stride metrics.

One stride: (1) rear anchor inflates, (2) the axial actuator expands and
drives the front block forward while the rear stays anchored, (3) the front
anchor inflates, (4) rear and axial deflate and the spring pulls the rear
block forward. Anchoring requires the static friction cap of the anchored
block to dominate the axial force while the sliding block's cap stays below
it; the two inequalities are checked per stride phase.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, replace
from typing import IO, Sequence

import numpy as np

from .engine import FrictionMode, SimTrace, _run
from .errors import InfeasibleScheduleError, InvalidParameterError
from .linalg import zoh_discretize
from .model import PSI_TO_PA, RobotParams, build_mimo, psi_to_pa

ANCHOR_THRESHOLD_PSI = 1.2  # reference pressure that establishes firm contact

# Tracked pressure within 5% of the threshold counts as firm contact; contact
# releases 10% below it. The band keeps the anchor from flickering while the
# PID dithers around its setpoint.
ANCHOR_ENGAGE_RATIO = 0.95
ANCHOR_RELEASE_RATIO = 0.90

# Gait parameter set sized so the Table-derived axial force (about 19.9 N at
# 3 psi over the 35 mm bore) stays inside the anchored block's static cap
# mu_hi*m*g (about 23.5 N at 2.4 kg). The sweep-scale 0.2 kg blocks cannot
# anchor against that force.
GAIT_PARAMS = RobotParams(m1=2.4, m2=2.4)


@dataclass(frozen=True)
class PidGains:
    """PID gains mapping pressure error (psi) to valve duty in [0, 1]."""

    kp: float
    ki: float
    kd: float = 0.0
    output_min: float = 0.0
    output_max: float = 1.0


@dataclass(frozen=True)
class ValvePlant:
    """First-order valve/actuator pressure dynamics driven by PWM duty.

    duty blends an inflation path toward p_supply against a deflation path
    toward p_vacuum; the vacuum pump makes full deflation reachable within a
    phase. Pressures in psi.
    """

    tau_inflate: float = 0.2
    tau_deflate: float = 0.2
    p_supply: float = 5.0
    p_vacuum: float = -0.5
    rate_limit: float = 50.0  # psi/s

    def __post_init__(self) -> None:
        if self.tau_inflate <= 0 or self.tau_deflate <= 0:
            raise InvalidParameterError("plant time constants must be > 0")
        if not self.p_vacuum <= 0 < self.p_supply:
            raise InvalidParameterError(
                f"need p_vacuum <= 0 < p_supply, got {self.p_vacuum}, {self.p_supply}"
            )
        if self.rate_limit <= 0:
            raise InvalidParameterError("rate_limit must be > 0")

    def step(self, p: float, duty: float, T: float) -> float:
        """Exact update of the blended first-order dynamics over one sample."""
        lam = duty / self.tau_inflate + (1.0 - duty) / self.tau_deflate
        q = duty * self.p_supply / self.tau_inflate \
            + (1.0 - duty) * self.p_vacuum / self.tau_deflate
        p_ss = q / lam
        p_new = p_ss + (p - p_ss) * math.exp(-lam * T)
        dp_max = self.rate_limit * T
        if p_new > p + dp_max:
            return p + dp_max
        if p_new < p - dp_max:
            return p - dp_max
        return p_new


# Defaults found by tune_gains() on the reference stride profile; identical
# gains suffice for all three loops with this plant.
DEFAULT_PID_GAINS = PidGains(kp=0.5, ki=3.75, kd=0.0)


@dataclass(frozen=True)
class PidTrace:
    """Closed-loop pressure history of one actuator."""

    T: float
    reference: np.ndarray  # psi
    measured: np.ndarray  # psi
    duty: np.ndarray

    def __len__(self) -> int:
        return len(self.reference)


def build_reference(profile: Sequence[tuple[float, float]], T: float) -> np.ndarray:
    """Sample a piecewise-constant (duration_s, psi) profile at period T."""
    if not profile:
        raise InvalidParameterError("empty pressure profile")
    total = math.fsum(d for d, _ in profile)
    n = int(round(total / T))
    ref = np.empty(n + 1)
    start = 0.0
    for dur, val in profile:
        i0 = int(round(start / T))
        i1 = int(round((start + dur) / T))
        ref[i0:min(i1, n + 1)] = val
        start += dur
    ref[n] = profile[-1][1]
    return ref


def _segment_starts(ref: np.ndarray) -> np.ndarray:
    """Sample indices where the piecewise-constant reference changes value."""
    changes = np.flatnonzero(np.diff(ref) != 0.0) + 1
    return np.concatenate([[0], changes])


def pid_track(
    reference: Sequence[tuple[float, float]] | np.ndarray,
    gains: PidGains,
    plant: ValvePlant,
    T: float = 1e-3,
    settle_window: float = 0.5,
    p0: float = 0.0,
) -> tuple[PidTrace, float]:
    """Close one PID pressure loop over the reference profile.

    Returns the trace and the RMSE computed after dropping the first
    settle_window seconds of every constant reference segment. The integrator
    is frozen while the duty output saturates.
    """
    if T <= 0:
        raise InvalidParameterError(f"T={T} must be > 0")
    ref = reference if isinstance(reference, np.ndarray) else build_reference(reference, T)
    if ref.min() < plant.p_vacuum or ref.max() > plant.p_supply:
        raise InvalidParameterError(
            "reference leaves the plant's reachable range "
            f"[{plant.p_vacuum}, {plant.p_supply}] psi"
        )
    n = len(ref)
    measured = np.empty(n)
    duty = np.empty(n)
    p = p0
    integ = 0.0
    p_prev = p0
    for i in range(n):
        measured[i] = p
        e = ref[i] - p
        d_meas = (p - p_prev) / T if i > 0 else 0.0
        u_raw = gains.kp * e + gains.ki * integ - gains.kd * d_meas
        u = min(max(u_raw, gains.output_min), gains.output_max)
        if u == u_raw:
            integ += e * T
        duty[i] = u
        p_prev = p
        if i < n - 1:
            p = plant.step(p, u, T)

    err = ref - measured
    mask = np.ones(n, dtype=bool)
    skip = int(round(settle_window / T))
    for s in _segment_starts(ref):
        mask[s:s + skip] = False
    if not mask.any():
        raise InvalidParameterError(
            "settle_window leaves no samples to score; shorten it"
        )
    rmse = float(np.sqrt(np.mean(err[mask] ** 2)))
    return PidTrace(T=T, reference=ref, measured=measured, duty=duty), rmse


def tune_gains(
    reference: Sequence[tuple[float, float]],
    plant: ValvePlant,
    T: float = 1e-3,
    start: PidGains = PidGains(kp=1.0, ki=5.0, kd=0.0),
    sweeps: int = 4,
) -> PidGains:
    """Coordinate search over (kp, ki, kd) minimizing tracking RMSE."""
    ref = build_reference(reference, T)

    def score(g: PidGains) -> float:
        return pid_track(ref, g, plant, T)[1]

    best = start
    best_rmse = score(best)
    factors = (0.5, 0.75, 1.5, 2.0)
    for _ in range(sweeps):
        for field in ("kp", "ki", "kd"):
            base = getattr(best, field)
            candidates = [base * f for f in factors]
            if field == "kd" and base == 0.0:
                candidates += [0.001, 0.01]
            for cand in candidates:
                trial = replace(best, **{field: cand})
                r = score(trial)
                if r < best_rmse:
                    best, best_rmse = trial, r
    return best


@dataclass(frozen=True)
class GaitPhase:
    duration: float  # s
    rear_psi: float
    central_psi: float
    front_psi: float

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise InvalidParameterError(f"phase duration {self.duration} must be > 0")
        for name in ("rear_psi", "central_psi", "front_psi"):
            if getattr(self, name) < 0:
                raise InvalidParameterError(f"{name}={getattr(self, name)} must be >= 0")


@dataclass(frozen=True)
class GaitSchedule:
    """Ordered four-phase pressure timetable (psi)."""

    phases: tuple[GaitPhase, GaitPhase, GaitPhase, GaitPhase]

    def __post_init__(self) -> None:
        if len(self.phases) != 4:
            raise InvalidParameterError(f"need exactly 4 phases, got {len(self.phases)}")

    @property
    def stride_period(self) -> float:
        return math.fsum(p.duration for p in self.phases)

    @property
    def protrusion_time(self) -> float:
        return self.phases[1].duration

    @property
    def stance_time(self) -> float:
        return math.fsum(p.duration for p in (self.phases[2], self.phases[3], self.phases[0]))

    def phase_at(self, t: float) -> tuple[int, GaitPhase]:
        t = math.fmod(t, self.stride_period)
        if t < 0:
            t += self.stride_period
        acc = 0.0
        for i, ph in enumerate(self.phases):
            acc += ph.duration
            if t < acc:
                return i, ph
        return 3, self.phases[3]

    @staticmethod
    def reference(protrusion: float = 1.6, stance: float = 2.4) -> "GaitSchedule":
        """Default timetable: reference pressures with the stance split evenly
        across phases 3, 4 and 1."""
        rest = stance / 3.0
        return GaitSchedule(
            phases=(
                GaitPhase(rest, 1.2, 0.0, 0.0),
                GaitPhase(protrusion, 1.2, 3.0, 0.0),
                GaitPhase(rest, 1.2, 3.0, 1.2),
                GaitPhase(rest, 0.0, 0.0, 1.2),
            )
        )

    def to_json(self, fh: IO[str]) -> None:
        doc = {
            "phases": [
                {
                    "duration_s": p.duration,
                    "rear_psi": p.rear_psi,
                    "central_psi": p.central_psi,
                    "front_psi": p.front_psi,
                }
                for p in self.phases
            ]
        }
        json.dump(doc, fh, indent=2)

    @staticmethod
    def from_json(fh: IO[str]) -> "GaitSchedule":
        doc = json.load(fh)
        try:
            phases = tuple(
                GaitPhase(
                    duration=float(p["duration_s"]),
                    rear_psi=float(p["rear_psi"]),
                    central_psi=float(p["central_psi"]),
                    front_psi=float(p["front_psi"]),
                )
                for p in doc["phases"]
            )
        except (KeyError, TypeError) as exc:
            raise InvalidParameterError(f"malformed gait schedule: {exc}") from exc
        return GaitSchedule(phases=phases)  # type: ignore[arg-type]


@dataclass(frozen=True)
class GaitMetrics:
    stride_length: float  # m, steady per-stride advance of the leading block
    protrusion_time: float  # s
    stance_time: float  # s
    stride_period: float  # s
    avg_speed: float  # m/s

    def to_dict(self) -> dict:
        return {
            "stride_length_m": self.stride_length,
            "protrusion_time_s": self.protrusion_time,
            "stance_time_s": self.stance_time,
            "stride_period_s": self.stride_period,
            "avg_speed_mps": self.avg_speed,
        }


def check_anchoring(fa: float, f1_cap: float, f2_cap: float, direction: str) -> bool:
    """Anchoring inequality for one actuation direction.

    inflating: the rear block holds (f1_cap >= |fa|) while the front slides
    (|fa| > f2_cap); deflating is the mirror case.
    """
    if direction not in ("inflating", "deflating"):
        raise InvalidParameterError(f"unknown direction {direction!r}")
    fa = abs(fa)
    if direction == "inflating":
        return f1_cap >= fa and fa > f2_cap
    return f2_cap >= fa and fa > f1_cap


def schedule_to_plant_inputs(
    sched: GaitSchedule,
    params: RobotParams,
    t: float,
    anchor_threshold_psi: float = ANCHOR_THRESHOLD_PSI,
) -> tuple[float, float, float]:
    """(fa, mu1, mu2) the schedule commands at time t (wraps past one stride).

    Rear pressure drives the trailing block's coefficient, front the leading
    block's; an actuator at or above the contact threshold anchors.
    """
    _, ph = sched.phase_at(t)
    fa = params.s_a * psi_to_pa(ph.central_psi)
    mu1 = params.mu_hi_1 if ph.rear_psi >= anchor_threshold_psi else params.mu_lo_1
    mu2 = params.mu_hi_2 if ph.front_psi >= anchor_threshold_psi else params.mu_lo_2
    return fa, mu1, mu2


def feasibility_report(
    sched: GaitSchedule,
    params: RobotParams,
    anchor_threshold_psi: float = ANCHOR_THRESHOLD_PSI,
) -> dict:
    """Anchoring checks for the protrusion (phase 2) and recovery (phase 4).

    The deflation check uses the axial force the spring holds at the end of
    phase 3, i.e. the phase-3 central pressure.
    """
    ph2, ph3, ph4 = sched.phases[1], sched.phases[2], sched.phases[3]

    def caps(ph: GaitPhase) -> tuple[float, float]:
        mu1 = params.mu_hi_1 if ph.rear_psi >= anchor_threshold_psi else params.mu_lo_1
        mu2 = params.mu_hi_2 if ph.front_psi >= anchor_threshold_psi else params.mu_lo_2
        return mu1 * params.m1 * params.g, mu2 * params.m2 * params.g

    fa_inflate = params.s_a * psi_to_pa(ph2.central_psi)
    f1_cap, f2_cap = caps(ph2)
    inflate_ok = check_anchoring(fa_inflate, f1_cap, f2_cap, "inflating")

    fa_deflate = params.s_a * psi_to_pa(ph3.central_psi)
    f1_cap_d, f2_cap_d = caps(ph4)
    deflate_ok = check_anchoring(fa_deflate, f1_cap_d, f2_cap_d, "deflating")

    return {
        "inflating": {"ok": inflate_ok, "fa_N": fa_inflate,
                      "f1_cap_N": f1_cap, "f2_cap_N": f2_cap},
        "deflating": {"ok": deflate_ok, "fa_N": fa_deflate,
                      "f1_cap_N": f1_cap_d, "f2_cap_N": f2_cap_d},
        "feasible": inflate_ok and deflate_ok,
    }


@dataclass(frozen=True)
class GaitRun:
    trace: SimTrace
    metrics: GaitMetrics
    pressures: dict[str, PidTrace]  # keys: rear, central, front
    rmse: dict[str, float]
    feasibility: dict
    stride_samples: int


def run_gait(
    sched: GaitSchedule,
    params: RobotParams = GAIT_PARAMS,
    n_strides: int = 10,
    T: float = 1e-3,
    gains: PidGains | dict[str, PidGains] = DEFAULT_PID_GAINS,
    plant: ValvePlant | dict[str, ValvePlant] = ValvePlant(),
    mode: FrictionMode = FrictionMode(variant="karnopp"),
    anchor_threshold_psi: float = ANCHOR_THRESHOLD_PSI,
    strict: bool = True,
) -> GaitRun:
    """Track the schedule with three PID loops and drive the crawler with the
    tracked pressures.

    The axial force comes from the tracked central pressure (vacuum pull
    included), so imperfect tracking degrades the stride. Static anchoring is
    essential here, hence the stiction friction mode is enforced.
    """
    if mode.variant != "karnopp":
        raise InvalidParameterError("gait simulation requires the karnopp friction mode")
    if n_strides < 1:
        raise InvalidParameterError(f"n_strides={n_strides} must be >= 1")
    period = sched.stride_period
    stride_samples = int(round(period / T))
    if abs(stride_samples * T - period) > 1e-9:
        raise InvalidParameterError(
            f"stride period {period} is not an integer multiple of T={T}"
        )

    feas = feasibility_report(sched, params, anchor_threshold_psi)
    if not feas["feasible"]:
        if strict:
            raise InfeasibleScheduleError(
                f"schedule fails anchoring: {feas}"
            )
        warnings.warn(f"gait schedule fails anchoring checks: {feas}", stacklevel=2)

    gains_by = gains if isinstance(gains, dict) else dict.fromkeys(
        ("rear", "central", "front"), gains)
    plant_by = plant if isinstance(plant, dict) else dict.fromkeys(
        ("rear", "central", "front"), plant)

    profile = {
        "rear": [(p.duration, p.rear_psi) for p in sched.phases],
        "central": [(p.duration, p.central_psi) for p in sched.phases],
        "front": [(p.duration, p.front_psi) for p in sched.phases],
    }
    pressures: dict[str, PidTrace] = {}
    rmse: dict[str, float] = {}
    for name in ("rear", "central", "front"):
        tr, r = pid_track(
            profile[name] * n_strides, gains_by[name], plant_by[name], T
        )
        pressures[name] = tr
        rmse[name] = r

    # Axial force from the tracked central pressure; negative gauge pressure
    # pulls the blocks together (vacuum path).
    fa = params.s_a * PSI_TO_PA * pressures["central"].measured
    mu1 = _anchor_series(pressures["rear"].measured, anchor_threshold_psi,
                         params.mu_lo_1, params.mu_hi_1)
    mu2 = _anchor_series(pressures["front"].measured, anchor_threshold_psi,
                         params.mu_lo_2, params.mu_hi_2)

    d = zoh_discretize(build_mimo(params), T)
    trace = _run(params, d, np.ascontiguousarray(fa),
                 np.ascontiguousarray(mu1), np.ascontiguousarray(mu2), mode)

    metrics = _gait_metrics(trace, sched, n_strides, stride_samples)
    return GaitRun(trace=trace, metrics=metrics, pressures=pressures,
                   rmse=rmse, feasibility=feas, stride_samples=stride_samples)


def simulate_gait(
    sched: GaitSchedule,
    params: RobotParams = GAIT_PARAMS,
    n_strides: int = 10,
    T: float = 1e-3,
    **kwargs,
) -> tuple[SimTrace, GaitMetrics]:
    run = run_gait(sched, params, n_strides, T, **kwargs)
    return run.trace, run.metrics


def _anchor_series(p_measured: np.ndarray, threshold: float,
                   mu_lo: float, mu_hi: float) -> np.ndarray:
    """Map tracked anchor pressure to a friction coefficient with hysteresis."""
    engage = threshold * ANCHOR_ENGAGE_RATIO
    release = threshold * ANCHOR_RELEASE_RATIO
    mu = np.empty_like(p_measured)
    engaged = False
    for i, p in enumerate(p_measured.tolist()):
        if engaged:
            if p < release:
                engaged = False
        elif p >= engage:
            engaged = True
        mu[i] = mu_hi if engaged else mu_lo
    return mu


def _gait_metrics(trace: SimTrace, sched: GaitSchedule, n_strides: int,
                  stride_samples: int) -> GaitMetrics:
    x2 = trace.states[:, 2]
    bounds = [s * stride_samples for s in range(n_strides + 1)]
    per_stride = np.array([x2[bounds[s + 1]] - x2[bounds[s]] for s in range(n_strides)])
    steady = per_stride[1:] if n_strides >= 2 else per_stride
    return GaitMetrics(
        stride_length=float(np.mean(steady)),
        protrusion_time=sched.protrusion_time,
        stance_time=sched.stance_time,
        stride_period=sched.stride_period,
        avg_speed=float((x2[-1] - x2[0]) / trace.duration),
    )


PID_TRACE_COLUMNS = (
    "t",
    "p_ref_rear", "p_m_rear",
    "p_ref_central", "p_m_central",
    "p_ref_front", "p_m_front",
    "duty_rear", "duty_central", "duty_front",
)


def write_pid_trace_csv(traces: dict[str, PidTrace], fh: IO[str]) -> None:
    """Export the three tracked loops in the shared CSV convention."""
    import csv as _csv

    rear, central, front = traces["rear"], traces["central"], traces["front"]
    writer = _csv.writer(fh, lineterminator="\n")
    writer.writerow(PID_TRACE_COLUMNS)
    for n in range(len(rear)):
        row = [
            n * rear.T,
            rear.reference[n], rear.measured[n],
            central.reference[n], central.measured[n],
            front.reference[n], front.measured[n],
            rear.duty[n], central.duty[n], front.duty[n],
        ]
        writer.writerow(repr(float(v)) for v in row)
