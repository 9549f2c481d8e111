"""Command-line entry point: batch experiments with JSON config and CSV/JSON output."""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import controllability
from .engine import FrictionMode, write_trace_csv
from .errors import InvalidParameterError
from .experiments import (
    DEFAULT_AXIAL_AMPLITUDE_N,
    DEFAULT_PHI,
    ExperimentConfig,
    calibrate_axial_amplitude,
    run_frequency_grid,
    run_phase_sweep,
    run_trace,
)
from .gait import (
    ANCHOR_THRESHOLD_PSI,
    DEFAULT_PID_GAINS,
    GAIT_PARAMS,
    GaitSchedule,
    PidGains,
    ValvePlant,
    pid_track,
    run_gait,
    write_pid_trace_csv,
)
from .model import RobotParams, build_mimo, build_siso

SUBCOMMANDS = ("analyze", "simulate", "sweep-freq", "sweep-phase", "gait", "pid", "calibrate")


def default_config() -> dict:
    """Full config document with shipped defaults (JSON-able)."""
    p = RobotParams()
    gp = GAIT_PARAMS
    plant = ValvePlant()
    sched_doc = json.loads(_schedule_json(GaitSchedule.reference()))
    return {
        "params": {
            "m1": p.m1, "m2": p.m2, "k": p.k, "c": p.c, "g": p.g,
            "mu_lo_1": p.mu_lo_1, "mu_hi_1": p.mu_hi_1,
            "mu_lo_2": p.mu_lo_2, "mu_hi_2": p.mu_hi_2, "s_a": p.s_a,
        },
        "axial": {
            "kind": "sine", "freq_hz": 1.0,
            "amplitude_N": DEFAULT_AXIAL_AMPLITUDE_N,
            "bias_N": DEFAULT_AXIAL_AMPLITUDE_N, "phase_rad": 0.0,
        },
        "friction": {
            "freq_hz": 1.0, "duty": 0.5, "phi_rad": DEFAULT_PHI,
            "convention": "axial-relative", "enabled": True,
        },
        "mode": {"variant": "sign", "eps_v": 1e-4, "mu_static_scale": 1.0},
        "duration_s": 60.0,
        "T_s": 1e-3,
        "sweep": {
            "axial_freqs_hz": [0.1, 0.2, 0.25, 0.5, 1.0],
            "friction_freqs_hz": [0.1, 0.2, 0.25, 0.5, 1.0],
            "n_phases": 64,
            "mass_trials_kg": [0.1, 0.2],
        },
        "gait": {
            "params": {
                "m1": gp.m1, "m2": gp.m2, "k": gp.k, "c": gp.c, "g": gp.g,
                "mu_lo_1": gp.mu_lo_1, "mu_hi_1": gp.mu_hi_1,
                "mu_lo_2": gp.mu_lo_2, "mu_hi_2": gp.mu_hi_2, "s_a": gp.s_a,
            },
            "n_strides": 10,
            "T_s": 1e-3,
            "strict": True,
            "anchor_threshold_psi": ANCHOR_THRESHOLD_PSI,
            "eps_v": 1e-4,
            "mu_static_scale": 1.0,
            "schedule": sched_doc,
        },
        "pid": {"kp": DEFAULT_PID_GAINS.kp, "ki": DEFAULT_PID_GAINS.ki,
                "kd": DEFAULT_PID_GAINS.kd, "n_strides": 2,
                "settle_window_s": 0.5},
        "plant": {
            "tau_inflate_s": plant.tau_inflate, "tau_deflate_s": plant.tau_deflate,
            "p_supply_psi": plant.p_supply, "p_vacuum_psi": plant.p_vacuum,
            "rate_limit_psi_per_s": plant.rate_limit,
        },
    }


def _schedule_json(sched: GaitSchedule) -> str:
    buf = io.StringIO()
    sched.to_json(buf)
    return buf.getvalue()


def _deep_merge(base: dict, override: dict, path: str = "") -> dict:
    out = dict(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise InvalidParameterError(f"unknown config field {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise InvalidParameterError(f"{where} must be an object")
            out[key] = _deep_merge(base[key], value, where)
        else:
            out[key] = value
    return out


def _apply_sets(doc: dict, assignments: list[str]) -> dict:
    for item in assignments:
        if "=" not in item:
            raise InvalidParameterError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = doc
        parts = key.split(".")
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise InvalidParameterError(f"unknown config field {key!r}")
            node = node[part]
        if parts[-1] not in node:
            raise InvalidParameterError(f"unknown config field {key!r}")
        node[parts[-1]] = value
    return doc


def _params_from(doc: dict, where: str) -> RobotParams:
    try:
        return RobotParams(**{k: float(v) for k, v in doc.items()})
    except TypeError as exc:
        raise InvalidParameterError(f"{where}: {exc}") from exc


def load_config(path: str | None, assignments: list[str]) -> dict:
    doc = default_config()
    if path is not None:
        with open(path) as fh:
            try:
                user = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InvalidParameterError(f"config is not valid JSON: {exc}") from exc
        doc = _deep_merge(doc, user)
    return _apply_sets(doc, assignments)


def experiment_config(doc: dict) -> ExperimentConfig:
    params = _params_from(doc["params"], "params")
    ax = doc["axial"]
    from .signals import SignalSpec

    axial = SignalSpec(kind=ax["kind"], freq=float(ax["freq_hz"]),
                       amplitude=float(ax["amplitude_N"]),
                       bias=float(ax["bias_N"]), phase=float(ax["phase_rad"]))
    fr = doc["friction"]
    mode = doc["mode"]
    sweep = doc["sweep"]
    return ExperimentConfig(
        params=params,
        axial=axial,
        friction_freq=float(fr["freq_hz"]),
        duty=float(fr["duty"]),
        phi=float(fr["phi_rad"]),
        phase_convention=str(fr["convention"]),
        frictionless=not bool(fr["enabled"]),
        duration=float(doc["duration_s"]),
        T=float(doc["T_s"]),
        mode=FrictionMode(variant=str(mode["variant"]), eps_v=float(mode["eps_v"]),
                          mu_static_scale=float(mode["mu_static_scale"])),
        axial_freqs=tuple(float(f) for f in sweep["axial_freqs_hz"]),
        friction_freqs=tuple(float(f) for f in sweep["friction_freqs_hz"]),
        n_phases=int(sweep["n_phases"]),
        mass_trials=tuple(float(m) for m in sweep["mass_trials_kg"]),
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def cmd_analyze(doc: dict, out: Path, jobs: int) -> str:
    params = _params_from(doc["params"], "params")
    reports = {
        "siso": controllability.analyze(build_siso(params), params),
        "mimo": controllability.analyze(build_mimo(params), params),
    }
    _write_json(out / "analysis.json", {k: r.to_dict() for k, r in reports.items()})
    s, m = reports["siso"], reports["mimo"]
    return (
        f"SISO rank {s.rank} (cm_locked={s.cm_locked}); "
        f"MIMO rank {m.rank} (fully_controllable={m.fully_controllable})"
    )


def cmd_simulate(doc: dict, out: Path, jobs: int) -> str:
    cfg = experiment_config(doc)
    trace, summary = run_trace(cfg)
    with open(out / "trace.csv", "w") as fh:
        write_trace_csv(trace, fh)
    _write_json(out / "summary.json", summary)
    return (
        f"simulated {summary['duration_s']} s: dx1={summary['net_displacement_m']['x1']:.4f} m, "
        f"avg speed={summary['average_speed_mps']:.5f} m/s"
    )


def cmd_sweep_freq(doc: dict, out: Path, jobs: int) -> str:
    cfg = experiment_config(doc)
    grid = run_frequency_grid(cfg, jobs=jobs)
    with open(out / "grid.csv", "w") as fh:
        fh.write("friction_hz," + ",".join(_fmt(f) for f in cfg.axial_freqs) + "\n")
        for i, ff in enumerate(cfg.friction_freqs):
            fh.write(_fmt(ff) + "," + ",".join(_fmt(v) for v in grid[i]) + "\n")
    return (
        f"{grid.size} cells; max |dx1| = {np.abs(grid).max():.4f} m "
        f"at the {cfg.duration:g} s horizon"
    )


def cmd_sweep_phase(doc: dict, out: Path, jobs: int) -> str:
    cfg = experiment_config(doc)
    phis, results = run_phase_sweep(cfg, jobs=jobs)
    with open(out / "phase.csv", "w") as fh:
        cols = ",".join(f"dx1_m{m:g}kg" for m in cfg.mass_trials)
        fh.write("phi_rad," + cols + "\n")
        for i, phi in enumerate(phis):
            row = ",".join(_fmt(results[m][i]) for m in cfg.mass_trials)
            fh.write(_fmt(phi) + "," + row + "\n")
    peaks = {m: float(np.abs(results[m]).max()) for m in cfg.mass_trials}
    return f"{len(phis)} phases; peak |dx1| per trial: " + ", ".join(
        f"m={m:g}kg: {v:.4f} m" for m, v in peaks.items()
    )


def _gait_pieces(doc: dict):
    g = doc["gait"]
    params = _params_from(g["params"], "gait.params")
    sched = GaitSchedule.from_json(io.StringIO(json.dumps(g["schedule"])))
    gains = PidGains(kp=float(doc["pid"]["kp"]), ki=float(doc["pid"]["ki"]),
                     kd=float(doc["pid"]["kd"]))
    pl = doc["plant"]
    plant = ValvePlant(
        tau_inflate=float(pl["tau_inflate_s"]), tau_deflate=float(pl["tau_deflate_s"]),
        p_supply=float(pl["p_supply_psi"]), p_vacuum=float(pl["p_vacuum_psi"]),
        rate_limit=float(pl["rate_limit_psi_per_s"]),
    )
    return g, params, sched, gains, plant


def cmd_gait(doc: dict, out: Path, jobs: int) -> str:
    g, params, sched, gains, plant = _gait_pieces(doc)
    run = run_gait(
        sched, params,
        n_strides=int(g["n_strides"]), T=float(g["T_s"]),
        gains=gains, plant=plant,
        mode=FrictionMode(variant="karnopp", eps_v=float(g["eps_v"]),
                          mu_static_scale=float(g["mu_static_scale"])),
        anchor_threshold_psi=float(g["anchor_threshold_psi"]),
        strict=bool(g["strict"]),
    )
    with open(out / "trace.csv", "w") as fh:
        write_trace_csv(run.trace, fh)
    with open(out / "pid_trace.csv", "w") as fh:
        write_pid_trace_csv(run.pressures, fh)
    _write_json(out / "gait_metrics.json", {
        **run.metrics.to_dict(),
        "rmse_psi": run.rmse,
        "feasibility": run.feasibility,
    })
    m = run.metrics
    return (
        f"{int(g['n_strides'])} strides, period {m.stride_period} s, "
        f"stride length {m.stride_length:.4f} m, avg speed {m.avg_speed:.5f} m/s"
    )


def cmd_pid(doc: dict, out: Path, jobs: int) -> str:
    g, params, sched, gains, plant = _gait_pieces(doc)
    n_strides = int(doc["pid"]["n_strides"])
    settle = float(doc["pid"]["settle_window_s"])
    traces, rmse = {}, {}
    for name, attr in (("rear", "rear_psi"), ("central", "central_psi"),
                       ("front", "front_psi")):
        profile = [(p.duration, getattr(p, attr)) for p in sched.phases] * n_strides
        traces[name], rmse[name] = pid_track(
            profile, gains, plant, float(g["T_s"]), settle_window=settle
        )
    with open(out / "pid_trace.csv", "w") as fh:
        write_pid_trace_csv(traces, fh)
    return "tracking rmse (psi): " + ", ".join(
        f"{k}={v:.5f}" for k, v in rmse.items()
    )


def cmd_calibrate(doc: dict, out: Path, jobs: int) -> str:
    cfg = experiment_config(doc)
    res = calibrate_axial_amplitude(cfg)
    _write_json(out / "calibration.json", res.to_dict())
    return (
        f"calibrated axial amplitude {res.amplitude:.2f} N "
        f"(speed {res.speed:.5f} m/s vs target {res.target} m/s)"
    )


COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "sweep-freq": cmd_sweep_freq,
    "sweep-phase": cmd_sweep_phase,
    "gait": cmd_gait,
    "pid": cmd_pid,
    "calibrate": cmd_calibrate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crawlsim",
        description="Friction-modulated two-mass crawler: simulation and analysis",
    )
    sub = parser.add_subparsers(dest="command")
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--set", dest="assignments", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config field")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return 1
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    if args.command not in COMMANDS:
        parser.print_usage(sys.stderr)
        return 1
    try:
        doc = load_config(args.config, args.assignments)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        line = COMMANDS[args.command](doc, out, max(1, args.jobs))
    except (InvalidParameterError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failures: instability, infeasible schedule
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
