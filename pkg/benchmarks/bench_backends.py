#!/usr/bin/env python3
"""Benchmark the compiled stepping kernel against the pure-Python twin.

Both kernels run the same friction-feedback recurrence on identical inputs;
the traces must match bit for bit, only the wall time differs.

    python benchmarks/bench_backends.py [--duration 60] [--repeats 5]
"""

import argparse
import math
import time

import numpy as np

from crawlsim import _stepper_py
from crawlsim.linalg import zoh_discretize
from crawlsim.model import RobotParams, build_mimo
from crawlsim.signals import SignalSpec, sample_series

try:
    from crawlsim import _stepper_c
except ImportError:
    _stepper_c = None


def build_inputs(duration: float, T: float):
    params = RobotParams()
    n = int(round(duration / T)) + 1
    fa = sample_series(SignalSpec(kind="sine", freq=1.0, amplitude=10.8, bias=10.8), n, T)
    mu1 = sample_series(SignalSpec.square_between(0.1, 1.0, 1.0, phase=0.4 * math.pi), n, T)
    mu2 = sample_series(SignalSpec.square_between(0.1, 1.0, 1.0, phase=1.4 * math.pi), n, T)
    d = zoh_discretize(build_mimo(params), T)
    return params, d, fa, mu1, mu2


def run(kernel, params, d, fa, mu1, mu2):
    n = len(fa)
    states = np.empty((n, 4))
    f1 = np.empty(n)
    f2 = np.empty(n)
    status, _ = kernel.run_steps(
        np.ascontiguousarray(d.Ad), np.ascontiguousarray(d.Bd),
        fa, mu1, mu2, 0.0, 0.0, 0.0, 0.0,
        params.m1, params.m2, params.k, params.c, params.g,
        False, 1e-4, 1.0, 1e6,
        states_out=states, f1_out=f1, f2_out=f2,
    )
    assert status == 0
    return states


def bench(kernel, args, inputs) -> float:
    best = math.inf
    for _ in range(args.repeats):
        t0 = time.perf_counter()
        run(kernel, *inputs)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--duration", type=float, default=60.0)
    parser.add_argument("--T", type=float, default=1e-3)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    inputs = build_inputs(args.duration, args.T)
    steps = len(inputs[2]) - 1

    t_py = bench(_stepper_py, args, inputs)
    print(f"pure python : {t_py * 1e3:8.1f} ms  ({steps / t_py / 1e6:6.2f} Msteps/s)")

    if _stepper_c is None:
        print("compiled    : not built (python setup.py build_ext --inplace)")
        return

    t_c = bench(_stepper_c, args, inputs)
    print(f"compiled    : {t_c * 1e3:8.1f} ms  ({steps / t_c / 1e6:6.2f} Msteps/s)")
    print(f"speedup     : {t_py / t_c:8.1f}x")

    same = np.array_equal(run(_stepper_c, *inputs), run(_stepper_py, *inputs))
    print(f"bit-identical traces: {same}")
    assert same


if __name__ == "__main__":
    main()
