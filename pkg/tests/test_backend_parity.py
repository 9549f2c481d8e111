"""The compiled and pure-Python kernels must produce bit-identical traces."""

import math

import numpy as np
import pytest

from crawlsim import _stepper_py
from crawlsim.linalg import zoh_discretize
from crawlsim.model import RobotParams, build_mimo
from crawlsim.signals import SignalSpec, sample_series

try:
    from crawlsim import _stepper_c
except ImportError:
    _stepper_c = None

needs_ext = pytest.mark.skipif(_stepper_c is None, reason="compiled kernel not built")


def drive_kernel(kernel, params, fa, mu1, mu2, T, karnopp=False):
    d = zoh_discretize(build_mimo(params), T)
    n = len(fa)
    states = np.empty((n, 4))
    f1 = np.empty(n)
    f2 = np.empty(n)
    status, where = kernel.run_steps(
        np.ascontiguousarray(d.Ad), np.ascontiguousarray(d.Bd),
        fa, mu1, mu2,
        0.0, 0.0, 0.0, 0.0,
        params.m1, params.m2, params.k, params.c, params.g,
        karnopp, 1e-4, 1.0, 1e6,
        states_out=states, f1_out=f1, f2_out=f2,
    )
    assert status == 0
    return states, f1, f2


def reference_inputs(params, n, T):
    fa = sample_series(SignalSpec(kind="sine", freq=1.0, amplitude=10.8, bias=10.8), n, T)
    mu1 = sample_series(
        SignalSpec.square_between(params.mu_lo_1, params.mu_hi_1, 1.0,
                                  phase=0.4 * math.pi), n, T)
    mu2 = sample_series(
        SignalSpec.square_between(params.mu_lo_2, params.mu_hi_2, 1.0,
                                  phase=1.4 * math.pi), n, T)
    return fa, mu1, mu2


@needs_ext
@pytest.mark.parametrize("karnopp", [False, True])
def test_kernels_bit_identical(karnopp):
    params = RobotParams()
    T = 1e-3
    fa, mu1, mu2 = reference_inputs(params, 5001, T)
    out_c = drive_kernel(_stepper_c, params, fa, mu1, mu2, T, karnopp)
    out_py = drive_kernel(_stepper_py, params, fa, mu1, mu2, T, karnopp)
    for a, b in zip(out_c, out_py):
        np.testing.assert_array_equal(a, b)


@needs_ext
def test_status_codes_agree():
    assert _stepper_c.OK == _stepper_py.OK
    assert _stepper_c.UNSTABLE == _stepper_py.UNSTABLE
    assert _stepper_c.DISSIPATION == _stepper_py.DISSIPATION
