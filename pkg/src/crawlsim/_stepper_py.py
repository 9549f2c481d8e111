"""Pure-Python stepping kernel.

Fallback twin of _stepper_c. Both kernels must perform the identical float
operations in the identical order so that traces are bit-for-bit equal
regardless of backend. Any change here must be mirrored in _stepper_c.pyx.
"""

from __future__ import annotations

import numpy as np

OK = 0
UNSTABLE = 1
DISSIPATION = 2


def run_steps(
    ad: np.ndarray,
    bd: np.ndarray,
    fa: np.ndarray,
    mu1: np.ndarray,
    mu2: np.ndarray,
    x10: float,
    v10: float,
    x20: float,
    v20: float,
    m1: float,
    m2: float,
    k: float,
    c: float,
    g: float,
    karnopp: bool,
    eps_v: float,
    mu_s: float,
    bound: float,
    states_out: np.ndarray,
    f1_out: np.ndarray,
    f2_out: np.ndarray,
) -> tuple[int, int]:
    """Friction-feedback recurrence over len(fa) samples.

    Row n of the outputs holds the (possibly velocity-clamped) state and the
    friction values applied at sample n; the last row gets no state update.
    Returns (status, sample_index).
    """
    a00, a01, a02, a03 = ad[0]
    a10, a11, a12, a13 = ad[1]
    a20, a21, a22, a23 = ad[2]
    a30, a31, a32, a33 = ad[3]
    b00, b01, b02 = bd[0]
    b10, b11, b12 = bd[1]
    b20, b21, b22 = bd[2]
    b30, b31, b32 = bd[3]

    fa_l = fa.tolist()
    mu1_l = mu1.tolist()
    mu2_l = mu2.tolist()
    n_samples = len(fa_l)

    m1g = m1 * g
    m2g = m2 * g
    x1, v1, x2, v2 = x10, v10, x20, v20

    for n in range(n_samples):
        fa_n = fa_l[n]
        cap1 = mu1_l[n] * m1g
        cap2 = mu2_l[n] * m2g

        if karnopp:
            if -eps_v < v1 < eps_v:
                v1 = 0.0
                F1 = -(k * (x1 - x2)) - c * (v1 - v2) - fa_n
                cap_s = mu_s * cap1
                if -cap_s <= F1 <= cap_s:
                    f1 = F1
                elif F1 > 0.0:
                    f1 = cap1
                else:
                    f1 = -cap1
            else:
                f1 = cap1 if v1 > 0.0 else -cap1
            if -eps_v < v2 < eps_v:
                v2 = 0.0
                F2 = -(k * (x2 - x1)) - c * (v2 - v1) + fa_n
                cap_s = mu_s * cap2
                if -cap_s <= F2 <= cap_s:
                    f2 = F2
                elif F2 > 0.0:
                    f2 = cap2
                else:
                    f2 = -cap2
            else:
                f2 = cap2 if v2 > 0.0 else -cap2
        else:
            f1 = cap1 if v1 > 0.0 else (-cap1 if v1 < 0.0 else 0.0)
            f2 = cap2 if v2 > 0.0 else (-cap2 if v2 < 0.0 else 0.0)

        states_out[n, 0] = x1
        states_out[n, 1] = v1
        states_out[n, 2] = x2
        states_out[n, 3] = v2
        f1_out[n] = f1
        f2_out[n] = f2

        # Friction value must never align against its block's velocity.
        if f1 * v1 < 0.0 or f2 * v2 < 0.0:
            return DISSIPATION, n
        if n == n_samples - 1:
            break

        nx1 = a00 * x1 + a01 * v1 + a02 * x2 + a03 * v2 + b00 * fa_n + b01 * f1 + b02 * f2
        nv1 = a10 * x1 + a11 * v1 + a12 * x2 + a13 * v2 + b10 * fa_n + b11 * f1 + b12 * f2
        nx2 = a20 * x1 + a21 * v1 + a22 * x2 + a23 * v2 + b20 * fa_n + b21 * f1 + b22 * f2
        nv2 = a30 * x1 + a31 * v1 + a32 * x2 + a33 * v2 + b30 * fa_n + b31 * f1 + b32 * f2
        x1, v1, x2, v2 = nx1, nv1, nx2, nv2

        if not (-bound < x1 < bound and -bound < v1 < bound
                and -bound < x2 < bound and -bound < v2 < bound):
            return UNSTABLE, n + 1

    return OK, 0
