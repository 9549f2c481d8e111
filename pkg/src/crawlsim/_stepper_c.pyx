# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled stepping kernel.

Operation-for-operation twin of _stepper_py.run_steps; built with
-ffp-contract=off so results stay bit-identical to the Python kernel.
"""

OK = 0
UNSTABLE = 1
DISSIPATION = 2


def run_steps(
    const double[:, ::1] ad,
    const double[:, ::1] bd,
    const double[::1] fa,
    const double[::1] mu1,
    const double[::1] mu2,
    double x10,
    double v10,
    double x20,
    double v20,
    double m1,
    double m2,
    double k,
    double c,
    double g,
    bint karnopp,
    double eps_v,
    double mu_s,
    double bound,
    double[:, ::1] states_out,
    double[::1] f1_out,
    double[::1] f2_out,
):
    cdef double a00 = ad[0, 0], a01 = ad[0, 1], a02 = ad[0, 2], a03 = ad[0, 3]
    cdef double a10 = ad[1, 0], a11 = ad[1, 1], a12 = ad[1, 2], a13 = ad[1, 3]
    cdef double a20 = ad[2, 0], a21 = ad[2, 1], a22 = ad[2, 2], a23 = ad[2, 3]
    cdef double a30 = ad[3, 0], a31 = ad[3, 1], a32 = ad[3, 2], a33 = ad[3, 3]
    cdef double b00 = bd[0, 0], b01 = bd[0, 1], b02 = bd[0, 2]
    cdef double b10 = bd[1, 0], b11 = bd[1, 1], b12 = bd[1, 2]
    cdef double b20 = bd[2, 0], b21 = bd[2, 1], b22 = bd[2, 2]
    cdef double b30 = bd[3, 0], b31 = bd[3, 1], b32 = bd[3, 2]

    cdef Py_ssize_t n_samples = fa.shape[0]
    cdef double m1g = m1 * g
    cdef double m2g = m2 * g
    cdef double x1 = x10, v1 = v10, x2 = x20, v2 = v20
    cdef double fa_n, cap1, cap2, cap_s, F1, F2, f1, f2
    cdef double nx1, nv1, nx2, nv2
    cdef Py_ssize_t n

    for n in range(n_samples):
        fa_n = fa[n]
        cap1 = mu1[n] * m1g
        cap2 = mu2[n] * m2g

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

        if f1 * v1 < 0.0 or f2 * v2 < 0.0:
            return DISSIPATION, n
        if n == n_samples - 1:
            break

        nx1 = a00 * x1 + a01 * v1 + a02 * x2 + a03 * v2 + b00 * fa_n + b01 * f1 + b02 * f2
        nv1 = a10 * x1 + a11 * v1 + a12 * x2 + a13 * v2 + b10 * fa_n + b11 * f1 + b12 * f2
        nx2 = a20 * x1 + a21 * v1 + a22 * x2 + a23 * v2 + b20 * fa_n + b21 * f1 + b22 * f2
        nv2 = a30 * x1 + a31 * v1 + a32 * x2 + a33 * v2 + b30 * fa_n + b31 * f1 + b32 * f2
        x1 = nx1
        v1 = nv1
        x2 = nx2
        v2 = nv2

        if not (-bound < x1 < bound and -bound < v1 < bound
                and -bound < x2 < bound and -bound < v2 < bound):
            return UNSTABLE, n + 1

    return OK, 0
