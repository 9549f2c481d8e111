"""Dense small-matrix utilities: expm, ZOH discretization, rank, column space."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MatrixExponentialOverflowError
from .model import ContinuousLTI

# Scaled norm below which the truncated series is accurate to ~1e-16.
_SERIES_THRESHOLD = 0.5
_SERIES_TERMS = 20
_MAX_SQUARINGS = 64


@dataclass(frozen=True)
class DiscreteLTI:
    """ZOH discretization {Ad, Bd} at sample period T."""

    Ad: np.ndarray
    Bd: np.ndarray
    T: float

    def __post_init__(self) -> None:
        if self.T <= 0:
            raise ValueError(f"sample period T={self.T} must be > 0")
        self.Ad.setflags(write=False)
        self.Bd.setflags(write=False)


def matrix_exponential(M: np.ndarray, t: float = 1.0) -> np.ndarray:
    """e^(M t) by scaling-and-squaring with a truncated Taylor series.

    Relative error is well below 1e-12 for ||M t|| <= 100. Raises when the
    norm exceeds what the bounded squaring depth can scale down.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    Mt = M * t
    norm = np.linalg.norm(Mt, 1)
    if not math.isfinite(norm):
        raise MatrixExponentialOverflowError("matrix norm is not finite")
    s = 0
    if norm > _SERIES_THRESHOLD:
        s = int(math.ceil(math.log2(norm / _SERIES_THRESHOLD)))
        if s > _MAX_SQUARINGS:
            raise MatrixExponentialOverflowError(
                f"||M t|| = {norm:.3g} needs {s} squarings, limit {_MAX_SQUARINGS}"
            )
        Mt = Mt / (2.0**s)
    n = M.shape[0]
    result = np.eye(n)
    term = np.eye(n)
    for j in range(1, _SERIES_TERMS + 1):
        term = term @ Mt / j
        result = result + term
    for _ in range(s):
        result = result @ result
    return result


def zoh_discretize(sys: ContinuousLTI, T: float) -> DiscreteLTI:
    """Exact zero-order-hold discretization.

    Uses the augmented exponential of [[A, B], [0, 0]] so no inverse of A is
    needed; A is always singular here (rigid-body mode).
    """
    if T <= 0:
        raise ValueError(f"sample period T={T} must be > 0")
    n = sys.A.shape[0]
    m = sys.B.shape[1]
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = sys.A
    aug[:n, n:] = sys.B
    phi = matrix_exponential(aug, T)
    return DiscreteLTI(Ad=phi[:n, :n].copy(), Bd=phi[:n, n:].copy(), T=T)


def numerical_rank(M: np.ndarray, rel_tol: float = 1e-9) -> int:
    """Count of singular values above rel_tol times the largest one."""
    if not 0 < rel_tol < 1:
        raise ValueError(f"rel_tol={rel_tol} must be in (0, 1)")
    sv = np.linalg.svd(np.atleast_2d(M), compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.count_nonzero(sv > rel_tol * sv[0]))


def column_space_basis(M: np.ndarray, rel_tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical column space of M."""
    M = np.atleast_2d(M)
    rank = numerical_rank(M, rel_tol)
    if rank == 0:
        return np.zeros((M.shape[0], 0))
    u, _, _ = np.linalg.svd(M, full_matrices=False)
    return u[:, :rank]


def projector(basis: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the span of the given basis columns."""
    if basis.shape[1] == 0:
        return np.zeros((basis.shape[0], basis.shape[0]))
    q, _ = np.linalg.qr(basis)
    return q @ q.T


def subspaces_equal(b1: np.ndarray, b2: np.ndarray, tol: float = 1e-8) -> bool:
    """Basis-independent span comparison by projector distance."""
    return float(np.linalg.norm(projector(b1) - projector(b2), 2)) <= tol
