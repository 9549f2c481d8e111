"""Controllability analysis: Kalman matrix, rank, subspace, CM immobility."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import column_space_basis, numerical_rank
from .model import ContinuousLTI, RobotParams, center_of_mass

CM_LOCK_TOL = 1e-9


@dataclass(frozen=True)
class ControllabilityReport:
    rank: int
    basis: np.ndarray  # orthonormal columns spanning the controllable subspace
    cm_locked: bool  # every reachable state leaves the centre of mass at 0
    fully_controllable: bool

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "basis": self.basis.T.tolist(),
            "cm_locked": self.cm_locked,
            "fully_controllable": self.fully_controllable,
        }


def controllability_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Kalman matrix [B, AB, A^2 B, A^3 B] (n block powers for n states)."""
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0]:
        raise ValueError(f"incompatible shapes A{A.shape}, B{B.shape}")
    blocks = [B]
    for _ in range(A.shape[0] - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def _equilibrate_columns(M: np.ndarray) -> np.ndarray:
    # Column norms of the Kalman matrix span many decades (powers of A);
    # normalizing each column preserves the column space and keeps the
    # rank decision stable across the whole rel_tol range.
    norms = np.linalg.norm(M, axis=0)
    scale = np.where(norms > 0, norms, 1.0)
    return M / scale


def analyze(
    sys: ContinuousLTI, params: RobotParams, rel_tol: float = 1e-9
) -> ControllabilityReport:
    """Rank and controllable-subspace report for a realization of the crawler."""
    ctrb = _equilibrate_columns(controllability_matrix(sys.A, sys.B))
    rank = numerical_rank(ctrb, rel_tol)
    basis = column_space_basis(ctrb, rel_tol)
    cm_locked = all(
        abs(center_of_mass(basis[:, j], params)) <= CM_LOCK_TOL
        for j in range(basis.shape[1])
    )
    return ControllabilityReport(
        rank=rank,
        basis=basis,
        cm_locked=cm_locked,
        fully_controllable=(rank == sys.A.shape[0]),
    )


def reachable_position_basis(params: RobotParams) -> np.ndarray:
    """Closed-form basis of the single-input controllable subspace.

    Positions move in the ratio x2 = -(m1/m2) x1 (same for velocities), so
    the centre of mass cannot be displaced by the axial force alone.
    """
    r = params.m1 / params.m2
    chi1 = np.array([1.0, 0.0, -r, 0.0])
    chi2 = np.array([0.0, 1.0, 0.0, -r])
    return np.column_stack([chi1, chi2])
