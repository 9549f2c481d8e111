import numpy as np
import pytest

from crawlsim.errors import MatrixExponentialOverflowError
from crawlsim.linalg import (
    DiscreteLTI,
    column_space_basis,
    matrix_exponential,
    numerical_rank,
    projector,
    subspaces_equal,
    zoh_discretize,
)
from crawlsim.model import RobotParams, build_mimo, build_siso


def taylor_expm(M: np.ndarray, terms: int = 60) -> np.ndarray:
    """Independent oracle: plain truncated series, no scaling.

    Trustworthy for ||M|| up to ~10 where the largest intermediate term
    stays around 1e3 (cancellation ~1e-13 relative).
    """
    out = np.eye(M.shape[0])
    term = np.eye(M.shape[0])
    for j in range(1, terms + 1):
        term = term @ M / j
        out = out + term
    return out


class TestMatrixExponential:
    def test_zero_matrix(self):
        np.testing.assert_array_equal(matrix_exponential(np.zeros((3, 3)), 5.0), np.eye(3))

    def test_diagonal(self):
        d = np.array([0.3, -1.2, 2.0])
        got = matrix_exponential(np.diag(d), 0.7)
        np.testing.assert_allclose(got, np.diag(np.exp(d * 0.7)), rtol=1e-13)

    def test_nilpotent_dynamics_is_exact_two_terms(self):
        A = build_siso(RobotParams(m1=0.2, m2=0.2, k=0.0, c=0.0)).A
        got = matrix_exponential(A, 0.001)
        np.testing.assert_allclose(got, np.eye(4) + 0.001 * A, atol=1e-18)

    def test_matches_series_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            M = rng.uniform(-1.0, 1.0, (4, 4))
            M *= 8.0 / np.linalg.norm(M, 1)
            got = matrix_exponential(M)
            want = taylor_expm(M)
            assert np.linalg.norm(got - want) <= 1e-10 * np.linalg.norm(want)

    def test_semigroup_property(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            M = rng.uniform(-1.0, 1.0, (4, 4))
            M *= 10.0 / np.linalg.norm(M, 2)
            t1, t2 = rng.uniform(0.05, 1.0, 2)
            lhs = matrix_exponential(M, t1) @ matrix_exponential(M, t2)
            rhs = matrix_exponential(M, t1 + t2)
            assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(rhs)

    def test_overflow_guard(self):
        with pytest.raises(MatrixExponentialOverflowError):
            matrix_exponential(np.eye(2) * 1e300, 1.0)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            matrix_exponential(np.zeros((2, 3)))


class TestZohDiscretize:
    def test_nilpotent_closed_form(self):
        # k = c = 0: the series ends after the quadratic term, so
        # Ad = I + T*A and Bd = T*B + (T^2/2)*A@B hold to rounding.
        p = RobotParams(m1=0.2, m2=0.2, k=0.0, c=0.0)
        sys = build_siso(p)
        d = zoh_discretize(sys, 0.001)
        np.testing.assert_allclose(d.Ad, np.eye(4) + 0.001 * sys.A, atol=1e-14)
        want = np.array([[-2.5e-6], [-0.005], [2.5e-6], [0.005]])
        np.testing.assert_allclose(d.Bd, want, rtol=0, atol=1e-14)

    def test_first_order_limit(self):
        sys = build_mimo(RobotParams())
        d = zoh_discretize(sys, 1e-9)
        assert np.abs(d.Ad - (np.eye(4) + 1e-9 * sys.A)).max() < 1e-11
        assert np.abs(d.Bd - 1e-9 * sys.B).max() < 1e-11 * np.abs(sys.B).max()

    def test_matches_series_oracle_on_default_params(self):
        sys = build_mimo(RobotParams())
        d = zoh_discretize(sys, 0.001)
        aug = np.zeros((7, 7))
        aug[:4, :4] = sys.A
        aug[:4, 4:] = sys.B
        phi = taylor_expm(aug * 0.001, terms=30)
        assert np.linalg.norm(d.Ad - phi[:4, :4]) <= 1e-10 * np.linalg.norm(phi[:4, :4])
        assert np.linalg.norm(d.Bd - phi[:4, 4:]) <= 1e-10 * np.linalg.norm(phi[:4, 4:])

    def test_spectral_radius_bound(self):
        # A has no eigenvalue with positive real part for c >= 0
        rng = np.random.default_rng(5)
        for _ in range(20):
            p = RobotParams(m1=rng.uniform(0.05, 2.0), m2=rng.uniform(0.05, 2.0),
                            k=rng.uniform(1.0, 500.0), c=rng.uniform(0.0, 5.0))
            d = zoh_discretize(build_siso(p), 0.001)
            rho = np.abs(np.linalg.eigvals(d.Ad)).max()
            assert rho <= 1.0 + 1e-9

    def test_rejects_nonpositive_period(self):
        with pytest.raises(ValueError):
            zoh_discretize(build_siso(RobotParams()), 0.0)
        with pytest.raises(ValueError):
            DiscreteLTI(Ad=np.eye(4), Bd=np.zeros((4, 1)), T=-1.0)


class TestRankAndColumnSpace:
    def test_identity_rank(self):
        assert numerical_rank(np.eye(4)) == 4

    def test_zero_rank(self):
        assert numerical_rank(np.zeros((4, 4))) == 0

    def test_stacked_outer_products(self):
        u = np.array([1.0, 2.0, -1.0, 0.5])
        v = np.array([0.3, -0.7, 1.1, 2.0])
        M = np.column_stack([u, v, u + v, 2 * u - 3 * v])
        assert numerical_rank(M) == 2

    def test_rel_tol_validated(self):
        with pytest.raises(ValueError):
            numerical_rank(np.eye(2), rel_tol=0.0)

    def test_identity_basis_spans_r4(self):
        basis = column_space_basis(np.eye(4))
        np.testing.assert_allclose(projector(basis), np.eye(4), atol=1e-12)

    def test_chi_span_equal_masses(self):
        chi1 = np.array([1.0, 0.0, -1.0, 0.0])
        chi2 = np.array([0.0, 1.0, 0.0, -1.0])
        M = np.column_stack([chi1, chi2, chi1 + chi2])
        basis = column_space_basis(M)
        assert basis.shape[1] == 2
        assert subspaces_equal(basis, np.column_stack([chi1, chi2]))

    def test_zero_matrix_empty_basis(self):
        assert column_space_basis(np.zeros((4, 4))).shape == (4, 0)
