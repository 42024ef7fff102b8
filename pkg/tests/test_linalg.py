import pickle

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from momentevt.errors import DimensionMismatch, NotPositiveDefinite, NotSymmetric
from momentevt.linalg import (
    SpdMatrix,
    det_normalize,
    determinant,
    jacobi_eigen,
    mahalanobis_norm,
    operator_norm,
    spd_inverse,
    spd_sqrt,
)

from conftest import random_invertible, random_spd

PAIR = [[2.0, 1.0], [1.0, 2.0]]


def max_rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.abs(a - b).max() / np.abs(b).max()


class TestJacobi:
    def test_identity(self):
        eig = jacobi_eigen(np.eye(3))
        np.testing.assert_array_equal(eig.eigenvalues, [1, 1, 1])
        v = np.abs(eig.eigenvectors)
        # a permutation of the identity columns
        np.testing.assert_array_equal(np.sort(v, axis=0), np.sort(np.eye(3), axis=0))
        np.testing.assert_array_equal(v.sum(axis=0), [1, 1, 1])

    def test_diagonal_sorted_descending(self):
        np.testing.assert_array_equal(jacobi_eigen(np.diag([4.0, 9.0])).eigenvalues, [9, 4])

    def test_two_by_two(self):
        np.testing.assert_allclose(jacobi_eigen(PAIR).eigenvalues, [3, 1], rtol=1e-14)

    def test_rejects_asymmetric(self):
        with pytest.raises(NotSymmetric):
            jacobi_eigen([[1.0, 2.0], [0.0, 1.0]])

    def test_symmetry_tolerance_is_relative(self):
        m = np.array(PAIR) * 1e6
        m[0, 1] += 1e-8  # 1e-14 relative
        jacobi_eigen(m)

    def test_non_square(self):
        with pytest.raises(DimensionMismatch):
            jacobi_eigen(np.ones((2, 3)))

    def test_indefinite_allowed(self):
        np.testing.assert_allclose(jacobi_eigen(np.diag([2.0, -5.0])).eigenvalues, [2, -5])

    @pytest.mark.parametrize("d", [1, 2, 3, 5, 8, 15])
    def test_invariants_against_numpy(self, rng, d):
        a = random_spd(rng, d)
        eig = jacobi_eigen(a)
        assert max_rel(eig.reconstruct(), a) <= 1e-10
        v = eig.eigenvectors
        assert np.abs(v.T @ v - np.eye(d)).max() <= 1e-10
        np.testing.assert_allclose(eig.eigenvalues, np.linalg.eigvalsh(a)[::-1], rtol=1e-10)


class TestSpdMatrix:
    def test_rejects_not_pd(self):
        with pytest.raises(NotPositiveDefinite):
            SpdMatrix([[1.0, 2.0], [2.0, 1.0]])

    def test_rejects_near_singular(self):
        with pytest.raises(NotPositiveDefinite):
            SpdMatrix(np.diag([1.0, 1e-14]))

    def test_rejects_asymmetric(self):
        with pytest.raises(NotSymmetric):
            SpdMatrix([[2.0, 1.0], [0.5, 2.0]])

    def test_immutable(self):
        s = SpdMatrix(PAIR)
        with pytest.raises(AttributeError):
            s.values = np.eye(2)
        with pytest.raises(ValueError):
            s.values[0, 0] = 5.0

    def test_pickle_roundtrip(self):
        s = SpdMatrix(PAIR)
        t = pickle.loads(pickle.dumps(s))
        np.testing.assert_array_equal(t.values, s.values)


class TestOperations:
    def test_sqrt_examples(self):
        np.testing.assert_array_equal(spd_sqrt(np.eye(3)).values, np.eye(3))
        np.testing.assert_allclose(spd_sqrt(np.diag([4.0, 9.0])).values, np.diag([2.0, 3.0]), atol=1e-15)
        s = spd_sqrt(PAIR).values
        assert max_rel(s @ s, PAIR) <= 1e-10
        np.testing.assert_allclose(s, s.T, atol=0)

    def test_inverse_examples(self):
        np.testing.assert_array_equal(spd_inverse(np.eye(2)).values, np.eye(2))
        np.testing.assert_allclose(spd_inverse(np.diag([2.0, 4.0])).values, np.diag([0.5, 0.25]), atol=1e-15)
        np.testing.assert_allclose(
            spd_inverse(PAIR).values, np.array([[2.0, -1.0], [-1.0, 2.0]]) / 3, atol=1e-15
        )

    def test_determinant_examples(self):
        assert determinant(np.eye(4)) == 1.0
        assert determinant(np.diag([2.0, 8.0])) == pytest.approx(16.0, rel=1e-15)
        assert determinant(PAIR) == pytest.approx(3.0, rel=1e-14)

    def test_det_normalize_examples(self):
        np.testing.assert_allclose(det_normalize(np.diag([2.0, 8.0])).values, np.diag([0.5, 2.0]), rtol=1e-15)
        np.testing.assert_allclose(det_normalize(np.eye(3)).values, np.eye(3), atol=1e-15)

    def test_det_normalize_large_dimension_no_overflow(self):
        a = np.diag(np.full(20, 1e30))
        np.testing.assert_allclose(det_normalize(a).values, np.eye(20), rtol=1e-12)

    def test_mahalanobis_examples(self):
        assert mahalanobis_norm([1.0, 2.0], [1.0, 2.0], np.eye(2)) == 0.0
        assert mahalanobis_norm([3.0, 4.0], [0.0, 0.0], np.eye(2)) == pytest.approx(5.0, rel=1e-15)
        assert mahalanobis_norm([2.0, 0.0], [0.0, 0.0], np.diag([4.0, 1.0])) == pytest.approx(1.0, rel=1e-15)

    def test_mahalanobis_vectorized_matches_scalar(self, rng):
        shape = SpdMatrix(random_spd(rng, 3))
        x = rng.normal(size=(50, 3))
        c = rng.normal(size=3)
        many = mahalanobis_norm(x, c, shape)
        one = [mahalanobis_norm(row, c, shape) for row in x]
        np.testing.assert_allclose(many, one, rtol=1e-14)
        inv = np.linalg.inv(shape.values)
        oracle = np.sqrt(np.einsum("ij,jk,ik->i", x - c, inv, x - c))
        np.testing.assert_allclose(many, oracle, rtol=1e-10)

    def test_mahalanobis_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            mahalanobis_norm([1.0, 2.0, 3.0], [0.0, 0.0], np.eye(2))

    def test_operator_norm_examples(self):
        assert operator_norm(np.eye(3)) == 1.0
        assert operator_norm(np.diag([2.0, -5.0])) == pytest.approx(5.0, rel=1e-15)
        assert operator_norm(PAIR) == pytest.approx(3.0, rel=1e-14)

    def test_operator_norm_nonsymmetric_against_svd(self, rng):
        a = rng.normal(size=(4, 4))
        assert operator_norm(a) == pytest.approx(np.linalg.svd(a, compute_uv=False)[0], rel=1e-10)


spd_seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=1, max_value=8)


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(seed=spd_seeds, d=dims)
    def test_sqrt_squares_back(self, seed, d):
        a = random_spd(np.random.default_rng(seed), d)
        s = spd_sqrt(a).values
        assert max_rel(s @ s, a) <= 1e-9

    @settings(max_examples=60, deadline=None)
    @given(seed=spd_seeds, d=dims)
    def test_inverse_residual(self, seed, d):
        a = random_spd(np.random.default_rng(seed), d, eps=1.0)
        assert np.abs(a @ spd_inverse(a).values - np.eye(d)).max() <= 1e-10

    @settings(max_examples=60, deadline=None)
    @given(seed=spd_seeds, d=dims)
    def test_det_normalize_unit_and_idempotent(self, seed, d):
        a = random_spd(np.random.default_rng(seed), d)
        n1 = det_normalize(a)
        assert abs(determinant(n1) - 1.0) <= 1e-10
        assert abs(np.linalg.det(n1.values) - 1.0) <= 1e-10
        n2 = det_normalize(n1)
        assert np.abs(n2.values - n1.values).max() <= 1e-10 * np.abs(n1.values).max()
        # proportional to input
        ratio = n1.values / a
        np.testing.assert_allclose(ratio, ratio.flat[0], rtol=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(seed=spd_seeds, d=dims, c=st.floats(min_value=0.0, max_value=1e3))
    def test_mahalanobis_homogeneous(self, seed, d, c):
        rng = np.random.default_rng(seed)
        shape = SpdMatrix(random_spd(rng, d))
        center = rng.normal(size=d)
        u = rng.normal(size=d)
        base = mahalanobis_norm(center + u, center, shape)
        scaled = mahalanobis_norm(center + c * u, center, shape)
        assert scaled == pytest.approx(c * base, rel=1e-12, abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(seed=spd_seeds, d=dims)
    def test_mahalanobis_affine_invariant(self, seed, d):
        rng = np.random.default_rng(seed)
        sigma = random_spd(rng, d, eps=0.5)
        b = random_invertible(rng, d)
        x, mu = rng.normal(size=d), rng.normal(size=d)
        bs = b @ sigma @ b.T
        lhs = mahalanobis_norm(b @ x, b @ mu, 0.5 * (bs + bs.T))
        rhs = mahalanobis_norm(x, mu, sigma)
        assert lhs == pytest.approx(rhs, abs=1e-9, rel=1e-9)
