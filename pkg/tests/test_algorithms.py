"""
スケッチアルゴリズムのテスト
"""

import unittest

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from src.algorithms import (
    check_psd,
    generalized_nystrom,
    nystrom,
    randomized_svd,
    range_basis,
    residual_decomposition,
    schur_complement,
    sketch_and_solve,
    sketching_identity_term,
    weighting_gap,
)
from src.dense_core import frob_sq, pseudoinverse
from src.exceptions import DimensionMismatch, NotPsd, RankExceedsSketch


def _random_psd(rng, n, rank):
    G = rng.standard_normal((n, rank))
    return G @ G.T


def test_range_basis_full_rank():
    """[Q Q⊥] はユニタリで、Q は A の列空間を張る"""
    A = np.random.default_rng(3).standard_normal((12, 4))
    Q, Q_perp = range_basis(A)
    assert Q.shape == (12, 4)
    assert Q_perp.shape == (12, 8)
    U = np.hstack([Q, Q_perp])
    np.testing.assert_allclose(U.T @ U, np.eye(12), atol=1e-12)
    np.testing.assert_allclose(Q @ (Q.T @ A), A, atol=1e-12)


def test_range_basis_rank_deficient():
    """ランク落ちした A では Q の列数が数値ランクになる"""
    rng = np.random.default_rng(5)
    A = rng.standard_normal((10, 2)) @ rng.standard_normal((2, 5))
    Q, Q_perp = range_basis(A)
    assert Q.shape[1] == 2
    assert Q_perp.shape[1] == 8
    np.testing.assert_allclose(Q_perp.T @ A, 0.0, atol=1e-12)


def test_range_basis_zero_matrix():
    Q, Q_perp = range_basis(np.zeros((6, 3)))
    assert Q.shape == (6, 0)
    np.testing.assert_allclose(Q_perp.T @ Q_perp, np.eye(6), atol=1e-12)


class TestSketchAndSolve(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(42)

    def test_consistent_system(self):
        """B = AX₀ なら残差は 0"""
        A = self.rng.standard_normal((30, 4))
        B = A @ self.rng.standard_normal((4, 2))
        Omega = self.rng.standard_normal((30, 8))
        result = sketch_and_solve(A, B, Omega)
        self.assertLess(result.residual_sq, 1e-10)
        self.assertLess(result.optimal_residual_sq, 1e-10)

    def test_identity_sketch(self):
        """Ω = I なら X̂ = A⁺B"""
        A = self.rng.standard_normal((10, 3))
        B = self.rng.standard_normal((10, 1))
        result = sketch_and_solve(A, B, np.eye(10))
        np.testing.assert_allclose(result.xhat, pseudoinverse(A) @ B, atol=1e-10)
        self.assertAlmostEqual(result.residual_sq, result.optimal_residual_sq, places=10)
        self.assertAlmostEqual(result.ratio, 1.0, places=10)

    def test_matches_dense_normal_equations(self):
        A = np.array([[1.0], [0.0], [0.0]])
        B = np.array([1.0, 1.0, 1.0])
        Omega = np.array([[1.0, 2.0], [0.5, -1.0], [3.0, 1.0]])
        SA, SB = Omega.T @ A, Omega.T @ B[:, np.newaxis]
        expected = np.linalg.solve(SA.T @ SA, SA.T @ SB)
        result = sketch_and_solve(A, B, Omega)
        np.testing.assert_allclose(result.xhat, expected, atol=1e-12)

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            sketch_and_solve(np.ones((4, 2)), np.ones((3, 1)), np.ones((4, 2)))


class TestResidualDecomposition(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(7)

    def test_terms_sum_to_residual(self):
        A = self.rng.standard_normal((30, 4))
        B = self.rng.standard_normal((30, 2))
        Omega = self.rng.standard_normal((30, 10))
        cross, optimal = residual_decomposition(A, B, Omega)
        residual = sketch_and_solve(A, B, Omega).residual_sq
        self.assertAlmostEqual((cross + optimal) / residual, 1.0, places=9)

    def test_rank_deficient(self):
        """r < d でも分解は成り立つ"""
        A = self.rng.standard_normal((30, 2)) @ self.rng.standard_normal((2, 5))
        B = self.rng.standard_normal((30, 1))
        Omega = self.rng.standard_normal((30, 4))
        cross, optimal = residual_decomposition(A, B, Omega)
        residual = sketch_and_solve(A, B, Omega).residual_sq
        self.assertAlmostEqual((cross + optimal) / residual, 1.0, places=8)

    def test_range_and_identity_cases(self):
        A = self.rng.standard_normal((12, 3))
        cross, optimal = residual_decomposition(A, A @ np.ones((3, 1)), self.rng.standard_normal((12, 5)))
        self.assertLess(cross + optimal, 1e-20 + 1e-10)
        cross, optimal = residual_decomposition(A, self.rng.standard_normal((12, 1)), np.eye(12))
        self.assertLess(cross, 1e-20 + 1e-10)
        self.assertGreater(optimal, 0.0)

    def test_rank_exceeds_sketch(self):
        with self.assertRaises(RankExceedsSketch):
            residual_decomposition(self.rng.standard_normal((10, 4)), np.ones(10), self.rng.standard_normal((10, 3)))


def test_randomized_svd_coordinate_selection():
    """A = diag(3,2,1,0)、Ω = I の先頭 2 列なら誤差は 1"""
    A = np.diag([3.0, 2.0, 1.0, 0.0])
    result = randomized_svd(A, np.eye(4)[:, :2])
    assert result.err_sq == pytest.approx(1.0)


def test_randomized_svd_exact_capture_and_projector():
    rng = np.random.default_rng(3)
    low_rank = rng.standard_normal((10, 3)) @ rng.standard_normal((3, 20))
    assert randomized_svd(low_rank, rng.standard_normal((20, 5))).err_sq < 1e-18 * frob_sq(low_rank) + 1e-20

    A = rng.standard_normal((10, 20))
    Omega = rng.standard_normal((20, 5))
    U, _, _ = np.linalg.svd(A @ Omega, full_matrices=False)
    expected = frob_sq(A - U @ U.T @ A)
    assert randomized_svd(A, Omega).err_sq == pytest.approx(expected, rel=1e-10)


def test_nystrom_identity():
    """H = I、Ω が正規直交なら H⟨Ω⟩ = ΩΩ* で誤差は n − ℓ"""
    Q, _ = np.linalg.qr(np.random.default_rng(1).standard_normal((9, 4)))
    result = nystrom(np.eye(9), Q)
    np.testing.assert_allclose(result.approximation, Q @ Q.T, atol=1e-12)
    assert result.err_sq == pytest.approx(5.0)


def test_nystrom_gram_correspondence():
    """tr(H − H⟨Ω⟩) は H の平方根に対するランダム化SVDの誤差に等しい"""
    rng = np.random.default_rng(8)
    A = rng.standard_normal((12, 12))
    H = A.T @ A
    Omega = rng.standard_normal((12, 4))
    assert nystrom(H, Omega).err_sq == pytest.approx(randomized_svd(A, Omega).err_sq, rel=1e-8)


def test_nystrom_rejects_indefinite():
    with pytest.raises(NotPsd):
        nystrom(np.diag([1.0, -1.0]), np.eye(2))
    with pytest.raises(NotPsd):
        check_psd(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestSchurComplement(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_full_sketch(self):
        H = _random_psd(self.rng, 6, 6)
        residual = schur_complement(H, self.rng.standard_normal((6, 6)))
        np.testing.assert_allclose(residual, 0.0, atol=1e-7 * np.linalg.norm(H))

    def test_identity(self):
        Q, _ = np.linalg.qr(self.rng.standard_normal((7, 3)))
        np.testing.assert_allclose(schur_complement(np.eye(7), Q), np.eye(7) - Q @ Q.T, atol=1e-12)

    def test_invariant_under_right_multiplication(self):
        """H/(ΩM) = H/Ω"""
        H = _random_psd(self.rng, 10, 8)
        Omega = self.rng.standard_normal((10, 3))
        M = self.rng.standard_normal((3, 3)) + 3.0 * np.eye(3)
        np.testing.assert_allclose(schur_complement(H, Omega @ M), schur_complement(H, Omega), atol=1e-8)

    def test_psd(self):
        H = _random_psd(self.rng, 10, 10)
        S = schur_complement(H, self.rng.standard_normal((10, 4)))
        self.assertGreaterEqual(np.linalg.eigvalsh(S)[0], -1e-9 * np.linalg.norm(H, 2))


def test_generalized_nystrom_reduces_to_rsvd():
    """Ψ = I なら一般化 Nyström はランダム化SVD と一致する"""
    rng = np.random.default_rng(5)
    A = rng.standard_normal((8, 12))
    Omega = rng.standard_normal((12, 3))
    result = generalized_nystrom(A, Omega, np.eye(8))
    assert result.err_sq == pytest.approx(randomized_svd(A, Omega).err_sq, rel=1e-10)


def test_generalized_nystrom_coordinate_sketch():
    e1 = np.array([[1.0], [0.0]])
    result = generalized_nystrom(np.diag([5.0, 1.0]), e1, e1)
    np.testing.assert_allclose(result.approximation, np.diag([5.0, 0.0]))
    assert result.err_sq == pytest.approx(1.0)


def test_generalized_nystrom_direct_formula():
    rng = np.random.default_rng(6)
    A = rng.standard_normal((15, 12))
    Omega = rng.standard_normal((12, 3))
    Psi = rng.standard_normal((15, 6))
    direct = A @ Omega @ np.linalg.pinv(Psi.T @ A @ Omega) @ Psi.T @ A
    result = generalized_nystrom(A, Omega, Psi)
    assert result.err_sq == pytest.approx(frob_sq(A - direct), rel=1e-8)


@seed(20250101)
@settings(max_examples=50, deadline=None)
@given(
    rows=st.integers(2, 12),
    cols=st.integers(1, 6),
    key=st.integers(0, 2 ** 32 - 1),
)
def test_weighting_never_helps(rows, cols, key):
    """正則な R で重み付けしても ‖M⁺‖²_F は小さくならない"""
    cols = min(cols, rows)
    rng = np.random.default_rng(key)
    M = rng.standard_normal((rows, cols))
    R = rng.standard_normal((rows, rows)) + 2.0 * np.eye(rows)
    assert weighting_gap(M, R) >= -1e-9 * max(1.0, frob_sq(pseudoinverse(M)))


def test_sketching_identity_term_shapes():
    rng = np.random.default_rng(2)
    Omega = rng.standard_normal((10, 4))
    B = rng.standard_normal((7, 2))
    value = sketching_identity_term(Omega, 3, B)
    expected = frob_sq(np.linalg.pinv(Omega[:3].T) @ Omega[3:].T @ B)
    assert value == pytest.approx(expected, rel=1e-10)
    with pytest.raises(DimensionMismatch):
        sketching_identity_term(Omega, 3, np.ones((6, 1)))
