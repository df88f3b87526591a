"""
埋め込みサンプラーのテスト
"""

import unittest

import numpy as np
import pytest

from src.dense_core import FieldTag, adjoint
from src.embeddings import (
    EmbeddingKind,
    EmbeddingSpec,
    RngStream,
    default_rotations,
    haar_block_check,
    sample_beta,
    sample_embedding,
    sample_haar_unitary,
    sample_wishart,
)
from src.exceptions import InvalidSpec


ALL_KINDS = list(EmbeddingKind)
ORTHONORMAL = [EmbeddingKind.HAAR, EmbeddingKind.SRTT, EmbeddingKind.GIVENS]


def test_rng_stream_determinism():
    """同じ (seed, index, path) は同じ乱数列を返す"""
    a = RngStream(7, 3).spawn(1).generator().standard_normal(5)
    b = RngStream(7, 3, (1,)).generator().standard_normal(5)
    c = RngStream(7, 4).spawn(1).generator().standard_normal(5)
    d = RngStream(7, 3).spawn(2).generator().standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_sample_embedding_is_reproducible(kind):
    """すべての種類で同じストリームから同じ行列が得られる"""
    spec = EmbeddingSpec(kind, 64, 12)
    first = sample_embedding(spec, RngStream(11, 0))
    second = sample_embedding(spec, RngStream(11, 0))
    assert first.shape == (64, 12)
    np.testing.assert_array_equal(first, second)
    assert not np.array_equal(first, sample_embedding(spec, RngStream(11, 1)))


@pytest.mark.parametrize("kind", ORTHONORMAL)
@pytest.mark.parametrize("n", [10, 33, 64])
def test_orthonormal_kinds(kind, n):
    """HAAR / SRTT / GIVENS は正規直交列を持つ"""
    Omega = sample_embedding(EmbeddingSpec(kind, n, n // 2), RngStream(5, n))
    np.testing.assert_allclose(adjoint(Omega) @ Omega, np.eye(n // 2), atol=1e-10)


def test_haar_complex_is_unitary():
    U = sample_haar_unitary(12, FieldTag.COMPLEX, RngStream(2))
    assert np.iscomplexobj(U)
    np.testing.assert_allclose(adjoint(U) @ U, np.eye(12), atol=1e-12)


def test_complex_gaussian_entry_variance():
    """複素ガウスの成分は E|ω|² = 1"""
    Omega = sample_embedding(EmbeddingSpec(EmbeddingKind.GAUSSIAN, 400, 100, FieldTag.COMPLEX), RngStream(9))
    assert np.iscomplexobj(Omega)
    assert np.mean(np.abs(Omega) ** 2) == pytest.approx(1.0, abs=0.02)


def test_sign_and_uniform_entries():
    signs = sample_embedding(EmbeddingSpec(EmbeddingKind.SIGN, 50, 10), RngStream(1))
    assert set(np.unique(signs)) == {-1.0, 1.0}
    uniform = sample_embedding(EmbeddingSpec(EmbeddingKind.UNIFORM, 50, 10), RngStream(1))
    assert np.all(np.abs(uniform) <= 1.0)


def test_sparse_stack_nonzeros_per_row():
    """SparseStack は Ω の各行（Ω* の各列）にちょうど ζ 個の ±1/√ζ を持つ"""
    Omega = sample_embedding(EmbeddingSpec(EmbeddingKind.SPARSE_STACK, 100, 10, zeta=8), RngStream(4))
    np.testing.assert_array_equal(np.count_nonzero(Omega, axis=1), np.full(100, 8))
    np.testing.assert_allclose(np.abs(Omega[Omega != 0]), 1.0 / np.sqrt(8.0))
    np.testing.assert_allclose(np.sum(Omega ** 2, axis=1), 1.0)


def test_sparse_stack_blocks():
    """各行の非ゼロは ℓ 列を ζ 個に分けた連続ブロックに 1 つずつ入る"""
    Omega = sample_embedding(EmbeddingSpec(EmbeddingKind.SPARSE_STACK, 50, 20, zeta=4), RngStream(8))
    for block in range(4):
        np.testing.assert_array_equal(np.count_nonzero(Omega[:, 5 * block : 5 * block + 5], axis=1), np.ones(50))


def test_sparse_stack_zeta_above_ell():
    """ζ > ℓ なら各行のすべての成分が非ゼロになる"""
    Omega = sample_embedding(EmbeddingSpec(EmbeddingKind.SPARSE_STACK, 30, 4, zeta=8), RngStream(5))
    assert np.count_nonzero(Omega) == 30 * 4
    np.testing.assert_allclose(np.abs(Omega), 1.0 / np.sqrt(8.0))


def test_sparse_iid_density():
    """SparseIID の非ゼロ数の期待値は Ω の行あたり ζ"""
    Omega = sample_embedding(EmbeddingSpec(EmbeddingKind.SPARSE_IID, 200, 50), RngStream(6))
    assert abs(np.count_nonzero(Omega) - 16 * 200) < 150
    np.testing.assert_allclose(np.abs(Omega[Omega != 0]), 0.25)
    dense = sample_embedding(EmbeddingSpec(EmbeddingKind.SPARSE_IID, 40, 8), RngStream(6))
    assert np.count_nonzero(dense) == 40 * 8


def test_sparse_embeddings_touch_every_coordinate():
    """座標軸に沿った部分空間でも、先頭の行がスケッチから落ちない"""
    for kind in (EmbeddingKind.SPARSE_IID, EmbeddingKind.SPARSE_STACK):
        Omega = sample_embedding(EmbeddingSpec(kind, 300, 40), RngStream(12))
        assert np.linalg.matrix_rank(Omega[:10, :]) == 10


def test_default_rotations():
    assert default_rotations(1) == 0
    assert default_rotations(300) == 6845


class TestEmbeddingSpec(unittest.TestCase):
    def test_from_name_aliases(self):
        """名前とエイリアスから種類を引ける"""
        self.assertIs(EmbeddingKind.from_name("Sparse_IID"), EmbeddingKind.SPARSE_IID)
        self.assertIs(EmbeddingKind.from_name("orthonormal"), EmbeddingKind.HAAR)
        with self.assertRaises(InvalidSpec):
            EmbeddingKind.from_name("countsketch")

    def test_universality_class(self):
        self.assertIs(EmbeddingKind.SRTT.universality_class, EmbeddingKind.HAAR)
        self.assertIs(EmbeddingKind.SPARSE_STACK.universality_class, EmbeddingKind.GAUSSIAN)

    def test_invalid_dimensions(self):
        """ℓ > n、0 次元、実数専用の種類に複素数体は InvalidSpec"""
        with self.assertRaises(InvalidSpec):
            EmbeddingSpec(EmbeddingKind.GAUSSIAN, 5, 6)
        with self.assertRaises(InvalidSpec):
            EmbeddingSpec(EmbeddingKind.GAUSSIAN, 0, 0)
        with self.assertRaises(InvalidSpec):
            EmbeddingSpec(EmbeddingKind.SRTT, 10, 5, FieldTag.COMPLEX)
        with self.assertRaises(InvalidSpec):
            EmbeddingSpec(EmbeddingKind.SPARSE_STACK, 5, 2, zeta=6)
        with self.assertRaises(InvalidSpec):
            EmbeddingSpec(EmbeddingKind.SPARSE_IID, 5, 2, zeta=0)
        with self.assertRaises(InvalidSpec):
            EmbeddingSpec(EmbeddingKind.GIVENS, 5, 2, rotations=-1)

    def test_ell_equals_n_haar(self):
        """ℓ = n の HAAR はユニタリ"""
        Omega = sample_embedding(EmbeddingSpec(EmbeddingKind.HAAR, 8, 8), RngStream(3))
        np.testing.assert_allclose(Omega @ Omega.T, np.eye(8), atol=1e-12)


class TestMatrixSamplers(unittest.TestCase):
    def test_wishart_one_by_one(self):
        """r = ℓ = 1 の実 Wishart は g²"""
        stream = RngStream(21, 2)
        g = stream.generator().standard_normal((1, 1))
        W = sample_wishart(1, 1, FieldTag.REAL, stream)
        self.assertAlmostEqual(float(W[0, 0]), float(g[0, 0] ** 2))

    def test_wishart_hermitian_psd(self):
        W = sample_wishart(4, 9, FieldTag.COMPLEX, RngStream(5))
        np.testing.assert_allclose(W, adjoint(W), atol=1e-12)
        self.assertGreater(np.linalg.eigvalsh(W)[0], 0.0)

    def test_beta_full_embedding_is_identity(self):
        """ℓ = n なら Beta 行列は単位行列"""
        X = sample_beta(3, 10, 10, FieldTag.REAL, RngStream(8))
        np.testing.assert_allclose(X, np.eye(3), atol=1e-10)

    def test_beta_eigenvalues_in_unit_interval(self):
        for index in range(20):
            X = sample_beta(4, 6, 15, FieldTag.COMPLEX, RngStream(13, index))
            eigvals = np.linalg.eigvalsh(X)
            self.assertGreaterEqual(eigvals[0], -1e-10)
            self.assertLessEqual(eigvals[-1], 1.0 + 1e-10)

    def test_haar_block_full_rank_is_projection(self):
        """r = n なら Ω₁Ω₁* は range(Ω) への射影"""
        spec = EmbeddingSpec(EmbeddingKind.HAAR, 12, 5)
        top = haar_block_check(spec, RngStream(3), 12)
        P = top @ top.T
        np.testing.assert_allclose(P @ P, P, atol=1e-12)
        self.assertAlmostEqual(float(np.trace(P)), 5.0, places=10)

    def test_haar_block_mean(self):
        """n = 2、ℓ = r = 1 では E[Ω₁Ω₁*] = 1/2"""
        spec = EmbeddingSpec(EmbeddingKind.HAAR, 2, 1)
        values = [float(haar_block_check(spec, RngStream(17, i), 1)[0, 0] ** 2) for i in range(4000)]
        self.assertAlmostEqual(np.mean(values), 0.5, delta=0.03)

    def test_haar_block_rejects_other_kinds(self):
        with self.assertRaises(InvalidSpec):
            haar_block_check(EmbeddingSpec(EmbeddingKind.GAUSSIAN, 10, 3), RngStream(0), 2)
        with self.assertRaises(InvalidSpec):
            haar_block_check(EmbeddingSpec(EmbeddingKind.HAAR, 10, 3), RngStream(0), 11)
